//! Word error rate by minimum edit distance with unit costs.

use super::Document;
use crate::{Error, Result};

/// Operation counts of one minimum-cost alignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Aligns `hypothesis` against `reference`. Ties in the backtrace prefer
/// match/substitution, then deletion, then insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        cost[i * width] = i;
    }
    for j in 0..=m {
        cost[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut counts = EditCounts {
        reference_len: n,
        ..EditCounts::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let mismatch = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if cost[(i - 1) * width + j - 1] + mismatch == here {
                counts.substitutions += mismatch;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && cost[(i - 1) * width + j] + 1 == here {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// `(S + D + I) / len(reference)`.
pub fn word_error_rate<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("WER is undefined for an empty reference".into()));
    }
    let counts = align(reference, hypothesis);
    Ok(counts.errors() as f64 / reference.len() as f64)
}

pub fn measure_wer(reference: &Document, hypothesis: &Document) -> Result<f64> {
    word_error_rate(&reference.tokens, &hypothesis.tokens)
}

/// Corpus-level WER: total edits over total reference length.
pub fn corpus_wer<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a Document, &'a Document)>,
{
    let mut errors = 0usize;
    let mut words = 0usize;
    for (reference, hypothesis) in pairs {
        let counts = align(&reference.tokens, &hypothesis.tokens);
        errors += counts.errors();
        words += counts.reference_len;
    }
    if words == 0 {
        return Err(Error::InvalidInput("WER is undefined for an empty reference".into()));
    }
    Ok(errors as f64 / words as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_is_zero() {
        assert_eq!(word_error_rate(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn single_substitution() {
        let wer = word_error_rate(&["a", "b", "c"], &["a", "x", "c"]).unwrap();
        assert!((wer - 1.0 / 3.0).abs() < 1e-15);
        let counts = align(&["a", "b", "c"], &["a", "x", "c"]);
        assert_eq!(counts.substitutions, 1);
        assert_eq!(counts.errors(), 1);
    }

    #[test]
    fn empty_hypothesis_is_all_deletions() {
        let empty: [&str; 0] = [];
        assert_eq!(word_error_rate(&["a", "b"], &empty).unwrap(), 1.0);
        assert_eq!(align(&["a", "b"], &empty).deletions, 2);
    }

    #[test]
    fn empty_reference_is_an_error() {
        let empty: [u32; 0] = [];
        assert!(word_error_rate(&empty, &[1]).is_err());
    }

    #[test]
    fn insertions_can_exceed_one() {
        assert_eq!(word_error_rate(&[1], &[2, 3, 4]).unwrap(), 3.0);
    }

    /// Plain recursive edit distance, exponential but exact for short inputs.
    fn brute_distance(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = brute_distance(ra, rb) + usize::from(x != y);
                let del = brute_distance(ra, b) + 1;
                let ins = brute_distance(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    proptest! {
        #[test]
        fn alignment_cost_matches_recursive_oracle(
            a in proptest::collection::vec(0u8..4, 0..7),
            b in proptest::collection::vec(0u8..4, 0..7),
        ) {
            let counts = align(&a, &b);
            prop_assert_eq!(counts.errors(), brute_distance(&a, &b));
            // Counts are consistent with the two sequence lengths.
            prop_assert_eq!(a.len() - counts.deletions + counts.insertions, b.len());
        }

        #[test]
        fn wer_zero_iff_identical(
            a in proptest::collection::vec(0u8..3, 1..8),
            b in proptest::collection::vec(0u8..3, 0..8),
        ) {
            let wer = word_error_rate(&a, &b).unwrap();
            prop_assert_eq!(wer == 0.0, a == b);
        }

        #[test]
        fn deletions_only_bounded_by_one(
            a in proptest::collection::vec(0u8..5, 1..12),
            keep in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let hyp: Vec<u8> = a.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect();
            prop_assert!(word_error_rate(&a, &hyp).unwrap() <= 1.0);
        }
    }
}
