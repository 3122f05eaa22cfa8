use rand::Rng;

use super::LdaModel;
use crate::corpus::Document;
use crate::{seeded_rng, Error, Result};

/// Fold-in inference of topic proportions for a held-out document.
///
/// Topic-word statistics stay frozen; only the document's own assignments
/// are resampled. Returns the mean of `(n_dt + alpha) / (len + T alpha)`
/// over the sweeps after `burn_in`.
pub fn infer_topics(
    model: &LdaModel,
    doc: &Document,
    iterations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if doc.tokens.is_empty() {
        return Err(Error::InvalidInput(format!("document `{}` has no tokens", doc.id)));
    }
    if iterations <= burn_in {
        return Err(Error::Config(format!(
            "fold-in iterations ({iterations}) must exceed burn-in ({burn_in})"
        )));
    }
    let v = model.vocab_size();
    if let Some(&w) = doc.tokens.iter().find(|&&w| w as usize >= v) {
        return Err(Error::InvalidInput(format!(
            "document `{}`: token {w} outside vocabulary of {v}",
            doc.id
        )));
    }

    let t = model.topics();
    let alpha = model.alpha();
    if t == 1 {
        return Ok(vec![1.0]);
    }

    let mut rng = seeded_rng(seed);
    let mut counts = vec![0u32; t];
    let mut z: Vec<usize> = doc
        .tokens
        .iter()
        .map(|_| {
            let k = rng.random_range(0..t);
            counts[k] += 1;
            k
        })
        .collect();

    let mut cumulative = vec![0.0; t];
    let mut mean = vec![0.0; t];
    let norm = doc.tokens.len() as f64 + t as f64 * alpha;
    for sweep in 0..iterations {
        for (i, &w) in doc.tokens.iter().enumerate() {
            counts[z[i]] -= 1;
            let phi = model.word_probs(w as usize);
            let mut total = 0.0;
            for k in 0..t {
                total += (counts[k] as f64 + alpha) * phi[k];
                cumulative[k] = total;
            }
            let u = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(t - 1);
            counts[k] += 1;
            z[i] = k;
        }
        if sweep >= burn_in {
            for k in 0..t {
                mean[k] += (counts[k] as f64 + alpha) / norm;
            }
        }
    }

    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|m| *m /= total);
    Ok(mean)
}
