//! Line-delimited JSON corpus files.
//!
//! Line 1 is the header record:
//!
//! ```text
//! {"format":"m2h-corpus","version":1,"vocabulary":["w0000",...],"theme_names":["fares",...]}
//! ```
//!
//! Every following non-blank line is one document:
//!
//! ```text
//! {"id":"train-0000","theme":3,"channel":"trs","split":"train","tokens":[12,7,...]}
//! ```
//!
//! Both channels of a conversation share `id`, `theme` and `split`. Pairs
//! are written TRS first, then ASR, in corpus order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Channel, Document, DocumentPair, ParallelCorpus, Split};
use crate::{Error, Result};

pub const CORPUS_FORMAT: &str = "m2h-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    vocabulary: Vec<String>,
    theme_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    theme: usize,
    channel: Channel,
    split: Split,
    tokens: Vec<u32>,
}

pub fn save_corpus(corpus: &ParallelCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = Header {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        vocabulary: corpus.vocabulary().to_vec(),
        theme_names: corpus.theme_names().to_vec(),
    };
    write_line(&mut out, path, &header)?;
    for pair in corpus.pairs() {
        for doc in [&pair.trs, &pair.asr] {
            let record = Record {
                id: doc.id.clone(),
                theme: doc.theme,
                channel: doc.channel,
                split: pair.split,
                tokens: doc.tokens.clone(),
            };
            write_line(&mut out, path, &record)?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn write_line<W: Write, T: Serialize>(out: &mut W, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<ParallelCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut header: Option<Header> = None;
    // id -> (line of first record, split, trs, asr)
    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut partial: Vec<(usize, Split, Option<Document>, Option<Document>)> = Vec::new();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(head) = &header else {
            let parsed: Header = serde_json::from_str(&line)
                .map_err(|e| parse_err(lineno, format!("missing vocabulary header ({e})")))?;
            if parsed.format != CORPUS_FORMAT {
                return Err(parse_err(lineno, format!("unknown format `{}`", parsed.format)));
            }
            if parsed.version != CORPUS_VERSION {
                return Err(parse_err(lineno, format!("unsupported version {}", parsed.version)));
            }
            if parsed.vocabulary.is_empty() {
                return Err(parse_err(lineno, "empty vocabulary".into()));
            }
            header = Some(parsed);
            continue;
        };

        let record: Record =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let doc = Document::new(record.id, record.theme, record.channel, record.tokens);
        doc.validate(head.vocabulary.len(), head.theme_names.len())
            .map_err(|e| parse_err(lineno, e.to_string()))?;

        let slot = *slots.entry(doc.id.clone()).or_insert_with(|| {
            partial.push((lineno, record.split, None, None));
            partial.len() - 1
        });
        let entry = &mut partial[slot];
        if entry.1 != record.split {
            return Err(parse_err(lineno, format!("split differs from line {}", entry.0)));
        }
        let (target, other) = match doc.channel {
            Channel::Trs => (&mut entry.2, entry.3.as_ref()),
            Channel::Asr => (&mut entry.3, entry.2.as_ref()),
        };
        if target.is_some() {
            return Err(parse_err(
                lineno,
                format!("duplicate {} record for `{}`", doc.channel, doc.id),
            ));
        }
        if other.is_some_and(|o| o.theme != doc.theme) {
            return Err(parse_err(lineno, format!("theme differs from line {}", entry.0)));
        }
        *target = Some(doc);
    }

    let Some(header) = header else {
        return Err(parse_err(1, "missing vocabulary header".into()));
    };
    let mut pairs = Vec::with_capacity(partial.len());
    for (lineno, split, trs, asr) in partial {
        match (trs, asr) {
            (Some(trs), Some(asr)) => pairs.push(DocumentPair { trs, asr, split }),
            (trs, _) => {
                let missing = if trs.is_some() { "asr" } else { "trs" };
                return Err(parse_err(lineno, format!("record has no {missing} twin")));
            }
        }
    }
    ParallelCorpus::new(header.vocabulary, header.theme_names, pairs)
}
