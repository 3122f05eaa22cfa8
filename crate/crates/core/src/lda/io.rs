//! JSON serialization of LDA runs and embedders.
//!
//! A model file stores `topics`, `alpha`, `beta`, `vocab_size` and the
//! `topics x vocab_size` count matrix as nested arrays. An embedder file
//! stores the channel and the relative paths of its run files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Embedder, EmbeddingVector, LdaModel, LdaParams};
use crate::corpus::{Channel, Split};
use crate::{Error, Result};

const MODEL_FORMAT: &str = "m2h-lda";
const EMBEDDER_FORMAT: &str = "m2h-embedder";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    topics: usize,
    alpha: f64,
    beta: f64,
    vocab_size: usize,
    topic_word_counts: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedderFile {
    format: String,
    version: u32,
    channel: Channel,
    runs: Vec<PathBuf>,
}

fn check_header(path: &Path, format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!(
            "{}: expected format `{expected}`, found `{format}`",
            path.display()
        )));
    }
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn save_model(model: &LdaModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: VERSION,
        topics: model.topics(),
        alpha: model.alpha(),
        beta: model.beta(),
        vocab_size: model.vocab_size(),
        topic_word_counts: (0..model.topics()).map(|t| model.topic_row(t).to_vec()).collect(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LdaModel> {
    let path = path.as_ref();
    let file: ModelFile = read_json(path)?;
    check_header(path, &file.format, file.version, MODEL_FORMAT)?;
    if file.topic_word_counts.len() != file.topics
        || file.topic_word_counts.iter().any(|row| row.len() != file.vocab_size)
    {
        return Err(Error::Format(format!(
            "{}: count matrix is not {} x {}",
            path.display(),
            file.topics,
            file.vocab_size
        )));
    }
    let params = LdaParams {
        topics: file.topics,
        alpha: file.alpha,
        beta: file.beta,
    };
    LdaModel::from_counts(params, file.vocab_size, file.topic_word_counts.concat())
}

/// Writes `<dir>/embedder-<channel>.json` and one model file per run next
/// to it; returns the embedder file path.
pub fn save_embedder(embedder: &Embedder, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let channel = embedder.channel().as_str();
    let mut runs = Vec::new();
    for (r, model) in embedder.runs().iter().enumerate() {
        let name = PathBuf::from(format!("lda-{channel}-run{r:02}.json"));
        save_model(model, dir.join(&name))?;
        runs.push(name);
    }
    let path = dir.join(format!("embedder-{channel}.json"));
    write_json(
        &path,
        &EmbedderFile {
            format: EMBEDDER_FORMAT.into(),
            version: VERSION,
            channel: embedder.channel(),
            runs,
        },
    )?;
    Ok(path)
}

/// Run paths are resolved relative to the embedder file's directory.
pub fn load_embedder(path: impl AsRef<Path>) -> Result<Embedder> {
    let path = path.as_ref();
    let file: EmbedderFile = read_json(path)?;
    check_header(path, &file.format, file.version, EMBEDDER_FORMAT)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let runs = file
        .runs
        .iter()
        .map(|run| load_model(base.join(run)))
        .collect::<Result<Vec<_>>>()?;
    Embedder::new(file.channel, runs)
}

/// One embedded document, as written by [`save_embeddings`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub id: String,
    pub split: Split,
    pub theme: usize,
    pub channel: Channel,
    pub embedding: EmbeddingVector,
}

/// Writes one JSON record per line.
pub fn save_embeddings(records: &[EmbeddingRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records: Vec<EmbeddingRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: EmbeddingRecord = serde_json::from_str(line).map_err(|e| parse(e.to_string()))?;
        if let Some(first) = records.first() {
            if record.embedding.len() != first.embedding.len() {
                return Err(parse(format!(
                    "embedding has {} values, expected {}",
                    record.embedding.len(),
                    first.embedding.len()
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}
