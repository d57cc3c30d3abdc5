//! Parsing of file and flag inputs shared by the subcommands.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use zsa::compiler::{CompileConfig, GridShape, SeedsByClass};
use zsa::inference::{ontology_walk_reasoner, remote_reasoner, Reasoner};
use zsa::provider::{EmbeddingProvider, FileProvider, HttpProvider};
use zsa::{load_embeddings, load_ontology, synthetic_provider, Embedding, Relation};

use crate::error::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedsFile {
    classes: SeedsByClass,
}

pub fn read_seeds(path: &Path) -> Result<SeedsByClass, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    let parsed: SeedsFile =
        serde_json::from_str(&text).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(parsed.classes)
}

/// Splits `http:URL` forms; a bare `http://` or `https://` URL is accepted too.
fn http_url(spec: &str) -> Option<&str> {
    if spec.starts_with("http://") || spec.starts_with("https://") {
        Some(spec)
    } else {
        spec.strip_prefix("http:")
    }
}

pub fn open_provider(
    spec: &str,
    timeout: Duration,
) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if let Some(url) = http_url(spec) {
        return Ok(Box::new(HttpProvider::connect(url, timeout)?));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let p = FileProvider::open(path).map_err(|e| CliError::from(e).context(path))?;
        return Ok(Box::new(p));
    }
    if let Some(rest) = spec.strip_prefix("synthetic:") {
        let bad = || CliError::usage(format!("expected synthetic:SEED:DIM, got {spec:?}"));
        let (seed, dim) = rest.split_once(':').ok_or_else(bad)?;
        let seed: u64 = seed.parse().map_err(|_| bad())?;
        let dim: usize = dim.parse().map_err(|_| bad())?;
        if dim < 2 {
            return Err(CliError::usage("synthetic provider needs dim >= 2"));
        }
        return Ok(Box::new(synthetic_provider(seed, dim)));
    }
    Err(CliError::usage(format!(
        "unknown provider {spec:?}; use synthetic:SEED:DIM, file:PATH or http:URL"
    )))
}

pub fn open_reasoner(
    spec: &str,
    cfg: &CompileConfig,
    timeout: Duration,
) -> Result<Box<dyn Reasoner>, CliError> {
    if let Some(url) = http_url(spec) {
        return Ok(Box::new(remote_reasoner(url, timeout)));
    }
    if let Some(path) = spec.strip_prefix("walk:") {
        let g = load_ontology(path).map_err(|e| CliError::from(e).context(path))?;
        return Ok(Box::new(ontology_walk_reasoner(&g, cfg)));
    }
    Err(CliError::usage(format!(
        "unknown reasoner {spec:?}; use walk:ONTOLOGY or http:URL"
    )))
}

/// An embedding given inline (`[0.1, 0.2]` or `0.1,0.2`) or as an embedding
/// file, from which `label` (or the only entry) is taken.
pub fn read_embedding(arg: &str, label: Option<&str>) -> Result<Embedding, CliError> {
    let trimmed = arg.trim();
    let inline = if trimmed.starts_with('[') {
        Some(serde_json::from_str::<Vec<f32>>(trimmed)?)
    } else if !Path::new(trimmed).exists() && trimmed.contains(',') {
        let values = trimmed
            .split(',')
            .map(|x| x.trim().parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::data(format!("inline embedding: {e}")))?;
        Some(values)
    } else {
        None
    };
    if let Some(values) = inline {
        return Ok(Embedding::unit(values)?);
    }
    let set = load_embeddings(trimmed)
        .map_err(|e| CliError::from(e).context(trimmed))?
        .set;
    match label {
        Some(l) => set
            .lookup(l)
            .cloned()
            .ok_or_else(|| CliError::data(format!("no label {l:?} in {trimmed}"))),
        None if set.len() == 1 => Ok(set.embeddings()[0].clone()),
        None => Err(CliError::usage(format!(
            "{trimmed} holds {} embeddings; pick one with --label",
            set.len()
        ))),
    }
}

pub fn parse_relations(list: &str) -> Result<BTreeSet<Relation>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<Relation>()
                .map_err(|_| CliError::usage(format!("unknown relation {s:?}")))
        })
        .collect()
}

pub fn parse_grid(spec: &str) -> Result<GridShape, CliError> {
    let bad = || CliError::usage(format!("expected ROWSxCOLS, got {spec:?}"));
    let (r, c) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok(GridShape {
        rows: r.trim().parse().map_err(|_| bad())?,
        cols: c.trim().parse().map_err(|_| bad())?,
    })
}

/// Labels from a newline-separated file; blank lines and `#` comments skipped.
pub fn read_label_list(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
