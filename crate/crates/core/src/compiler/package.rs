//! The compiled application and its single-file EAP1 container.
//!
//! ```text
//! "EAP1" | u32 LE version | u32 LE manifest_len | manifest (UTF-8 JSON) | EEF1 block
//! ```

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CompileConfig, CompileError, Result};
use crate::embedding_store::{decode_eef1, encode_eef1, Embedding, LabelEmbeddingSet};
use crate::ontology::{ExpansionTerm, OntologyGraph, Polarity, Relation};

pub const EAP1_MAGIC: &[u8; 4] = b"EAP1";
pub const APP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSeeds {
    pub name: String,
    pub seeds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExpansion {
    pub class: String,
    pub terms: Vec<ExpansionTerm>,
}

/// Compiled analytics package: symbolic expansion plus one embedding per label.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticsApp {
    pub version: u32,
    pub classes: Vec<ClassSeeds>,
    pub expansion: Vec<ClassExpansion>,
    pub label_embeddings: LabelEmbeddingSet,
    pub config: CompileConfig,
    pub provenance: String,
}

fn invalid(msg: impl Into<String>) -> CompileError {
    CompileError::Format(msg.into())
}

impl AnalyticsApp {
    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.name.as_str())
    }

    pub fn dim(&self) -> usize {
        self.label_embeddings.dim()
    }

    pub fn terms_for(&self, class: &str) -> Option<&[ExpansionTerm]> {
        self.expansion
            .iter()
            .find(|ce| ce.class == class)
            .map(|ce| ce.terms.as_slice())
    }

    /// Every `(class, term)` tagging of `label`, in class order.
    pub fn taggings<'a>(
        &'a self,
        label: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a ExpansionTerm)> + 'a {
        self.expansion.iter().flat_map(move |ce| {
            ce.terms
                .iter()
                .filter(move |t| t.term == label)
                .map(move |t| (ce.class.as_str(), t))
        })
    }

    /// Adds a term discovered after compilation. The label is appended to the
    /// embedding table if it is not already there.
    pub fn add_term(
        &mut self,
        class: &str,
        term: ExpansionTerm,
        embedding: Embedding,
    ) -> Result<()> {
        let ce = self
            .expansion
            .iter_mut()
            .find(|ce| ce.class == class)
            .ok_or_else(|| invalid(format!("unknown class {class:?}")))?;
        if ce.terms.iter().any(|t| t.term == term.term) {
            return Err(invalid(format!(
                "{:?} already tagged for {class:?}",
                term.term
            )));
        }
        if !self.label_embeddings.contains(&term.term) {
            self.label_embeddings.insert(&term.term, embedding)?;
        }
        ce.terms.push(term);
        Ok(())
    }

    /// Checks the package invariants.
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(invalid("no classes"));
        }
        let declared: Vec<&str> = self.class_names().collect();
        let expanded: Vec<&str> = self.expansion.iter().map(|ce| ce.class.as_str()).collect();
        if declared != expanded {
            return Err(invalid(format!(
                "expansion classes {expanded:?} do not match declared classes {declared:?}"
            )));
        }
        let mut referenced = HashSet::new();
        for (class, ce) in self.classes.iter().zip(&self.expansion) {
            if class.seeds.is_empty() {
                return Err(invalid(format!("class {:?} has no seeds", class.name)));
            }
            let mut tagged = HashSet::new();
            for t in &ce.terms {
                if !tagged.insert(t.term.as_str()) {
                    return Err(invalid(format!(
                        "{:?} tagged twice for {:?}",
                        t.term, ce.class
                    )));
                }
                if !class.seeds.contains(&t.source_seed) {
                    return Err(invalid(format!(
                        "{:?} derives from {:?}, not a seed of {:?}",
                        t.term, t.source_seed, ce.class
                    )));
                }
                if (t.depth == 0) != (t.term == t.source_seed) {
                    return Err(invalid(format!(
                        "{:?}: depth {} inconsistent with seed",
                        t.term, t.depth
                    )));
                }
                if !(t.weight > 0.0 && t.weight <= 1.0) {
                    return Err(invalid(format!(
                        "{:?}: weight {} outside (0, 1]",
                        t.term, t.weight
                    )));
                }
                if !self.label_embeddings.contains(&t.term) {
                    return Err(invalid(format!("{:?} has no embedding", t.term)));
                }
                referenced.insert(t.term.as_str());
            }
            for seed in &class.seeds {
                if !ce.terms.iter().any(|t| &t.term == seed && t.depth == 0) {
                    return Err(invalid(format!("seed {seed:?} missing from expansion")));
                }
            }
        }
        if let Some(extra) = self
            .label_embeddings
            .labels()
            .iter()
            .find(|l| !referenced.contains(l.as_str()))
        {
            return Err(invalid(format!(
                "embedding for unreferenced label {extra:?}"
            )));
        }
        Ok(())
    }

    /// Re-exports the expansion as an ontology: `class -hyponym-> seed` and
    /// `seed -related/antonym-> term` edges carrying the term's path weight.
    pub fn export_ontology(&self) -> OntologyGraph {
        let mut g = OntologyGraph::new();
        for (class, ce) in self.classes.iter().zip(&self.expansion) {
            for seed in &class.seeds {
                if seed != &class.name {
                    g.add_edge(&class.name, Relation::Hyponym, seed, 1.0)
                        .expect("canonical, distinct endpoints");
                }
            }
            for t in ce.terms.iter().filter(|t| t.depth > 0) {
                let relation = match t.polarity {
                    Polarity::Negative => Relation::Antonym,
                    Polarity::Positive | Polarity::Discriminative => Relation::Related,
                };
                g.add_edge(&t.source_seed, relation, &t.term, t.weight)
                    .expect("validated expansion term");
            }
        }
        g
    }

    /// Labels tagged for each class, keyed by class name.
    pub fn labels_by_class(&self) -> HashMap<&str, Vec<&ExpansionTerm>> {
        self.expansion
            .iter()
            .map(|ce| (ce.class.as_str(), ce.terms.iter().collect()))
            .collect()
    }
}

#[derive(Serialize)]
struct ManifestRef<'a> {
    classes: &'a [ClassSeeds],
    expansion: &'a [ClassExpansion],
    config: &'a CompileConfig,
    provenance: &'a str,
}

#[derive(Deserialize)]
struct Manifest {
    classes: Vec<ClassSeeds>,
    expansion: Vec<ClassExpansion>,
    config: CompileConfig,
    provenance: String,
}

pub fn encode_app(app: &AnalyticsApp) -> Result<Vec<u8>> {
    let manifest = serde_json::to_vec(&ManifestRef {
        classes: &app.classes,
        expansion: &app.expansion,
        config: &app.config,
        provenance: &app.provenance,
    })
    .map_err(|e| invalid(e.to_string()))?;
    let len = u32::try_from(manifest.len()).map_err(|_| invalid("manifest exceeds 4 GiB"))?;
    let block = encode_eef1(&app.label_embeddings)?;
    let mut out = Vec::with_capacity(12 + manifest.len() + block.len());
    out.extend_from_slice(EAP1_MAGIC);
    out.extend_from_slice(&app.version.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&manifest);
    out.extend_from_slice(&block);
    Ok(out)
}

pub fn decode_app(bytes: &[u8]) -> Result<AnalyticsApp> {
    if bytes.len() < 12 {
        return Err(invalid("truncated package header"));
    }
    if &bytes[..4] != EAP1_MAGIC {
        return Err(invalid(format!("bad magic {:?}", &bytes[..4])));
    }
    let word =
        |at: usize| u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
    let version = word(4);
    if version != APP_FORMAT_VERSION {
        return Err(CompileError::VersionUnsupported(version));
    }
    let len = word(8) as usize;
    let manifest_end = 12usize
        .checked_add(len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| invalid("truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(&bytes[12..manifest_end])
        .map_err(|e| invalid(format!("manifest: {e}")))?;
    let embeddings = decode_eef1(&bytes[manifest_end..])?;
    let app = AnalyticsApp {
        version,
        classes: manifest.classes,
        expansion: manifest.expansion,
        label_embeddings: embeddings.set,
        config: manifest.config,
        provenance: manifest.provenance,
    };
    app.validate()?;
    Ok(app)
}

pub fn save_app(app: &AnalyticsApp, path: impl AsRef<Path>) -> Result<PathBuf> {
    fs::write(path.as_ref(), encode_app(app)?)?;
    Ok(path.as_ref().to_path_buf())
}

pub fn load_app(path: impl AsRef<Path>) -> Result<AnalyticsApp> {
    decode_app(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::super::{compile_app, CompileConfig, SeedsByClass};
    use super::*;
    use crate::provider::{synthetic_provider, EmbeddingProvider};

    fn app() -> AnalyticsApp {
        let g = OntologyGraph::parse_tsv(
            "fire\trelated\tsmoke\t0.9\nsmoke\trelated\thaze\t0.5\nfire\tantonym\tcalm\nshopping\trelated\tstore\n",
        )
        .unwrap();
        let seeds: SeedsByClass = [
            ("fire".to_string(), vec!["fire".to_string()]),
            (
                "retail".to_string(),
                vec!["shopping".to_string(), "gas_leak".to_string()],
            ),
        ]
        .into_iter()
        .collect();
        compile_app(
            &seeds,
            &g,
            &synthetic_provider(7, 8),
            &CompileConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let a = app();
        let bytes = encode_app(&a).unwrap();
        assert_eq!(&bytes[..4], b"EAP1");
        let b = decode_app(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(encode_app(&b).unwrap(), bytes);
    }

    #[test]
    fn version_checked() {
        let mut bytes = encode_app(&app()).unwrap();
        bytes[4..8].copy_from_slice(&999u32.to_le_bytes());
        assert!(matches!(
            decode_app(&bytes),
            Err(CompileError::VersionUnsupported(999))
        ));
    }

    #[test]
    fn corrupt_packages_are_format_errors() {
        let bytes = encode_app(&app()).unwrap();
        assert!(matches!(
            decode_app(&bytes[..8]),
            Err(CompileError::Format(_))
        ));
        assert!(matches!(
            decode_app(&bytes[..40]),
            Err(CompileError::Format(_))
        ));
        let mut magic = bytes.clone();
        magic[0] = b'Z';
        assert!(matches!(decode_app(&magic), Err(CompileError::Format(_))));
        assert!(decode_app(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn validate_catches_dangling_labels() {
        let mut a = app();
        a.expansion[0].terms.push(ExpansionTerm {
            term: "ghost".into(),
            polarity: Polarity::Positive,
            source_seed: "fire".into(),
            depth: 1,
            weight: 0.5,
        });
        assert!(a.validate().is_err());
    }

    #[test]
    fn export_contains_every_expansion_edge() {
        let a = app();
        let g = OntologyGraph::parse_tsv(&a.export_ontology().to_tsv()).unwrap();
        for ce in &a.expansion {
            for t in ce.terms.iter().filter(|t| t.depth > 0) {
                let rel = if t.polarity == Polarity::Negative {
                    Relation::Antonym
                } else {
                    Relation::Related
                };
                assert_eq!(
                    g.edge_weight(&t.source_seed, rel, &t.term),
                    Some(t.weight),
                    "{}",
                    t.term
                );
            }
        }
        assert!(g
            .edge_weight("retail", Relation::Hyponym, "shopping")
            .is_some());
    }

    #[test]
    fn add_term_extends_labels() {
        let mut a = app();
        let e = synthetic_provider(7, 8).embed_text("flame").unwrap();
        let t = ExpansionTerm {
            term: "flame".into(),
            polarity: Polarity::Positive,
            source_seed: "fire".into(),
            depth: 1,
            weight: 1.0,
        };
        a.add_term("fire", t.clone(), e.clone()).unwrap();
        assert!(a.label_embeddings.contains("flame"));
        a.validate().unwrap();
        assert!(a.add_term("fire", t.clone(), e.clone()).is_err());
        assert!(a.add_term("nope", t, e).is_err());
    }
}
