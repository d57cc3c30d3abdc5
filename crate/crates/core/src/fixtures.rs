//! Bundled demo/test data.

use crate::ontology::OntologyGraph;

/// Safety, security and retail vocabulary (~200 edges).
pub const FIXTURE_ONTOLOGY_TSV: &str = include_str!("../data/fixture_ontology.tsv");

pub fn fixture_ontology() -> OntologyGraph {
    OntologyGraph::parse_tsv(FIXTURE_ONTOLOGY_TSV).expect("bundled fixture parses")
}
