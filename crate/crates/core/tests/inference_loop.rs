mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::{MockServer, Reply};
use serde_json::Value;
use zsa::compiler::embed_label;
use zsa::fixtures::fixture_ontology;
use zsa::inference::{ontology_walk_reasoner, remote_reasoner, EmptyReasoner, InferenceError};
use zsa::provider::{ProviderError, SyntheticProvider};
use zsa::*;

fn fire_app(provider: &SyntheticProvider) -> AnalyticsApp {
    let seeds: SeedsByClass = [
        ("fire".to_string(), vec!["fire".to_string()]),
        ("fighting".to_string(), vec!["fighting".to_string()]),
    ]
    .into();
    let cfg = CompileConfig {
        max_depth: 1,
        ..CompileConfig::default()
    };
    compile_app(&seeds, &fixture_ontology(), provider, &cfg).unwrap()
}

fn mixture(provider: &SyntheticProvider, parts: &[(&str, f32)]) -> Embedding {
    let mut acc = vec![0.0f32; provider.dim()];
    for (label, w) in parts {
        for (a, x) in acc
            .iter_mut()
            .zip(embed_label(provider, label).unwrap().values())
        {
            *a += w * x;
        }
    }
    Embedding::unit(acc).unwrap()
}

fn reasoning() -> LoopConfig {
    LoopConfig {
        reasoning_enabled: true,
        ..LoopConfig::default()
    }
}

#[test]
fn disabled_reasoning_is_plain_affinity() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("fire", 1.0), ("brawl", 0.3)]);
    let report = run_inference(&app, &v, None, None, &LoopConfig::default()).unwrap();
    let expected = compute_affinity(&v, &app.label_embeddings, 1.0).unwrap();
    assert_eq!(report.cycles_run, 1);
    assert!(report.converged);
    assert_eq!(report.final_affinity, expected);
    assert_eq!(report.class_scores, classify(&app, &expected).unwrap());
    assert_eq!(report.predicted_class(), Some("fire"));
}

#[test]
fn empty_reasoner_converges_on_second_cycle() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("fighting", 1.0)]);
    let report = run_inference(&app, &v, Some(&EmptyReasoner), Some(&p), &reasoning()).unwrap();
    assert!(report.converged);
    assert_eq!(report.cycles_run, 2);
    assert!(report.per_cycle[1].labels_added.is_empty());
    assert_eq!(report.per_cycle[0].affinity, report.per_cycle[1].affinity);
}

#[test]
fn walk_reasoner_grows_labels_and_terminates() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    // "smoke alarm" sits two hops from the seed, beyond the compiled depth
    let v = mixture(&p, &[("smoke", 0.6), ("smoke alarm", 0.8)]);
    let walk = ontology_walk_reasoner(&fixture_ontology(), &app.config);
    let cfg = reasoning();
    let report = run_inference(&app, &v, Some(&walk), Some(&p), &cfg).unwrap();

    assert!(report.cycles_run <= cfg.max_cycles);
    assert_eq!(report.per_cycle.len(), report.cycles_run);
    let sizes: Vec<usize> = report.per_cycle.iter().map(|c| c.affinity.len()).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
    let added: Vec<&String> = report
        .per_cycle
        .iter()
        .flat_map(|c| &c.labels_added)
        .collect();
    assert!(added.iter().any(|l| *l == "smoke alarm"), "{added:?}");
    assert_eq!(report.final_affinity.top().unwrap().label, "smoke alarm");
    assert_eq!(report.predicted_class(), Some("fire"));
    // the input app is untouched
    assert!(!app.label_embeddings.contains("smoke alarm"));
}

#[test]
fn walk_reasoner_respects_max_cycles() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("smoke", 0.6), ("smoke alarm", 0.8)]);
    let walk = ontology_walk_reasoner(&fixture_ontology(), &app.config);
    for max_cycles in 1..4 {
        let cfg = LoopConfig {
            max_cycles,
            ..reasoning()
        };
        let report = run_inference(&app, &v, Some(&walk), Some(&p), &cfg).unwrap();
        assert!(report.cycles_run <= max_cycles);
    }
}

#[test]
fn reasoning_without_tools_is_config_error() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("fire", 1.0)]);
    for (r, prov) in [
        (None, Some(&p as &dyn EmbeddingProvider)),
        (Some(&EmptyReasoner as &dyn Reasoner), None),
    ] {
        let err = run_inference(&app, &v, r, prov, &reasoning()).unwrap_err();
        assert!(matches!(err, InferenceError::Config(_)), "{err}");
    }
    let other = synthetic_provider(42, 16);
    let err =
        run_inference(&app, &v, Some(&EmptyReasoner), Some(&other), &reasoning()).unwrap_err();
    assert!(matches!(err, InferenceError::Config(_)));
    let short = Embedding::unit(vec![1.0, 0.0]).unwrap();
    assert!(matches!(
        run_inference(&app, &short, None, None, &LoopConfig::default()),
        Err(InferenceError::DimensionMismatch {
            expected: 32,
            actual: 2
        })
    ));
}

struct Broken(SyntheticProvider);

impl EmbeddingProvider for Broken {
    fn id(&self) -> &str {
        "broken"
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        Err(ProviderError::Failed {
            label: label.into(),
            reason: "offline".into(),
        })
    }
}

#[test]
fn provider_failure_returns_partial_report() {
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("smoke", 0.6), ("smoke alarm", 0.8)]);
    let walk = ontology_walk_reasoner(&fixture_ontology(), &app.config);
    let err = run_inference(
        &app,
        &v,
        Some(&walk),
        Some(&Broken(p.clone())),
        &reasoning(),
    )
    .unwrap_err();
    let InferenceError::Provider { partial, .. } = err else {
        panic!("expected provider error, got {err}");
    };
    assert_eq!(partial.cycles_run, 1);
    assert!(!partial.converged);
    assert_eq!(
        partial.final_affinity,
        compute_affinity(&v, &app.label_embeddings, 1.0).unwrap()
    );
    assert!(!partial.class_scores.is_empty());
}

#[test]
fn remote_reasoner_drives_the_loop() {
    let server = MockServer::start(|_| {
        Reply::json(r#"{"proposals": ["Smoke Alarm ", "fire", "smoke alarm"]}"#)
    });
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("smoke alarm", 1.0)]);
    let reasoner = remote_reasoner(&server.url, Duration::from_secs(5));
    let report = run_inference(&app, &v, Some(&reasoner), Some(&p), &reasoning()).unwrap();

    // "Smoke Alarm" keeps its case after canonicalization, so both spellings are new
    assert_eq!(
        report.per_cycle[1].labels_added,
        ["Smoke Alarm", "smoke alarm"]
    );
    assert!(report.converged);
    let reqs = server.requests.lock().unwrap();
    assert_eq!(reqs.len(), report.cycles_run - 1);
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["context"], "classes: fighting, fire");
    assert_eq!(body["ranked"].as_array().unwrap().len(), 5);
    let known: BTreeSet<&str> = body["known"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k.as_str().unwrap())
        .collect();
    assert_eq!(known.len(), app.label_embeddings.len());
}

#[test]
fn remote_reasoner_failure_keeps_progress() {
    let server = MockServer::start(|_| Reply {
        status: 503,
        body: "{}".into(),
        delay: Duration::ZERO,
    });
    let p = synthetic_provider(42, 32);
    let app = fire_app(&p);
    let v = mixture(&p, &[("fire", 1.0)]);
    let reasoner = remote_reasoner(&server.url, Duration::from_secs(5));
    match run_inference(&app, &v, Some(&reasoner), Some(&p), &reasoning()) {
        Err(InferenceError::Reasoner { partial, .. }) => assert_eq!(partial.cycles_run, 1),
        other => panic!("unexpected {other:?}"),
    }
}
