mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::{MockServer, Reply};
use serde_json::{json, Value};
use zsa::affinity::LabelScore;
use zsa::inference::{filter_proposals, remote_reasoner, Reasoner, ReasonerError};
use zsa::provider::{EmbeddingProvider, HttpProvider, ProviderError};
use zsa::remote::RemoteError;

fn embed_server() -> MockServer {
    MockServer::start(|req| {
        let body: Value = serde_json::from_str(&req.body).unwrap();
        assert_eq!(body["kind"], "text");
        let input = body["input"].as_str().unwrap();
        let values = if input == "fire" {
            json!([3.0, 4.0, 0.0])
        } else {
            json!([0.0, 0.0, 2.0])
        };
        Reply::json(json!({"dim": 3, "values": values}).to_string())
    })
}

#[test]
fn http_provider_speaks_embed_contract() {
    let server = embed_server();
    let p = HttpProvider::connect(&server.url, Duration::from_secs(5)).unwrap();
    assert_eq!(p.dim(), 3);
    let e = p.embed_text("fire").unwrap();
    assert_eq!(e.values(), &[0.6f32, 0.8, 0.0]);
    assert!(e.is_normalized());
    let reqs = server.requests.lock().unwrap();
    assert!(reqs
        .iter()
        .all(|r| r.method == "POST" && r.path == "/embed"));
    let last: Value = serde_json::from_str(&reqs.last().unwrap().body).unwrap();
    assert_eq!(last, json!({"kind": "text", "input": "fire"}));
}

#[test]
fn http_provider_rejects_inconsistent_payload() {
    let server = MockServer::start(|_| Reply::json(r#"{"dim": 4, "values": [1.0, 0.0]}"#));
    let err = HttpProvider::connect(&server.url, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(
        err,
        ProviderError::Remote(RemoteError::Schema { .. })
    ));
}

#[test]
fn http_provider_unreachable_is_remote_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let err = HttpProvider::connect(&url, Duration::from_secs(2)).unwrap_err();
    assert!(err.is_remote(), "{err}");
}

fn ranked() -> Vec<LabelScore> {
    vec![LabelScore {
        label: "fire".into(),
        score: 0.9,
    }]
}

#[test]
fn remote_reasoner_round_trip() {
    let server = MockServer::start(|_| Reply::json(r#"{"proposals": []}"#));
    let r = remote_reasoner(&server.url, Duration::from_secs(5));
    let known: BTreeSet<String> = ["fire".to_string()].into_iter().collect();
    assert!(r
        .propose("classes: fire", &ranked(), &known)
        .unwrap()
        .is_empty());
    let reqs = server.requests.lock().unwrap();
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(
        body,
        json!({"context": "classes: fire", "ranked": [{"label": "fire", "score": 0.9}], "known": ["fire"]})
    );
}

#[test]
fn remote_reasoner_proposals_are_filtered_by_caller() {
    let server = MockServer::start(|_| Reply::json(r#"{"proposals": ["x", "x", "fire"]}"#));
    let r = remote_reasoner(&server.url, Duration::from_secs(5));
    let known: BTreeSet<String> = ["fire".to_string()].into_iter().collect();
    let raw = r.propose("", &ranked(), &known).unwrap();
    assert_eq!(filter_proposals(raw, &known), ["x"]);
}

#[test]
fn remote_reasoner_schema_violations() {
    for body in [
        r#"{"labels": []}"#,
        r#"{"proposals": "x"}"#,
        "nope",
        r#"{"proposals": [""]}"#,
    ] {
        let server = MockServer::start(move |_| Reply::json(body));
        let r = remote_reasoner(&server.url, Duration::from_secs(5));
        let err = r.propose("", &ranked(), &BTreeSet::new()).unwrap_err();
        assert!(
            matches!(err, ReasonerError::Remote(RemoteError::Schema { .. })),
            "{body}: {err}"
        );
    }
}

#[test]
fn remote_reasoner_http_error_and_timeout() {
    let server = MockServer::start(|_| Reply {
        status: 500,
        body: "{}".into(),
        delay: Duration::ZERO,
    });
    let r = remote_reasoner(&server.url, Duration::from_secs(5));
    assert!(matches!(
        r.propose("", &ranked(), &BTreeSet::new()),
        Err(ReasonerError::Remote(RemoteError::Status {
            status: 500,
            ..
        }))
    ));

    let slow = MockServer::start(|_| Reply {
        status: 200,
        body: r#"{"proposals": []}"#.into(),
        delay: Duration::from_millis(1500),
    });
    let r = remote_reasoner(&slow.url, Duration::from_millis(200));
    assert!(matches!(
        r.propose("", &ranked(), &BTreeSet::new()),
        Err(ReasonerError::Remote(RemoteError::Timeout { .. }))
    ));
}
