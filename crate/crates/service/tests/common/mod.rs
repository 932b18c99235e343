#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use ciflow::bundle::Bundle;
use ciflow::standoff::StandoffSpan;
use ciflow_core::text::tokenize;
use ciflow_core::{ParameterKind, Span};
use ciflow_service::store::Submission;
use ciflow_service::task::ExcerptInput;
use ciflow_service::{Clock, Store, TaskDefinition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;
use http_body_util::BodyExt;

pub fn corpus_bundle() -> Bundle {
    Bundle::read_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/replay")).unwrap()
}

pub fn counter_clock() -> Clock {
    let t = Arc::new(AtomicU64::new(1_600_000_000_000));
    Arc::new(move || t.fetch_add(1_000, Ordering::SeqCst))
}

fn input(id: &str, text: &str, spans: Option<&[Span]>) -> ExcerptInput {
    ExcerptInput {
        excerpt_id: id.into(),
        text: text.into(),
        gold: spans.map(|s| s.iter().map(StandoffSpan::from).collect()),
    }
}

/// Screening questions from the corpus bundle and `n_work` work excerpts
/// cycling through its ten work texts.
pub fn task_definition(task_id: &str, n_work: usize, per_worker: usize, seed: u64) -> TaskDefinition {
    let bundle = corpus_bundle();
    let screening: Vec<ExcerptInput> = bundle
        .excerpts
        .iter()
        .filter(|e| e.is_screening())
        .map(|e| input(e.excerpt_id(), e.text(), e.gold().map(|g| g.spans())))
        .collect();
    let texts: Vec<_> = bundle.excerpts.iter().filter(|e| !e.is_screening()).collect();
    let work: Vec<ExcerptInput> = (0..n_work)
        .map(|i| {
            let e = texts[i % texts.len()];
            input(&format!("x{:02}", i + 1), e.text(), e.gold().map(|g| g.spans()))
        })
        .collect();
    let json = serde_json::json!({
        "task_id": task_id,
        "screening": screening,
        "work": work,
        "excerpts_per_worker": per_worker,
        "assignment_seed": seed,
    });
    serde_json::from_value(json).unwrap()
}

/// Perturbs each token's label with probability `p`, then rebuilds spans
/// as maximal same-kind runs.
pub fn noisy(rng: &mut ChaCha8Rng, text: &str, spans: &[Span], p: f64) -> Vec<Span> {
    let tokens = tokenize(text);
    let mut labels: Vec<Option<ParameterKind>> = tokens
        .iter()
        .map(|t| spans.iter().find(|s| s.contains(t.start)).map(|s| s.kind()))
        .collect();
    for l in &mut labels {
        if rng.random_bool(p) {
            *l = match rng.random_range(0..5) {
                0 => None,
                k => Some(ParameterKind::CROWD[k - 1]),
            };
        }
    }
    let mut out = vec![];
    let mut i = 0;
    while i < tokens.len() {
        let Some(kind) = labels[i] else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j + 1 < tokens.len() && labels[j + 1] == Some(kind) {
            j += 1;
        }
        out.push(Span::new(tokens[i].start, tokens[j].end, kind).unwrap());
        i = j + 1;
    }
    out
}

pub fn to_wire(spans: &[Span]) -> Vec<StandoffSpan> {
    spans.iter().map(StandoffSpan::from).collect()
}

/// The answer a simulated annotator gives: failing annotators leave the
/// first screening question blank, everyone else answers screening
/// questions exactly and work items with some noise.
pub fn answer(
    def: &TaskDefinition,
    excerpt_id: &str,
    fails: bool,
    rng: &mut ChaCha8Rng,
) -> Submission {
    let screening_pos = def.screening.iter().position(|e| e.excerpt_id == excerpt_id);
    let input = def
        .screening
        .iter()
        .chain(&def.work)
        .find(|e| e.excerpt_id == excerpt_id)
        .unwrap();
    let gold: Vec<Span> = input.gold.as_ref().unwrap().iter().map(|s| s.to_span().unwrap()).collect();
    let spans = match screening_pos {
        Some(0) if fails => vec![],
        Some(_) => gold,
        None => noisy(rng, &input.text, &gold, 0.25),
    };
    Submission {
        excerpt_id: excerpt_id.into(),
        spans: to_wire(&spans),
    }
}

/// Opens `n` sessions and advances them round-robin until every one is
/// done or failed. Returns the session tokens.
pub fn simulate(store: &Store, def: &TaskDefinition, n: usize, fails: impl Fn(usize) -> bool, seed: u64) -> Vec<String> {
    let task_id = def.task_id.as_deref().unwrap();
    let tokens: Vec<String> = (0..n).map(|_| store.open_session(task_id, true).unwrap().token).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        active.retain(|&i| {
            let Ok(next) = store.next_item(&tokens[i]) else { return false };
            let Some(item) = next.item else { return false };
            let sub = answer(def, &item.excerpt_id, fails(i), &mut rngs[i]);
            store.submit(&tokens[i], sub).unwrap();
            true
        });
    }
    tokens
}

/// Sessions 0..141 where exactly 42 fail screening, spread over the run.
pub fn fails_42_of_141(i: usize) -> bool {
    (i * 37) % 141 < 42
}

/// Sends one request through the router; non-JSON answers come back as a string.
pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

