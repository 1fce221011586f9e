#![allow(dead_code)]

use std::fs;
use std::path::Path;

use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mleval::api::{self, ServerConfig};
use mleval::format::write_dataset;
use mleval_core::{DocumentKind, LabelSet};
use mleval_testkit::{rng, Fixture};
use rand::Rng;
use tower::ServiceExt;

pub const DCASE_LABELS: [&str; 7] = [
    "Child",
    "Male",
    "Female",
    "Television",
    "Percussive",
    "Broadband",
    "Other",
];

/// Writes a dataset directory from raw file contents. `runs` holds
/// `(name, body, scored)`; run `k` goes to `run_{k}.tsv`.
pub fn write_raw(dir: &Path, kind: &str, labels: &str, truth: &str, runs: &[(&str, &str, bool)]) {
    fs::create_dir_all(dir).unwrap();
    let entries: Vec<String> = runs
        .iter()
        .enumerate()
        .map(|(k, (name, body, scored))| {
            fs::write(dir.join(format!("run_{k}.tsv")), body).unwrap();
            format!(r#"{{"name":"{name}","file":"run_{k}.tsv","scored":{scored}}}"#)
        })
        .collect();
    let manifest = format!(
        r#"{{"name":"raw","document_kind":"{kind}","ground_truth":"truth.tsv","predictions":[{}]}}"#,
        entries.join(",")
    );
    fs::write(dir.join("manifest.json"), manifest).unwrap();
    fs::write(dir.join("labels.txt"), labels).unwrap();
    fs::write(dir.join("truth.tsv"), truth).unwrap();
}

/// 816 instances, 7 labels, 9 runs of random hard predictions.
pub fn dcase_like(seed: u64) -> Fixture {
    let mut r = rng(seed);
    let truth: Vec<Vec<bool>> = (0..816)
        .map(|_| (0..7).map(|_| r.random_bool(0.25)).collect())
        .collect();
    let runs = (0..9)
        .map(|_| {
            truth
                .iter()
                .map(|t| {
                    // Mostly right, with occasional per-label flips.
                    t.iter()
                        .map(|&b| if r.random_bool(0.15) { !b } else { b })
                        .collect()
                })
                .collect()
        })
        .collect();
    Fixture {
        labels: 7,
        truth,
        runs,
    }
}

pub fn write_fixture(fx: &Fixture, dir: &Path) {
    write_dataset(&fx.to_dataset(), DocumentKind::None, dir).unwrap();
}

/// Ten instances with `P1` a copy of `P0` except for instance 0.
pub fn duplicated_run() -> Fixture {
    let truth: Vec<Vec<bool>> = (0..10)
        .map(|i| vec![i % 2 == 0, i % 3 == 0, i % 5 == 0])
        .collect();
    let p0: Vec<Vec<bool>> = (0..10)
        .map(|i| vec![i % 2 == 0, i % 4 == 0, true])
        .collect();
    let mut p1 = p0.clone();
    p1[0] = vec![false, false, false];
    Fixture {
        labels: 3,
        truth,
        runs: vec![p0, p1],
    }
}

/// 7 labels and 5 runs whose truth and predictions cover exactly the
/// first 80 label sets in canonical order.
pub fn eighty_tuples() -> Fixture {
    let mut sets: Vec<Vec<bool>> = (0u32..128)
        .map(|bits| (0..7).map(|l| bits & (1 << l) != 0).collect())
        .collect();
    sets.sort_by_key(|row: &Vec<bool>| Fixture::to_set(row));
    sets.truncate(80);
    // 40 instances; truth takes sets 0..40, each run takes a rotation of 40..80.
    let truth: Vec<Vec<bool>> = sets[..40].to_vec();
    let runs = (0..5)
        .map(|k| {
            (0..40)
                .map(|i| sets[40 + (i + 8 * k) % 40].clone())
                .collect()
        })
        .collect();
    Fixture {
        labels: 7,
        truth,
        runs,
    }
}

pub fn set_of(names: &[&str], all: &[&str]) -> LabelSet {
    names
        .iter()
        .map(|n| mleval_core::LabelId::from(all.iter().position(|a| a == n).unwrap()))
        .collect()
}

pub fn app(store: &Path) -> Router {
    app_with(ServerConfig::new(store.to_path_buf()))
}

pub fn app_with(config: ServerConfig) -> Router {
    api::router(api::session(config, None))
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body));
        })
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn upload(app: &Router, bytes: Vec<u8>) -> Reply {
    send(
        app,
        Request::post("/api/v1/datasets")
            .body(Body::from(bytes))
            .unwrap(),
    )
    .await
}
