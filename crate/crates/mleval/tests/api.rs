mod common;

use std::fs;
use std::io::Write;
use std::path::Path;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use common::*;
use flate2::write::GzEncoder;
use mleval::api::ServerConfig;
use mleval::archive::pack;
use mleval::export::tuple_confusion_csv;
use mleval::ingest::{load_dataset, LoadOptions};
use mleval::report;
use mleval_testkit::{oracle, rng, Fixture};
use serde_json::Value;

fn packed(fx: &Fixture) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(fx, dir.path());
    pack(dir.path()).unwrap()
}

async fn loaded(app: &axum::Router, bytes: Vec<u8>) -> String {
    let r = upload(app, bytes).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    r.json()["id"].as_str().unwrap().to_string()
}

fn perfect() -> Fixture {
    let mut fx = Fixture::random(&mut rng(11), 10, 5, 1);
    fx.runs = vec![fx.truth.clone(), fx.truth.clone()];
    fx
}

#[tokio::test]
async fn upload_is_idempotent() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let bytes = packed(&perfect());
    let first = upload(&app, bytes.clone()).await;
    assert_eq!(first.status, StatusCode::CREATED);
    let body = first.json();
    assert_eq!(body["report"]["errors"], Value::Array(vec![]));
    assert_eq!(body["created"], true);
    let id = body["id"].as_str().unwrap();

    let second = upload(&app, bytes).await;
    assert_eq!(second.status, StatusCode::OK);
    assert_eq!(second.json()["id"], id);
    assert_eq!(second.json()["created"], false);

    let list = get(&app, "/api/v1/datasets").await.json();
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["id"], id);
    assert!(store.path().join(id).join("manifest.json").is_file());
}

#[tokio::test]
async fn gzip_archives_with_a_top_folder_are_accepted() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let outer = tempfile::tempdir().unwrap();
    write_fixture(&perfect(), &outer.path().join("dataset"));
    let mut gz = GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(&pack(outer.path()).unwrap()).unwrap();
    let r = upload(&app, gz.finish().unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    // Same content as a flat archive, so the same ID.
    assert_eq!(
        r.json()["id"],
        upload(&app, packed(&perfect())).await.json()["id"]
    );
}

#[tokio::test]
async fn archive_without_labels_is_rejected_naming_the_file() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&perfect(), dir.path());
    fs::remove_file(dir.path().join("labels.txt")).unwrap();
    let r = upload(&app, pack(dir.path()).unwrap()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let body = r.json();
    assert!(body["error"].as_str().unwrap().contains("labels.txt"));
    assert_eq!(body["report"]["ok"], false);
    assert_eq!(
        get(&app, "/api/v1/datasets").await.json(),
        Value::Array(vec![])
    );
}

#[tokio::test]
async fn garbage_upload_is_a_bad_request() {
    let store = tempfile::tempdir().unwrap();
    let r = upload(&app(store.path()), b"not an archive at all".to_vec()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversized_upload_is_413() {
    let store = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new(store.path().to_path_buf());
    config.max_upload_bytes = 1024;
    let app = app_with(config);
    let r = upload(&app, vec![0u8; 4096]).await;
    assert_eq!(r.status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    for uri in [
        "/api/v1/datasets/0000000000000000",
        "/api/v1/datasets/0000000000000000/summary",
        "/api/v1/datasets/0000000000000000/instances",
    ] {
        assert_eq!(get(&app, uri).await.status, StatusCode::NOT_FOUND, "{uri}");
    }
    let id = loaded(&app, packed(&perfect())).await;
    let r = get(&app, &format!("/api/v1/datasets/{id}/confusion/nope")).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = get(&app, &format!("/api/v1/datasets/{id}/documents/nope")).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn perfect_run_summary() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let id = loaded(&app, packed(&perfect())).await;
    let body = get(&app, &format!("/api/v1/datasets/{id}/summary"))
        .await
        .json();
    let summaries = body["summaries"].as_array().unwrap();
    assert_eq!(summaries.len(), 2);
    for s in summaries {
        assert_eq!(s["mean_f1"], 1.0);
        assert_eq!(s["mean_jaccard_vs_truth"], 1.0);
        for key in ["mean_precision", "mean_recall"] {
            assert!(s[key] == 1.0 || s[key].is_null(), "{key}: {}", s[key]);
        }
    }
}

#[tokio::test]
async fn dcase_summary_has_one_entry_per_run() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let id = loaded(&app, packed(&dcase_like(1))).await;
    let body = get(&app, &format!("/api/v1/datasets/{id}/summary"))
        .await
        .json();
    assert_eq!(body["summaries"].as_array().unwrap().len(), 9);
    assert_eq!(body["dataset"]["instance_count"], 816);
}

#[tokio::test]
async fn undefined_rates_are_null() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    // Label L1 is in no set: precision and recall undefined, F1 = 1.
    let fx = Fixture {
        labels: 2,
        truth: vec![vec![true, false]],
        runs: vec![vec![vec![true, false]]],
    };
    let id = loaded(&app, packed(&fx)).await;
    let body = get(&app, &format!("/api/v1/datasets/{id}/labels"))
        .await
        .json();
    let cell = &body["rows"][1]["runs"][0];
    assert!(cell["precision"].is_null() && cell["recall"].is_null());
    assert_eq!(cell["f1"], 1.0);
    assert_eq!(cell["tn"], 1);
}

#[tokio::test]
async fn label_metrics_sorting() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    // L2 is never predicted though present in the truth: zero F1 for both runs.
    let mut fx = Fixture::random(&mut rng(5), 10, 5, 2);
    fx.labels = 4;
    fx.truth = (0..8)
        .map(|i| vec![i % 2 == 0, i % 3 == 0, true, i == 1])
        .collect();
    fx.runs = vec![
        fx.truth
            .iter()
            .map(|t| vec![t[0], !t[1], false, t[3]])
            .collect(),
        fx.truth
            .iter()
            .map(|t| vec![t[0], t[1], false, false])
            .collect(),
    ];
    let id = loaded(&app, packed(&fx)).await;

    let body = get(&app, &format!("/api/v1/datasets/{id}/labels?sort=id"))
        .await
        .json();
    let ids: Vec<u64> = body["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["label"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![0, 1, 2, 3]);

    let body = get(
        &app,
        &format!("/api/v1/datasets/{id}/labels?sort=total-f1&direction=desc"),
    )
    .await
    .json();
    let rows = body["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.last().unwrap()["name"], "L2");
    assert_eq!(rows.last().unwrap()["total_f1"], 0.0);
    let totals: Vec<f64> = rows
        .iter()
        .map(|r| r["total_f1"].as_f64().unwrap())
        .collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));

    let body = get(&app, &format!("/api/v1/datasets/{id}/labels?sort=f1:P1"))
        .await
        .json();
    assert_eq!(body["rows"].as_array().unwrap().len(), 4);
    let r = get(&app, &format!("/api/v1/datasets/{id}/labels?sort=f1:P9")).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = get(&app, &format!("/api/v1/datasets/{id}/labels?sort=bogus")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn similarity_of_near_duplicate_runs() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let fx = duplicated_run();
    let id = loaded(&app, packed(&fx)).await;
    let expected = oracle::mean_jaccard(&fx.runs[0], &fx.runs[1]);
    assert!((expected - 0.9).abs() < 1e-12);

    let rounded = get(&app, &format!("/api/v1/datasets/{id}/similarity"))
        .await
        .json();
    assert_eq!(rounded["precision"], "4dp");
    assert_eq!(rounded["parties"], serde_json::json!(["Ref", "P0", "P1"]));
    let values = rounded["values"].as_array().unwrap();
    for (p, row) in values.iter().enumerate() {
        assert_eq!(row[p], 1.0);
    }
    assert_eq!(values[1][2], 0.9);
    assert_eq!(values[2][1], 0.9);

    let full = get(
        &app,
        &format!("/api/v1/datasets/{id}/similarity?precision=full"),
    )
    .await
    .json();
    let want = oracle::similarity(&fx);
    for (p, row) in full["values"].as_array().unwrap().iter().enumerate() {
        for (q, v) in row.as_array().unwrap().iter().enumerate() {
            assert!((v.as_f64().unwrap() - want[p][q]).abs() < 1e-12);
            let r = values[p][q].as_f64().unwrap();
            assert_eq!(r, report::round_transport(v.as_f64().unwrap()));
        }
    }
}

#[tokio::test]
async fn instances_pages_and_filter() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let fx = dcase_like(2);
    let id = loaded(&app, packed(&fx)).await;
    let base = format!("/api/v1/datasets/{id}/instances");

    let all = get(&app, &format!("{base}?page_size=1000")).await.json();
    assert_eq!(all["total"], 816);
    let rows = all["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 816);
    for row in rows.iter().take(50) {
        let i = row["index"].as_u64().unwrap() as usize;
        for (k, p) in row["predictions"].as_array().unwrap().iter().enumerate() {
            let want = oracle::jaccard(&fx.truth[i], &fx.runs[k][i]);
            assert!((p["jaccard"].as_f64().unwrap() - want).abs() < 1e-12);
        }
    }

    let page = get(&app, &format!("{base}?page=2")).await.json();
    assert_eq!(page["page_size"], 50);
    assert_eq!(page["rows"][0]["index"], 100);
    assert_eq!(page["rows"].as_array().unwrap().len(), 50);
    let tail = get(&app, &format!("{base}?page=16")).await.json();
    assert_eq!(tail["rows"].as_array().unwrap().len(), 16);

    let filtered = get(&app, &format!("{base}?label=L3&page_size=1000"))
        .await
        .json();
    let hits = fx
        .truth
        .iter()
        .enumerate()
        .filter(|(i, t)| t[3] || fx.runs.iter().any(|r| r[*i][3]))
        .count();
    assert_eq!(filtered["total"], hits as u64);
    assert_eq!(filtered["filter_label"], 3);

    let r = get(&app, &format!("{base}?label=Nope")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, &format!("{base}?label_id=99")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn filter_on_absent_label_is_empty() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let fx = Fixture {
        labels: 2,
        truth: vec![vec![true, false]; 3],
        runs: vec![vec![vec![true, false]; 3]],
    };
    let id = loaded(&app, packed(&fx)).await;
    let body = get(&app, &format!("/api/v1/datasets/{id}/instances?label=L1"))
        .await
        .json();
    assert_eq!(body["total"], 0);
    assert_eq!(body["rows"], Value::Array(vec![]));
}

fn documents_dataset(dir: &Path, kind: &str, truth: &str) {
    write_raw(dir, kind, "a\nb\n", truth, &[("P0", "x1\t\ta\n", false)]);
}

#[tokio::test]
async fn documents_by_kind() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());

    let text = tempfile::tempdir().unwrap();
    documents_dataset(text.path(), "text", "x1\tline one\\nline two\ta\n");
    let id = loaded(&app, pack(text.path()).unwrap()).await;
    let r = get(&app, &format!("/api/v1/datasets/{id}/documents/x1")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.text(), "line one\nline two");
    assert!(r.headers[header::CONTENT_TYPE]
        .to_str()
        .unwrap()
        .starts_with("text/plain"));

    let none = tempfile::tempdir().unwrap();
    documents_dataset(none.path(), "none", "x1\t\ta\n");
    let id = loaded(&app, pack(none.path()).unwrap()).await;
    let r = get(&app, &format!("/api/v1/datasets/{id}/documents/x1")).await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    assert!(r.body.is_empty());
}

#[tokio::test]
async fn audio_supports_range_requests() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let dir = tempfile::tempdir().unwrap();
    documents_dataset(dir.path(), "audio", "x1\tclips/x1.wav\ta\n");
    let bytes: Vec<u8> = (0..=255u8).cycle().take(5000).collect();
    fs::create_dir_all(dir.path().join("clips")).unwrap();
    fs::write(dir.path().join("clips/x1.wav"), &bytes).unwrap();
    let id = loaded(&app, pack(dir.path()).unwrap()).await;
    let uri = format!("/api/v1/datasets/{id}/documents/x1");

    let whole = get(&app, &uri).await;
    assert_eq!(whole.status, StatusCode::OK);
    assert_eq!(whole.body, bytes);
    assert_eq!(whole.headers[header::CONTENT_TYPE], "audio/wav");

    let req = Request::get(&uri)
        .header(header::RANGE, "bytes=1000-1999")
        .body(Body::empty())
        .unwrap();
    let part = send(&app, req).await;
    assert_eq!(part.status, StatusCode::PARTIAL_CONTENT);
    assert_eq!(part.body, bytes[1000..2000]);
    assert_eq!(part.headers[header::CONTENT_RANGE], "bytes 1000-1999/5000");
}

#[tokio::test]
async fn missing_document_file_is_410() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let dir = tempfile::tempdir().unwrap();
    documents_dataset(dir.path(), "image", "x1\tpics/x1.png\ta\n");
    let r = upload(&app, pack(dir.path()).unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let body = r.json();
    assert_eq!(body["report"]["warnings"][0]["code"], "missing-document");
    let id = body["id"].as_str().unwrap();
    let r = get(&app, &format!("/api/v1/datasets/{id}/documents/x1")).await;
    assert_eq!(r.status, StatusCode::GONE);
    assert_eq!(
        r.json()["report"]["warnings"][0]["code"],
        "missing-document"
    );
}

#[tokio::test]
async fn confusion_csv_matches_export() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let dir = tempfile::tempdir().unwrap();
    let fx = dcase_like(4);
    write_fixture(&fx, dir.path());
    let id = loaded(&app, pack(dir.path()).unwrap()).await;
    let local = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
    let m = report::tuple_confusion(&local.dataset, "P3").unwrap();

    let csv = get(
        &app,
        &format!("/api/v1/datasets/{id}/confusion/P3?format=csv"),
    )
    .await;
    assert!(csv.headers[header::CONTENT_TYPE]
        .to_str()
        .unwrap()
        .starts_with("text/csv"));
    assert_eq!(csv.text(), tuple_confusion_csv(&local.dataset, &m));

    let json = get(&app, &format!("/api/v1/datasets/{id}/confusion/P3"))
        .await
        .json();
    let n = json["classes"].as_array().unwrap().len();
    assert_eq!(n, oracle::distinct_tuples(&fx).len());
    let total: u64 = json["row_sums"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(total, 816);
    let r = get(
        &app,
        &format!("/api/v1/datasets/{id}/confusion/P3?format=xml"),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn read_endpoints_are_byte_stable() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let id = loaded(&app, packed(&dcase_like(9))).await;
    for path in [
        "summary",
        "labels?sort=total-f1&direction=desc",
        "stacked",
        "similarity",
        "instances?page=3",
        "confusion/P0",
    ] {
        let uri = format!("/api/v1/datasets/{id}/{path}");
        let a = get(&app, &uri).await;
        let b = get(&app, &uri).await;
        assert_eq!(a.status, StatusCode::OK, "{uri}");
        assert_eq!(a.body, b.body, "{uri}");
    }
}

#[tokio::test]
async fn stacked_totals_are_descending() {
    let store = tempfile::tempdir().unwrap();
    let app = app(store.path());
    let id = loaded(&app, packed(&dcase_like(6))).await;
    let body = get(&app, &format!("/api/v1/datasets/{id}/stacked"))
        .await
        .json();
    let rows = body["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for row in rows {
        let parts: f64 = row["contributions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .sum();
        assert!((parts - row["total"].as_f64().unwrap()).abs() < 1e-12);
        assert!(row["total"].as_f64().unwrap() <= 9.0);
    }
    let totals: Vec<f64> = rows.iter().map(|r| r["total"].as_f64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));
}

#[tokio::test]
async fn restart_reloads_the_store() {
    let store = tempfile::tempdir().unwrap();
    let id = loaded(&app(store.path()), packed(&perfect())).await;
    let again = app(store.path());
    let list = get(&again, "/api/v1/datasets").await.json();
    assert_eq!(list[0]["id"], id.as_str());
    assert_eq!(
        get(&again, &format!("/api/v1/datasets/{id}")).await.status,
        StatusCode::OK
    );
}

#[tokio::test]
async fn root_serves_a_page_or_the_bundle() {
    let store = tempfile::tempdir().unwrap();
    let r = get(&app(store.path()), "/").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.text().contains("/api/v1/datasets"));

    let bundle = tempfile::tempdir().unwrap();
    fs::write(bundle.path().join("index.html"), "<p>dashboard</p>").unwrap();
    let mut config = ServerConfig::new(store.path().to_path_buf());
    config.static_dir = Some(bundle.path().to_path_buf());
    let app = app_with(config);
    assert_eq!(get(&app, "/").await.text(), "<p>dashboard</p>");
    assert_eq!(get(&app, "/api/v1/datasets").await.status, StatusCode::OK);
}
