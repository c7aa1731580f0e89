use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use synergy_core::ingest::{ingest_files, MatchOptions};
use synergy_core::pathrank::PagerankStore;
use synergy_core::MultilayerGraph;
use synergy_service::api::{Health, MoleculeDetail, SearchResponse};
use synergy_service::{router, AppState, ServiceConfig};
use tower::ServiceExt;

fn f1() -> MultilayerGraph {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/f1");
    ingest_files(
        dir.join("catalog.tsv"),
        dir.join("interactions.tsv"),
        dir.join("corpus.jsonl"),
        &MatchOptions::default(),
    )
    .unwrap()
    .0
}

fn loaded() -> (AppState, Router) {
    let state = AppState::new(ServiceConfig::default());
    state.install(f1(), PagerankStore::in_memory());
    let app = router(state.clone());
    (state, app)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, HeaderMap, Bytes) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    (status, headers, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, HeaderMap, Bytes) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, uri: &str, body: &str) -> (StatusCode, Bytes) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, _, b) = send(app, req).await;
    (s, b)
}

#[tokio::test]
async fn health_before_and_after_load() {
    let state = AppState::new(ServiceConfig::default());
    let app = router(state.clone());
    let (status, _, _) = get(&app, "/api/health").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _, _) = get(&app, "/api/search?molecule=Q&method=count_norm").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _) = post(&app, "/api/admin/precompute", "").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);

    let g = f1();
    let rev = g.revision();
    state.install(g, PagerankStore::in_memory());
    let (status, _, body) = get(&app, "/api/health").await;
    assert_eq!(status, StatusCode::OK);
    let h: Health = serde_json::from_slice(&body).unwrap();
    assert_eq!(h.revision, Some(rev));
    let c = h.counts.unwrap();
    assert_eq!(
        (c.molecules, c.publications, c.authors, c.interactions, c.mentions, c.authored),
        (4, 4, 2, 2, 5, 5)
    );
}

#[tokio::test]
async fn search_fixture_q() {
    let (_, app) = loaded();
    let (status, headers, body) = get(&app, "/api/search?molecule=Q&method=count_nonnorm").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers["content-type"], "application/json");
    let r: SearchResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!((r.total_results, r.total_pages), (2, 1));
    assert_eq!(r.query.molecule, "Q");
    let a1 = &r.entries[0];
    assert_eq!((a1.rank, a1.author.as_str(), a1.score), (1, "A1", 3.0));
    assert_eq!(a1.affiliation.as_deref(), Some("Lab One"));
    let rel: Vec<_> = a1.related_molecules.iter().map(|x| (x.name.as_str(), x.pub_count)).collect();
    assert_eq!(rel, [("M1", 2), ("M2", 1)]);
    assert_eq!(r.entries[1].author, "A2");

    let (_, _, body) = get(&app, "/api/search?molecule=Q&method=hypergeometric").await;
    let r: SearchResponse = serde_json::from_slice(&body).unwrap();
    let order: Vec<_> = r.entries.iter().map(|e| (e.author.as_str(), e.score)).collect();
    assert_eq!(order, [("A2", 0.5), ("A1", 1.0)]);

    let (_, _, body) = get(&app, "/api/search?molecule=Q&method=pagerank_norm").await;
    let r: SearchResponse = serde_json::from_slice(&body).unwrap();
    assert!(r.entries.iter().all(|e| e.score == 0.5));
}

#[tokio::test]
async fn paging_boundary_and_slices() {
    let (_, app) = loaded();
    let (status, _, body) = get(&app, "/api/search?molecule=Q&method=count_norm&page=2&page_size=20").await;
    assert_eq!(status, StatusCode::OK);
    let r: SearchResponse = serde_json::from_slice(&body).unwrap();
    assert!(r.entries.is_empty());
    assert_eq!((r.total_results, r.total_pages), (2, 1));

    let mut seen = Vec::new();
    for page in 1..=2 {
        let uri = format!("/api/search?molecule=Q&method=count_norm&page={page}&page_size=1");
        let r: SearchResponse = serde_json::from_slice(&get(&app, &uri).await.2).unwrap();
        assert_eq!(r.total_pages, 2);
        assert_eq!(r.entries.len(), 1);
        seen.extend(r.entries.into_iter().map(|e| (e.rank, e.author)));
    }
    assert_eq!(seen, [(1, "A1".to_string()), (2, "A2".to_string())]);
}

#[tokio::test]
async fn repeated_request_is_a_byte_identical_cache_hit() {
    let (state, app) = loaded();
    let uri = "/api/search?molecule=Q&method=pagerank_nonnorm";
    let (_, h1, b1) = get(&app, uri).await;
    let (_, h2, b2) = get(&app, uri).await;
    assert_eq!(h1["x-cache"], "MISS");
    assert_eq!(h2["x-cache"], "HIT");
    assert!(h1.contains_key("x-compute-ms"));
    assert_eq!(b1, b2);
    assert_eq!(state.cache().len(), 1);

    // installing a new snapshot invalidates every page
    let mut g = f1();
    g.upsert_molecule("M9", Vec::<String>::new()).unwrap();
    state.install(g, PagerankStore::in_memory());
    let (_, h3, b3) = get(&app, uri).await;
    assert_eq!(h3["x-cache"], "MISS");
    assert_eq!(b3, b1);
}

#[tokio::test]
async fn error_statuses() {
    let (_, app) = loaded();
    let cases = [
        ("/api/search?molecule=NOPE&method=count_norm", StatusCode::NOT_FOUND),
        ("/api/search?molecule=Q&method=bogus", StatusCode::BAD_REQUEST),
        ("/api/search?molecule=Q", StatusCode::BAD_REQUEST),
        ("/api/search?method=count_norm", StatusCode::BAD_REQUEST),
        ("/api/search?molecule=Q&method=count_norm&page=0", StatusCode::BAD_REQUEST),
        ("/api/search?molecule=Q&method=count_norm&page_size=500", StatusCode::BAD_REQUEST),
        ("/api/molecules/NOPE", StatusCode::NOT_FOUND),
    ];
    for (uri, want) in cases {
        let (status, _, body) = get(&app, uri).await;
        assert_eq!(status, want, "{uri}");
        let v: Value = serde_json::from_slice(&body).unwrap();
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn molecule_detail_and_alias() {
    let (_, app) = loaded();
    let (status, _, body) = get(&app, "/api/molecules/Q").await;
    assert_eq!(status, StatusCode::OK);
    let d: MoleculeDetail = serde_json::from_slice(&body).unwrap();
    assert_eq!(d.related, ["M1", "M2"]);
    assert_eq!(d.degree, 2);

    let d: MoleculeDetail = serde_json::from_slice(&get(&app, "/api/molecules/M1-ALT").await.2).unwrap();
    assert_eq!(d.name, "M1");
    assert_eq!(d.aliases, ["M1-ALT"]);
    assert_eq!(d.related, ["Q"]);

    let (status, _, body) = get(&app, "/api/search?molecule=M1-ALT&method=count_norm").await;
    assert_eq!(status, StatusCode::OK);
    let r: SearchResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(r.query.molecule, "M1");
}

#[tokio::test]
async fn precompute_endpoint() {
    let (state, app) = loaded();
    let (status, body) = post(&app, "/api/admin/precompute", r#"{"molecules":["Q"]}"#).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((v["stored"].as_u64(), v["skipped"].as_u64()), (Some(2), Some(0)));
    let (_, body) = post(&app, "/api/admin/precompute", r#"{"molecules":["Q"]}"#).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((v["stored"].as_u64(), v["skipped"].as_u64()), (Some(0), Some(2)));

    let (_, body) = post(&app, "/api/admin/precompute", "").await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((v["stored"].as_u64(), v["skipped"].as_u64()), (Some(4), Some(2)));
    assert_eq!(v["no_neighbors"].as_u64(), Some(1));
    assert_eq!(state.current().unwrap().store.len(), 6);

    let (_, body) = post(&app, "/api/admin/precompute", r#"{"molecules":["M1"],"variants":["norm"]}"#).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["skipped"].as_u64(), Some(1));

    for bad in [r#"{"molecules":["NOPE"]}"#, "{not json", r#"{"variants":["weird"]}"#, r#"{"extra":1}"#] {
        let (status, _) = post(&app, "/api/admin/precompute", bad).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_cold_requests_agree() {
    let (_, app) = loaded();
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            tokio::spawn(async move { get(&app, "/api/search?molecule=Q&method=pagerank_norm").await })
        })
        .collect();
    let mut bodies = Vec::new();
    let mut misses = 0;
    for h in handles {
        let (status, headers, body) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        if headers["x-cache"] == "MISS" {
            misses += 1;
        }
        bodies.push(body);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
    assert!((1..=ServiceConfig::default().compute_concurrency).contains(&misses));
}

#[tokio::test]
async fn cors_headers() {
    let (_, app) = loaded();
    let req = Request::get("/api/health")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let (_, headers, _) = send(&app, req).await;
    assert_eq!(headers["access-control-allow-origin"], "*");

    let state = AppState::new(ServiceConfig {
        cors_origins: vec!["http://ui.example".into()],
        ..Default::default()
    });
    let app = router(state);
    let req = Request::get("/api/health")
        .header("origin", "http://ui.example")
        .body(Body::empty())
        .unwrap();
    let (_, headers, _) = send(&app, req).await;
    assert_eq!(headers["access-control-allow-origin"], "http://ui.example");
    let req = Request::get("/api/health")
        .header("origin", "http://elsewhere")
        .body(Body::empty())
        .unwrap();
    let (_, headers, _) = send(&app, req).await;
    assert!(!headers.contains_key("access-control-allow-origin"));
}
