use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;
use synergy_core::ingest::replay::{CannedResponse, ReplayServer};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn synergy() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synergy"));
    cmd.env_remove("SYNERGY_SNAPSHOT")
        .env_remove("SYNERGY_API_KEY");
    cmd
}

fn code(cmd: &mut Command) -> (i32, Output) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap_or(-1), out)
}

fn ingest(set: &str, out: &Path) -> Value {
    let dir = fixtures().join(set);
    let output = synergy()
        .arg("ingest")
        .arg("--catalog")
        .arg(dir.join("catalog.tsv"))
        .arg("--interactions")
        .arg(dir.join("interactions.tsv"))
        .arg("--corpus")
        .arg(dir.join("corpus.jsonl"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).unwrap()
}

fn f1_snapshot(dir: &Path) -> PathBuf {
    let snap = dir.join("f1.mlg");
    ingest("f1", &snap);
    snap
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn ingest_reports_and_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let report = ingest("f1", &tmp.path().join("f1.mlg"));
    assert_eq!(report["mentions_created"], 5);
    assert_eq!(report["records_read"], 4);
    assert!(tmp.path().join("f1.mlg").exists());

    let dir = fixtures().join("f1");
    let missing = tmp.path().join("nope.jsonl");
    let (c, out) = code(
        synergy()
            .args(["ingest", "--catalog"])
            .arg(dir.join("catalog.tsv"))
            .arg("--interactions")
            .arg(dir.join("interactions.tsv"))
            .arg("--corpus")
            .arg(&missing)
            .arg("--out")
            .arg(tmp.path().join("x.mlg")),
    );
    assert_eq!(c, 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.jsonl"));

    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = stdout_of(
        synergy()
            .args(["ingest", "--catalog"])
            .arg(dir.join("catalog.tsv"))
            .arg("--interactions")
            .arg(dir.join("interactions.tsv"))
            .arg("--corpus")
            .arg(&empty)
            .arg("--out")
            .arg(tmp.path().join("e.mlg")),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["records_read"], 0);
    assert_eq!(v["mentions_created"], 0);
}

#[test]
fn query_tsv() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = f1_snapshot(tmp.path());
    let out = stdout_of(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "count_nonnorm",
                "--snapshot",
            ])
            .arg(&snap),
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "rank\tauthor\tscore\trelated_molecules\taffiliation"
    );
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], "1\tA1\t3\tM1:2,M2:1\tLab One");
    assert!(lines[2].starts_with("2\tA2\t2\t"));

    // environment fallback for the snapshot path, --top
    let out = stdout_of(synergy().env("SYNERGY_SNAPSHOT", &snap).args([
        "query",
        "--molecule",
        "Q",
        "--method",
        "hypergeometric",
        "--top",
        "1",
    ]));
    assert_eq!(out.lines().count(), 2);

    let pretty = stdout_of(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "pagerank_norm",
                "--pretty",
                "--snapshot",
            ])
            .arg(&snap),
    );
    assert!(pretty.lines().nth(1).unwrap().starts_with("1     A1"));

    let (c, out) = code(
        synergy()
            .args([
                "query",
                "--molecule",
                "NOPE",
                "--method",
                "count_norm",
                "--snapshot",
            ])
            .arg(&snap),
    );

    assert_eq!(c, 3, "{}", String::from_utf8_lossy(&out.stderr));
    let (c, out) = code(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "bogus",
                "--snapshot",
            ])
            .arg(&snap),
    );
    assert_eq!(c, 2, "{}", String::from_utf8_lossy(&out.stderr));
    let (c, out) = code(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "count_norm",
                "--snapshot",
            ])
            .arg(tmp.path().join("missing.mlg")),
    );
    assert_eq!(c, 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn precompute_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = f1_snapshot(tmp.path());
    let cache = tmp.path().join("pr.cache");
    let out = stdout_of(
        synergy()
            .arg("precompute")
            .arg("--snapshot")
            .arg(&snap)
            .arg("--cache")
            .arg(&cache),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["stored"], 6);
    assert!(cache.exists());
    let out = stdout_of(
        synergy()
            .args(["precompute", "--molecules", "Q", "--snapshot"])
            .arg(&snap)
            .arg("--cache")
            .arg(&cache),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        (v["stored"].as_u64(), v["skipped"].as_u64()),
        (Some(0), Some(2))
    );

    // queries through the store agree with cold ones
    let cold = stdout_of(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "pagerank_nonnorm",
                "--snapshot",
            ])
            .arg(&snap),
    );
    let warm = stdout_of(
        synergy()
            .args([
                "query",
                "--molecule",
                "Q",
                "--method",
                "pagerank_nonnorm",
                "--snapshot",
            ])
            .arg(&snap)
            .arg("--cache")
            .arg(&cache),
    );
    assert_eq!(cold, warm);
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_answers_health() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = f1_snapshot(tmp.path());
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let child = Command::new(env!("CARGO_BIN_EXE_synergy"))
        .arg("serve")
        .arg("--snapshot")
        .arg(&snap)
        .arg("--listen")
        .arg(format!("127.0.0.1:{port}"))
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let _server = Server(child);
    let url = format!("http://127.0.0.1:{port}/api/health");
    let deadline = Instant::now() + Duration::from_secs(20);
    let body = loop {
        match ureq::get(&url).call() {
            Ok(mut r) => break r.body_mut().read_to_string().unwrap(),
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("server never came up: {e}"),
        }
    };
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["counts"]["molecules"], 4);

    let search = format!("http://127.0.0.1:{port}/api/search?molecule=Q&method=count_norm");
    let mut r = ureq::get(&search).call().unwrap();
    assert_eq!(r.headers()["x-cache"], "MISS");
    let first = r.body_mut().read_to_string().unwrap();
    let mut r = ureq::get(&search).call().unwrap();
    assert_eq!(r.headers()["x-cache"], "HIT");
    assert_eq!(r.body_mut().read_to_string().unwrap(), first);
}

#[test]
fn serve_rejects_bad_listen_address() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = f1_snapshot(tmp.path());
    let (c, out) = code(
        synergy()
            .args(["serve", "--listen", "not-an-address", "--snapshot"])
            .arg(&snap),
    );
    assert_eq!(c, 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiments_on_bundled_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("synth.mlg");
    ingest("synth", &snap);

    let out_dir = tmp.path().join("rc");
    let out = stdout_of(
        synergy()
            .args([
                "experiment",
                "rank-compare",
                "--molecule",
                "SYN001",
                "--top-t",
                "120",
                "--snapshot",
            ])
            .arg(&snap)
            .arg("--out")
            .arg(&out_dir),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["correlations"].as_array().unwrap().len(), 3);
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let scatter: Vec<_> = names.iter().filter(|n| n.contains("_vs_")).collect();
    assert_eq!(scatter.len(), 3);
    assert!(names.contains(&"SYN001_correlations.json".to_string()));

    let (c, out) = code(
        synergy()
            .args([
                "experiment",
                "rank-compare",
                "--molecule",
                "SYN001",
                "--top-t",
                "0",
                "--snapshot",
            ])
            .arg(&snap)
            .arg("--out")
            .arg(&out_dir),
    );

    assert_eq!(c, 2, "{}", String::from_utf8_lossy(&out.stderr));

    let run = |dir: &Path| {
        stdout_of(
            synergy()
                .args(["experiment", "validate", "--seed", "7", "--snapshot"])
                .arg(&snap)
                .arg("--out")
                .arg(dir),
        )
    };
    let (a, b) = (tmp.path().join("v1"), tmp.path().join("v2"));
    let first = run(&a);
    assert_eq!(first, run(&b));
    for f in ["validation_seed7.csv", "validation_seed7.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
    let v: Value = serde_json::from_str(&first).unwrap();
    assert!(v["odds_ratio"]["value"].as_f64().unwrap() > 0.0);
    assert!(v["table"]["coauthor_neighbor"].as_u64().is_some());

    let timing_dir = tmp.path().join("timing");
    let out = stdout_of(
        synergy()
            .args([
                "experiment",
                "timing",
                "--molecules",
                "SYN001,SYN002",
                "--repetitions",
                "2",
                "--snapshot",
            ])
            .arg(&snap)
            .arg("--out")
            .arg(&timing_dir),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert!(timing_dir.join("timing.csv").exists());
}

fn eutils(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("eutils").join(name)).unwrap()
}

#[test]
fn fetch_against_replay_server() {
    let tmp = tempfile::tempdir().unwrap();
    let server = ReplayServer::start(vec![
        (
            "/esearch.fcgi",
            vec![CannedResponse::ok(eutils("esearch.xml"))],
        ),
        (
            "/efetch.fcgi",
            vec![CannedResponse::ok(eutils("efetch.xml"))],
        ),
    ])
    .unwrap();
    let out = tmp.path().join("corpus.jsonl");
    stdout_of(
        synergy()
            .args([
                "fetch",
                "--query",
                "microglia",
                "--max",
                "10",
                "--base-url",
                &server.base_url(),
            ])
            .arg("--out")
            .arg(&out),
    );
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);

    let empty = tmp.path().join("empty.jsonl");
    stdout_of(
        synergy()
            .args([
                "fetch",
                "--query",
                "x",
                "--max",
                "0",
                "--base-url",
                &server.base_url(),
            ])
            .arg("--out")
            .arg(&empty),
    );
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), "");

    let failing =
        ReplayServer::start(vec![("/esearch.fcgi", vec![CannedResponse::status(500)])]).unwrap();
    let (c, out) = code(
        synergy()
            .args([
                "fetch",
                "--query",
                "x",
                "--max",
                "3",
                "--base-url",
                &failing.base_url(),
            ])
            .arg("--out")
            .arg(tmp.path().join("fail.jsonl")),
    );
    assert_eq!(c, 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_reproduces_bundled_files() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("s.mlg");
    stdout_of(
        synergy()
            .args(["synth", "--out"])
            .arg(tmp.path())
            .arg("--snapshot")
            .arg(&snap),
    );
    for f in ["catalog.tsv", "interactions.tsv", "corpus.jsonl"] {
        assert_eq!(
            std::fs::read(tmp.path().join(f)).unwrap(),
            std::fs::read(fixtures().join("synth").join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(snap.exists());
}
