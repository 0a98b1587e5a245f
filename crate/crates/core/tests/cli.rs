mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{chat_response, valid_content, MockServer};
use policylens::pipeline::{sha256_hex, Manifest};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(rel)
}

fn pl(args: &[&str]) -> Output {
    pl_env(args, &[])
}

fn pl_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_policylens"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every file under `dir` with its hash, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, sha256_hex(&fs::read(&p).unwrap()));
            }
        }
    }
    out
}

fn prepared(out: &Path) {
    let corpus = fixture("synth_small.jsonl");
    let o = out.to_str().unwrap();
    ok(pl(&["--out", o, "ingest", "--corpus", corpus.to_str().unwrap()]));
    ok(pl(&["--out", o, "annotate", "--backend", "baseline"]));
    ok(pl(&["--out", o, "cohort"]));
}

#[test]
fn stats_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    ok(pl(&["--out", dir.path().to_str().unwrap(), "stats"]));
    let got = fs::read(dir.path().join("stats/obligations.csv")).unwrap();
    let path = golden("small/obligations.csv");
    if std::env::var_os("POLICYLENS_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &got).unwrap();
    }
    assert_eq!(String::from_utf8(got).unwrap(), fs::read_to_string(path).unwrap());
}

#[test]
fn annotate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    let o = dir.path().to_str().unwrap();
    let first = snapshot(dir.path());
    ok(pl(&["--out", o, "annotate", "--backend", "baseline", "--workers", "1"]));
    assert_eq!(first, snapshot(dir.path()));
}

#[test]
fn full_run_is_restartable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "out_dir = \"out\"\n[x]\ny = 1\n").unwrap();
    // unknown tables are rejected
    let bad = pl(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(bad.status.code(), Some(1), "{}", stderr(&bad));

    fs::write(
        &cfg,
        format!(
            "corpus = [\"{}\"]\nout_dir = \"out\"\ntruth = \"{}\"\n[stages]\nvalidate = true\n",
            fixture("synth_small.jsonl").display(),
            fixture("synth_small_truth.csv").display()
        ),
    )
    .unwrap();
    ok(pl(&["--config", cfg.to_str().unwrap(), "run"]));
    let out = dir.path().join("out");
    let first = snapshot(&out);
    assert!(first.contains_key("report.md") && first.contains_key("validation/metrics.csv"));
    ok(pl(&["--config", cfg.to_str().unwrap(), "run"]));
    assert_eq!(first, snapshot(&out));
}

#[test]
fn report_only_formats_stage_outputs() {
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    let o = dir.path().to_str().unwrap();
    ok(pl(&["--out", o, "stats"]));
    ok(pl(&["--out", o, "generators"]));
    let before = snapshot(dir.path());
    ok(pl(&["--out", o, "report"]));
    let after = snapshot(dir.path());
    for (k, v) in &before {
        if k != "manifest.json" {
            assert_eq!(after.get(k), Some(v), "{k} changed");
        }
    }
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let report = &manifest.stages["report"];
    assert!(report.inputs.len() >= 5);
    for (input, hash) in &report.inputs {
        assert_eq!(before.get(input), Some(hash), "{input}");
        let producer = manifest.stages.values().find(|s| s.outputs.contains_key(input)).unwrap();
        assert_eq!(&producer.outputs[input], hash);
    }
    let text = fs::read_to_string(dir.path().join("report.md")).unwrap();
    let table = fs::read_to_string(dir.path().join("stats/obligations.md")).unwrap();
    assert!(text.contains(table.trim_end()));

    // editing a stage output changes the report verbatim, nothing else
    let edited = table.replacen("contr", "controller", 1);
    fs::write(dir.path().join("stats/obligations.md"), &edited).unwrap();
    ok(pl(&["--out", o, "report"]));
    let text2 = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert_eq!(text2, text.replacen(table.trim_end(), edited.trim_end(), 1));
}

#[test]
fn missing_corpus_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = pl(&["--out", dir.path().to_str().unwrap(), "ingest", "--corpus", "/no/such/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/no/such/corpus.jsonl"), "{}", stderr(&out));
}

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(pl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pl(&["stats", "--alpha", "x"]).status.code(), Some(1));
    assert_eq!(pl(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let out = pl(&["--out", dir.path().to_str().unwrap(), "--alpha", "1.5", "stats"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn stage_without_inputs_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pl(&["--out", dir.path().to_str().unwrap(), "stats"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("documents.jsonl"), "{}", stderr(&out));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    fs::write(&corpus, "{not json}\n{\"doc_id\": 1}\n").unwrap();
    let out = pl(&["--out", dir.path().join("o").to_str().unwrap(), "ingest", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn config_interpolates_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "corpus = [\"${PL_CORPUS}\"]\nout_dir = \"${PL_OUT}\"\n").unwrap();
    let out_dir = dir.path().join("env-out");
    let env = [("PL_CORPUS", fixture("synth_small.jsonl")), ("PL_OUT", out_dir.clone())];
    let env: Vec<(&str, &str)> = env.iter().map(|(k, v)| (*k, v.to_str().unwrap())).collect();
    ok(pl_env(&["--config", cfg.to_str().unwrap(), "ingest"], &env));
    assert!(out_dir.join("corpus/documents.jsonl").exists());

    let missing = pl_env(&["--config", cfg.to_str().unwrap(), "ingest"], &env[..1]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("PL_OUT"));
    let no_file = pl(&["--config", "/no/such/run.toml", "ingest"]);
    assert_eq!(no_file.status.code(), Some(1));
    assert!(stderr(&no_file).contains("/no/such/run.toml"));
}

fn remote_config(dir: &Path, endpoint: &str) -> PathBuf {
    let cfg = dir.join("remote.toml");
    fs::write(
        &cfg,
        format!(
            "out_dir = \"out\"\nbackend = \"remote\"\nworkers = 4\n[remote]\nendpoint = \"{endpoint}\"\nmodel = \"mock\"\ntimeout_secs = 5\n[remote.retry]\nmax_attempts = 2\nbase_delay_ms = 1\nmax_delay_ms = 2\n"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn remote_backend_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = remote_config(dir.path(), "http://127.0.0.1:9/v1/chat/completions");
    let c = cfg.to_str().unwrap();
    ok(pl(&["--config", c, "ingest", "--corpus", fixture("synth_small.jsonl").to_str().unwrap()]));
    let out = pl(&["--config", c, "annotate"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn remote_backend_uses_disk_cache_across_runs() {
    let server = MockServer::start(|_| (200, chat_response(&valid_content())));
    let dir = tempfile::tempdir().unwrap();
    let cfg = remote_config(dir.path(), &format!("{}/v1/chat/completions", server.url));
    let c = cfg.to_str().unwrap();
    ok(pl(&["--config", c, "ingest", "--corpus", fixture("synth_small.jsonl").to_str().unwrap()]));
    ok(pl(&["--config", c, "annotate"]));
    let hits = server.hits();
    assert!(hits > 0);
    let out = dir.path().join("out");
    let first = snapshot(&out);
    assert!(first.contains_key("annotations/mock.jsonl"));
    ok(pl(&["--config", c, "annotate"]));
    assert_eq!(server.hits(), hits);
    assert_eq!(first, snapshot(&out));
    // analysis stages follow the configured backend
    ok(pl(&["--config", c, "cohort"]));
    ok(pl(&["--config", c, "stats"]));
}

#[test]
fn validate_and_agreement_stages() {
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    let o = dir.path().to_str().unwrap();
    let truth = fixture("synth_small_truth.csv");
    ok(pl(&["--out", o, "validate", "--truth", truth.to_str().unwrap()]));
    let csv = fs::read_to_string(dir.path().join("validation/metrics.csv")).unwrap();
    assert!(csv.starts_with("dimension,language,precision,recall,f1,support\n"));
    assert!(csv.contains("ispol,de,1.0000,1.0000,1.0000,"));

    // second coder: the truth with every third comp label flipped
    let text = fs::read_to_string(&truth).unwrap();
    let mut coders = String::from(text.lines().next().unwrap());
    coders.push('\n');
    for (i, line) in text.lines().skip(1).enumerate() {
        coders.push_str(line);
        coders.push('\n');
        let mut cells: Vec<String> = line.split(',').map(str::to_string).collect();
        cells[1] = "coder-b".into();
        if i % 3 == 0 && cells[2] == "1" {
            cells[9] = if cells[9] == "1" { "0".into() } else { "1".into() };
        }
        coders.push_str(&cells.join(","));
        coders.push('\n');
    }
    let human = dir.path().join("coders.csv");
    fs::write(&human, coders).unwrap();
    ok(pl(&["--out", o, "agreement", "--human", human.to_str().unwrap()]));
    let alpha = fs::read_to_string(dir.path().join("agreement/alpha.csv")).unwrap();
    assert!(alpha.contains("contr,1.0000,"), "{alpha}");
    let comp: f64 = alpha.lines().find(|l| l.starts_with("comp,")).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(comp < 1.0 && comp > 0.0);
}

#[test]
fn cluster_from_precomputed_embeddings() {
    use rand::{Rng, SeedableRng};
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    let o = dir.path().to_str().unwrap();
    ok(pl(&["--out", o, "generators"]));
    let docs = fs::read_to_string(dir.path().join("corpus/documents.jsonl")).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut lines = String::new();
    for line in docs.lines().take(60) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let values: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = serde_json::json!({"doc_id": v["doc_id"], "model_id": "m", "truncated_to": 10, "values": values});
        lines.push_str(&e.to_string());
        lines.push('\n');
    }
    let emb = dir.path().join("emb.jsonl");
    fs::write(&emb, lines).unwrap();
    let args =
        ["--out", o, "cluster", "--embeddings", emb.to_str().unwrap(), "--perplexity", "10", "--iterations", "200"];
    ok(pl(&args));
    let csv = fs::read_to_string(dir.path().join("cluster/projection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);
    assert!(fs::read_to_string(dir.path().join("cluster/projection.svg")).unwrap().starts_with("<svg"));
    let first = snapshot(dir.path());
    ok(pl(&args));
    assert_eq!(first, snapshot(dir.path()));
}

#[test]
fn synth_writes_corpus_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.jsonl");
    let t = dir.path().join("t.csv");
    ok(pl(&[
        "--seed",
        "7",
        "synth",
        "--websites",
        "120",
        "--corpus-out",
        c.to_str().unwrap(),
        "--truth-out",
        t.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&c).unwrap(), fs::read(fixture("synth_small.jsonl")).unwrap());
    assert_eq!(fs::read(&t).unwrap(), fs::read(fixture("synth_small_truth.csv")).unwrap());
}
