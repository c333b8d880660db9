use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stereoreader"));
    c.env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Parses, canonicalizes and builds anonymized train and test instances.
fn build_fixture_instances(dir: &Path) -> (PathBuf, PathBuf) {
    let f = fixtures();
    let raw = dir.join("raw.jsonl");
    let corpus = dir.join("corpus.jsonl");
    let o = run(&[
        "parse",
        "--input",
        &s(&f.join("scripts")),
        "--splits",
        &s(&f.join("splits.tsv")),
        "--out",
        &s(&raw),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "canonicalize",
        "--corpus",
        &s(&raw),
        "--roster",
        &s(&f.join("rosters.jsonl")),
        "--out",
        &s(&corpus),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut out = Vec::new();
    for split in ["train", "test"] {
        let path = dir.join(format!("{split}.jsonl"));
        let o = run(&[
            "--seed",
            "5",
            "build",
            "--corpus",
            &s(&corpus),
            "--relations",
            &s(&f.join("relations.jsonl")),
            "--lexicon",
            &s(&f.join("lexicon.tsv")),
            "--anonymize",
            "--episodes",
            &s(&f.join("episodes.jsonl")),
            "--split",
            split,
            "--out",
            &s(&path),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out.push(path);
    }
    (out.remove(0), out.remove(0))
}

#[test]
fn help_lists_every_subcommand() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for cmd in [
        "parse",
        "canonicalize",
        "build",
        "stats",
        "train",
        "predict",
        "prompt",
        "infer",
        "ingest",
        "evaluate",
        "analyze",
    ] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
    for flag in ["--seed", "--config", "--log-level", "--jobs"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert_eq!(run(&["train"]).status.code(), Some(1));
    let o = run(&[
        "analyze",
        "arc",
        "--preds",
        "p",
        "--instances",
        "i",
        "--dyad",
        "just-one",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn corrupt_instances_exit_two_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = build_fixture_instances(dir.path());
    let text = std::fs::read_to_string(&train).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "{\"title_id\": \"x\", \"scene_index\": \"three\"}";
    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, lines.join("\n")).unwrap();
    let o = run(&[
        "train",
        "--instances",
        &s(&corrupt),
        "--out",
        &s(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("corrupt.jsonl:3:"), "{}", stderr(&o));

    let missing = run(&["train", "--instances", "/nonexistent/inst.jsonl", "--out", "m.json"]);
    assert_eq!(missing.status.code(), Some(3), "{}", stderr(&missing));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = build_fixture_instances(dir.path());
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 4\n[reader]\nd_model = 8\nmax_len = 64\nepochs = 3\noptimizer = \"adam\"\nlearning_rate = 0.01\n",
    )
    .unwrap();
    let model = dir.path().join("model.json");
    let o = run(&[
        "--config",
        &s(&cfg),
        "--seed",
        "9",
        "train",
        "--instances",
        &s(&train),
        "--epochs",
        "1",
        "--out",
        &s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved["config"]["epochs"], 1);
    assert_eq!(saved["config"]["seed"], 9);
    assert_eq!(saved["config"]["d_model"], 8);

    std::fs::write(&cfg, "[reader]\nd_modle = 8\n").unwrap();
    let o = run(&[
        "--config",
        &s(&cfg),
        "train",
        "--instances",
        &s(&train),
        "--out",
        &s(&model),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d_modle"), "{}", stderr(&o));
}

#[test]
fn ingest_reports_unmatched_and_relabeled_records() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test) = build_fixture_instances(dir.path());
    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(&test).unwrap().lines().next().unwrap()).unwrap();
    let key = |scene: &serde_json::Value| serde_json::json!({"title_id": first["title_id"], "scene_index": scene, "head": first["head"], "tail": first["tail"]});
    let file = dir.path().join("external.jsonl");
    let mut rec = key(&first["scene_index"]);
    rec["predicted"] = "Spouse of".into();
    let mut stray = key(&999.into());
    stray["predicted"] = "frend_of".into();
    std::fs::write(&file, format!("{rec}\n{stray}\n")).unwrap();
    let out = dir.path().join("normalized.jsonl");
    let o = run(&[
        "ingest",
        "--file",
        &s(&file),
        "--instances",
        &s(&test),
        "--model-id",
        "llm",
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("records      2"), "{report}");
    assert!(report.contains("unmatched    1"), "{report}");
    assert!(report.contains("-> friend_of"), "{report}");
    let normalized = std::fs::read_to_string(&out).unwrap();
    assert!(normalized
        .lines()
        .next()
        .unwrap()
        .contains("\"predicted\":\"spouse_of\""));
}

/// Answers every chat request with `reply`.
fn chat_server(reply: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap_or(0) == 0 {
                    break;
                }
                let h = h.trim_end().to_ascii_lowercase();
                if h.is_empty() {
                    break;
                }
                if let Some(v) = h.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            let _ = reader.read_exact(&mut body);
            let body =
                serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    format!("http://{addr}")
}

#[test]
fn prompt_infer_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = build_fixture_instances(dir.path());
    let prompts = dir.path().join("prompts.jsonl");
    let o = run(&[
        "prompt",
        "--instances",
        &s(&test),
        "--mode",
        "one",
        "--out",
        &s(&prompts),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(&prompts).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["messages"].as_array().unwrap().len(), 5);
    assert!(first["messages"][4]["content"]
        .as_str()
        .unwrap()
        .contains("<question> ENTITY "));

    let base = chat_server("{\"answer\": \"Spouse_of\"}");
    let llm = dir.path().join("llm.jsonl");
    let o = bin()
        .args([
            "infer",
            "--prompts",
            &s(&prompts),
            "--in-flight",
            "2",
            "--out",
            &s(&llm),
        ])
        .env("LLM_BASE_URL", &base)
        .env("LLM_API_KEY", "k")
        .env("LLM_MODEL", "fixture-llm")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = std::fs::read_to_string(&llm).unwrap();
    assert_eq!(
        preds.lines().count(),
        std::fs::read_to_string(&test).unwrap().lines().count()
    );
    assert!(preds
        .lines()
        .all(|l| l.contains("\"predicted\":\"spouse_of\"") && l.contains("fixture-llm")));

    let model = dir.path().join("model.json");
    let reader = dir.path().join("reader.jsonl");
    let o = run(&[
        "train",
        "--instances",
        &s(&train),
        "--d-model",
        "8",
        "--max-len",
        "64",
        "--epochs",
        "2",
        "--optimizer",
        "adam",
        "--learning-rate",
        "0.01",
        "--out",
        &s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "predict",
        "--model",
        &s(&model),
        "--instances",
        &s(&test),
        "--out",
        &s(&reader),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "evaluate",
        "--preds",
        &s(&reader),
        "--truth",
        &s(&test),
        "--compare",
        &s(&llm),
        "--resamples",
        "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("fixture-llm"), "{report}");
    assert!(report.contains("cohen's kappa (reader vs fixture-llm)"), "{report}");
}

#[test]
fn infer_without_credentials_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let prompts = dir.path().join("p.jsonl");
    std::fs::write(&prompts, "").unwrap();
    let o = bin()
        .args([
            "infer",
            "--prompts",
            &s(&prompts),
            "--out",
            &s(&dir.path().join("o.jsonl")),
        ])
        .env_remove("LLM_BASE_URL")
        .env_remove("LLM_API_KEY")
        .env_remove("LLM_MODEL")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("LLM_"), "{}", stderr(&o));
}
