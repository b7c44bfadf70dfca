use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn parcomp(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parcomp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PARCOMP_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn record(lang: &str, id: u64, logprobs: &[f64], ranks: bool) -> String {
    let tokens: Vec<String> = logprobs.iter().map(|_| "\"x\"".to_string()).collect();
    let lps: Vec<String> = logprobs.iter().map(f64::to_string).collect();
    let ranks = if ranks {
        format!(",\"ranks\":[{}]", vec!["2"; logprobs.len()].join(","))
    } else {
        String::new()
    };
    format!(
        "{{\"lang\":\"{lang}\",\"sample_id\":{id},\"tokens\":[{}],\"logprobs\":[{}]{ranks},\"char_count\":4}}\n",
        tokens.join(","),
        lps.join(",")
    )
}

fn write_scores(path: &Path, lang: &str, rows: &[&[f64]], ranks: bool) {
    let text: String = rows
        .iter()
        .enumerate()
        .map(|(i, lp)| record(lang, i as u64, lp, ranks))
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn metrics_writes_csv_json_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    write_scores(&dir.path().join("de.jsonl"), "deu", &[&[-1.0, -2.0], &[-0.5]], true);
    let out = parcomp(dir.path(), &["metrics", "--scores", "de.jsonl", "--out", "m.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "checkpoint,lang,metric,value,n_sentences");
    let metrics: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(metrics, ["NLL", "PPL", "BPC", "TOTAL_BITS", "MRR"]);
    assert!(dir.path().join("m.json").exists());
    let echo = fs::read_to_string(dir.path().join("m.csv.config.json")).unwrap();
    assert!(echo.contains("\"subcommand\": \"metrics\""));
    assert!(echo.contains("\"json\": \"m.json\""), "{echo}");
}

#[test]
fn missing_ranks_reported_not_invented() {
    let dir = tempfile::tempdir().unwrap();
    write_scores(&dir.path().join("de.jsonl"), "deu", &[&[-1.0]], false);
    let out = parcomp(dir.path(), &["metrics", "--scores", "de.jsonl", "--out", "m.csv"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("MRR unavailable"));
    assert!(!fs::read_to_string(dir.path().join("m.csv")).unwrap().contains("MRR"));
    let out = parcomp(
        dir.path(),
        &[
            "consistency",
            "--source",
            "de.jsonl",
            "--paraphrase",
            "de.jsonl",
            "--paraphrase",
            "b=de.jsonl",
            "--metric",
            "mrr",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("consistency"), "{}", stderr(&out));
}

#[test]
fn consistency_report_and_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_scores(&p.join("en.jsonl"), "eng", &[&[-1.0], &[-5.0], &[-3.0]], true);
    write_scores(&p.join("de1.jsonl"), "deu", &[&[-2.0], &[-1.0], &[-3.0]], true);
    write_scores(&p.join("de2.jsonl"), "deu", &[&[-3.0], &[-2.0], &[-4.0]], true);
    let out = parcomp(
        p,
        &[
            "consistency",
            "--source",
            "en.jsonl",
            "--paraphrase",
            "de1.jsonl",
            "--paraphrase",
            "de2.jsonl",
            "--metric",
            "nll",
            "--out",
            "r.json",
            "--figure-data",
            "fig.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(v["metric"], "nll");
    assert_eq!(v["n"], 3);
    assert_eq!(v["splits_original"]["names"], serde_json::json!(["de1", "de2"]));
    assert!((v["inconsistency_rate"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let fig = fs::read_to_string(p.join("fig.csv")).unwrap();
    assert_eq!(fig.lines().next(), Some("rank,id,source,de1,de2,verdict"));

    // PPL needs an explicit opt-in
    let ppl = [
        "consistency",
        "--source",
        "en.jsonl",
        "--paraphrase",
        "de1.jsonl",
        "--paraphrase",
        "de2.jsonl",
        "--metric",
        "ppl",
        "--out",
        "p.json",
    ];
    assert_eq!(code(&parcomp(p, &ppl)), 1);
    let mut allowed = ppl.to_vec();
    allowed.push("--allow-ppl");
    assert_eq!(code(&parcomp(p, &allowed)), 0);

    let out = parcomp(p, &["report", "--consistency", "r.json", "--out", "report.md"]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(p.join("report.md")).unwrap().contains("33.3%"));
}

#[test]
fn misaligned_sets_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_scores(&p.join("en.jsonl"), "eng", &[&[-1.0], &[-2.0]], false);
    write_scores(&p.join("de1.jsonl"), "deu", &[&[-2.0]], false);
    write_scores(&p.join("de2.jsonl"), "deu", &[&[-2.0], &[-1.0]], false);
    let out = parcomp(
        p,
        &[
            "consistency",
            "--source",
            "en.jsonl",
            "--paraphrase",
            "de1.jsonl",
            "--paraphrase",
            "de2.jsonl",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(!p.join("r.json").exists());
}

#[test]
fn strict_and_lenient_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("x.jsonl"),
        "{\"lang\":\"deu\",\"sample_id\":0,\"tokens\":[\"a\"],\"logprobs\":[-1.0],\"char_count\":1,\"model\":\"m\"}\n",
    )
    .unwrap();
    let out = parcomp(p, &["metrics", "--scores", "x.jsonl", "--out", "m.csv"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
    assert_eq!(
        code(&parcomp(
            p,
            &["metrics", "--scores", "x.jsonl", "--out", "m.csv", "--lenient"]
        )),
        0
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["bogus"][..],
        &["metrics", "--out", "m.csv"],
        &["score", "--unknown-flag"],
        &["consistency", "--metric", "xyz"],
    ] {
        assert_eq!(code(&parcomp(dir.path(), args)), 2, "{args:?}");
    }
    assert_eq!(
        code(&parcomp(
            dir.path(),
            &["metrics", "--scores", "a.jsonl", "--out", "m.json"]
        )),
        2
    );
    assert_eq!(
        code(&parcomp(
            dir.path(),
            &["metrics", "--scores", "nope.jsonl", "--out", "m.csv"]
        )),
        1
    );
}

#[test]
fn stages_chain_by_hand_and_rerun_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("en.txt"), "the cat sat\nthe dog ran\na cat ran\nthe cat ran\n").unwrap();
    fs::write(
        p.join("de.txt"),
        "die Katze saß\nder Hund lief\neine Katze lief\ndie Katze lief\n",
    )
    .unwrap();
    fs::write(p.join("fr.txt"), "le chat\nle chien\nun chat\nle chat court\n").unwrap();
    fs::write(
        p.join("bitexts.json"),
        r#"{"bitexts": [
            {"a": {"code": "eng", "path": "en.txt"}, "b": {"code": "deu", "path": "de.txt"}},
            {"a": {"code": "fra", "path": "fr.txt"}, "b": {"code": "eng", "path": "en.txt"}}
        ]}"#,
    )
    .unwrap();
    let steps: [&[&str]; 5] = [
        &["align", "--bitexts", "bitexts.json", "--out-dir", "aligned"],
        &[
            "split",
            "--corpus",
            "aligned/corpus.json",
            "--dev-fraction",
            "0.25",
            "--out-dir",
            "split",
        ],
        &[
            "train-tokenizer",
            "--corpus",
            "split/train/corpus.json",
            "--lang",
            "deu",
            "--out",
            "tok.json",
        ],
        &[
            "train-lm",
            "--corpus",
            "split/train/corpus.json",
            "--lang",
            "deu",
            "--tokenizer",
            "tok.json",
            "--checkpoint-every",
            "2",
            "--out-dir",
            "lm",
        ],
        &[
            "score",
            "--model",
            "lm/lm-3.json",
            "--tokenizer",
            "tok.json",
            "--input",
            "split/dev/deu.txt",
            "--lang",
            "deu",
            "--out",
            "dev.jsonl",
        ],
    ];
    for args in steps {
        let out = parcomp(p, args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    let align_echo = fs::read_to_string(p.join("aligned/config.json")).unwrap();
    assert!(align_echo.contains("\"pivot\": \"eng\""), "{align_echo}");
    let split_echo = fs::read_to_string(p.join("split/config.json")).unwrap();
    assert!(split_echo.contains("\"seed\": 0"));
    let tok_echo = fs::read_to_string(p.join("tok.json.config.json")).unwrap();
    assert!(tok_echo.contains("\"vocab_size\": 32000"), "{tok_echo}");
    let index = fs::read_to_string(p.join("lm/checkpoints.json")).unwrap();
    assert!(index.contains("lm-2.json") && index.contains("lm-3.json"));
    assert_eq!(
        fs::read_to_string(p.join("split/dev/eng.txt")).unwrap().lines().count(),
        1
    );

    let first = fs::read(p.join("dev.jsonl")).unwrap();
    fs::remove_file(p.join("dev.jsonl")).unwrap();
    let out = parcomp(p, &["rerun", "--config", "dev.jsonl.config.json", "--jobs", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(p.join("dev.jsonl")).unwrap(), first);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let lines: String = (0..20).map(|i| format!("s{i}\n")).collect();
    fs::write(p.join("a.txt"), &lines).unwrap();
    fs::write(p.join("c.json"), r#"{"languages": [{"code": "eng", "path": "a.txt"}]}"#).unwrap();
    let run = |env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_parcomp"));
        cmd.current_dir(p)
            .env_remove("PARCOMP_SEED")
            .args(["split", "--corpus", "c.json", "--out-dir", "o"])
            .args(args);
        if let Some(s) = env {
            cmd.env("PARCOMP_SEED", s);
        }
        assert!(cmd.status().unwrap().success());
        (
            fs::read_to_string(p.join("o/dev/eng.txt")).unwrap(),
            fs::read_to_string(p.join("o/config.json")).unwrap(),
        )
    };
    let (env_dev, env_echo) = run(Some("42"), &[]);
    let (flag_dev, _) = run(None, &["--seed", "42"]);
    let (flag_wins, _) = run(Some("1"), &["--seed", "42"]);
    assert_eq!(env_dev, flag_dev);
    assert_eq!(flag_wins, flag_dev);
    assert!(env_echo.contains("\"seed\": 42"));
    assert_eq!(env_dev.lines().count(), 2);
}
