//! Command-level behavior: exit codes, summaries, idempotency and input
//! immutability.

mod common;

use common::{exit_code, fixture, parse_summary, read_bytes, Pipeline};

#[test]
fn ingest_valid_fixture() {
    let p = Pipeline::new();
    let summary = p.run_ok(&["ingest"]);
    assert_eq!(summary["rows_in"], 25);
    assert_eq!(summary["accepted"], 25);
    assert_eq!(summary["deduped"], 0);
    assert_eq!(summary["errors"], 0);
    assert!(p.out_file("cleaned.csv").exists());
    assert!(p.out_file("row_errors.json").exists());
}

#[test]
fn ingest_missing_file_exits_1() {
    let p = Pipeline::with_corpus(std::path::Path::new("/nonexistent/corpus.csv"));
    let output = p.run(&["ingest"]);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn ingest_reports_duplicates_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("small.csv");
    std::fs::write(
        &corpus,
        "journal,title,year,abstract\n\
         J1,T1,2010,shared duplicate text\n\
         J2,T2,20xx,fine words\n\
         J3,T3,2012,Shared   DUPLICATE text\n\
         J4,T4,2013,unique words\n",
    )
    .unwrap();
    let p = Pipeline::with_corpus(&corpus);
    let summary = p.run_ok(&["ingest"]);
    assert_eq!(summary["rows_in"], 4);
    assert_eq!(summary["accepted"], 3);
    assert_eq!(summary["deduped"], 1);
    assert_eq!(summary["errors"], 1);
    assert_eq!(summary["kept"], 2);

    let errors: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.out_file("row_errors.json")).unwrap())
            .unwrap();
    assert_eq!(errors[0]["row_number"], 2);
    assert_eq!(errors[0]["reason"], "bad_year");
}

#[test]
fn ingest_strict_fails_on_rejected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.csv");
    std::fs::write(
        &corpus,
        "journal,title,year,abstract\nJ1,T1,nope,text here\nJ2,T2,2010,fine\n",
    )
    .unwrap();
    let p = Pipeline::with_corpus(&corpus);
    let output = p.run(&["--strict", "ingest"]);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn score_after_ingest() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let summary = p.run_ok(&["score"]);
    assert_eq!(summary["records"], 25);
    assert_eq!(summary["scored"], 25);
    assert_eq!(summary["failed"], 0);
    let scored = std::fs::read_to_string(p.out_file("scored.csv")).unwrap();
    assert!(scored.starts_with("journal,title,year,abstract,sentiment_score,sentiment_label"));
    assert_eq!(scored.lines().count(), 26);
}

#[test]
fn score_unknown_backend_exits_2() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let output = p.run(&["score", "--backend", "magic:crystal-ball"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn score_empty_corpus_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.csv");
    std::fs::write(&corpus, "journal,title,year,abstract\n").unwrap();
    let p = Pipeline::with_corpus(&corpus);
    p.run_ok(&["ingest"]);
    let summary = p.run_ok(&["score"]);
    assert_eq!(summary["scored"], 0);
    let scored = std::fs::read_to_string(p.out_file("scored.csv")).unwrap();
    assert_eq!(
        scored.trim_end(),
        "journal,title,year,abstract,sentiment_score,sentiment_label"
    );
}

#[test]
fn analyze_emits_six_files() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let summary = p.run_ok(&["analyze"]);
    let outputs = summary["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 6);
    for name in [
        "histogram.svg",
        "trend.svg",
        "journals.svg",
        "histogram.csv",
        "trend.csv",
        "journals.csv",
    ] {
        let path = p.out_file(name);
        assert!(path.exists(), "{name} missing");
        assert!(std::fs::metadata(&path).unwrap().len() > 0, "{name} empty");
    }
}

#[test]
fn analyze_without_trend_range_exits_2() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    // a config without [trend] and no flags
    let bare = p.dir.path().join("bare.toml");
    std::fs::write(
        &bare,
        format!("backend = \"lexicon:{}\"\n", fixture("lexicon.tsv").display()),
    )
    .unwrap();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_tenor"))
        .args(["--config"])
        .arg(&bare)
        .arg("--output-dir")
        .arg(p.out_dir())
        .arg("analyze")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn analyze_rejects_unavailable_chart_format() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let mut config = std::fs::read_to_string(&p.config_path).unwrap();
    config.insert_str(0, "chart_format = \"png\"\n");
    let png_config = p.dir.path().join("png.toml");
    std::fs::write(&png_config, config).unwrap();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_tenor"))
        .arg("--config")
        .arg(&png_config)
        .arg("--output-dir")
        .arg(p.out_dir())
        .arg("analyze")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn analyze_empty_corpus_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.csv");
    std::fs::write(&corpus, "journal,title,year,abstract\n").unwrap();
    let p = Pipeline::with_corpus(&corpus);
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let summary = p.run_ok(&["analyze"]);
    assert_eq!(summary["records"], 0);
    let trend = std::fs::read_to_string(p.out_file("trend.csv")).unwrap();
    // empty years are present with zero counts and no mean
    assert_eq!(trend.lines().count(), 1 + 11);
    assert!(trend.lines().nth(1).unwrap().starts_with("2010,0,"));
}

#[test]
fn explain_unknown_record_exits_2() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let output = p.run(&["explain", "999", "--exact"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn explain_exact_on_long_abstract_exits_2() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    // record 0 is far beyond the 12-word exact bound
    let output = p.run(&["explain", "0", "--exact"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn explain_requires_a_method() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let output = p.run(&["explain", "6"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn explain_exact_short_record() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let summary = p.run_ok(&["explain", "6", "--exact"]);
    assert_eq!(summary["method"], "exact_shapley");
    assert_eq!(summary["sample_count"], 0);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.out_file("explain_6.json")).unwrap())
            .unwrap();
    // additivity is visible in the emitted JSON
    let base = report["base_value"].as_f64().unwrap();
    let output_value = report["model_output"].as_f64().unwrap();
    let total: f64 = report["attributions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["value"].as_f64().unwrap())
        .sum();
    assert!((base + total - output_value).abs() < 1e-9);

    let html = std::fs::read_to_string(p.out_file("explain_6.html")).unwrap();
    assert!(html.contains("effective"));
}

#[test]
fn explain_sampled_is_reproducible() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["--seed", "7", "explain", "6", "--samples", "500"]);
    let first = read_bytes(&p.out_file("explain_6.json"));
    p.run_ok(&["--seed", "7", "explain", "6", "--samples", "500"]);
    let second = read_bytes(&p.out_file("explain_6.json"));
    assert_eq!(first, second);
}

#[test]
fn explain_is_independent_of_worker_count() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["--seed", "3", "--jobs", "1", "explain", "6", "--samples", "300"]);
    let sequential = read_bytes(&p.out_file("explain_6.json"));
    p.run_ok(&["--seed", "3", "--jobs", "4", "explain", "6", "--samples", "300"]);
    let parallel = read_bytes(&p.out_file("explain_6.json"));
    assert_eq!(sequential, parallel);
}

#[test]
fn validate_from_warmed_cache() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let summary = p.run_ok(&["validate", "--sample-size", "10"]);
    assert_eq!(summary["n"], 10);
    assert_eq!(summary["live_calls"], 0);
    assert_eq!(summary["served_from_cache"], 10);
    assert!(p.out_file("agreement.json").exists());
}

#[test]
fn validate_sample_larger_than_corpus_exits_2() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let output = p.run(&["validate", "--sample-size", "26"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn validate_live_without_token_exits_2_before_network() {
    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    // live mode pointed at a closed port: the missing token must fail the
    // command before any connection attempt
    let config = p.dir.path().join("live.toml");
    std::fs::write(
        &config,
        format!(
            "backend = \"lexicon:{}\"\n[llm]\nendpoint = \"http://127.0.0.1:1\"\nmodel = \"m\"\ncache_path = \"{}\"\nmode = \"live\"\n",
            fixture("lexicon.tsv").display(),
            p.dir.path().join("cache.jsonl").display(),
        ),
    )
    .unwrap();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_tenor"))
        .arg("--config")
        .arg(&config)
        .arg("--output-dir")
        .arg(p.out_dir())
        .args(["validate", "--sample-size", "3"])
        .env_remove("TENOR_LLM_TOKEN")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2, "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn validate_fixture_miss_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("tiny.csv");
    std::fs::write(
        &corpus,
        "journal,title,year,abstract\nJ,T,2010,words not in the shipped cache\n",
    )
    .unwrap();
    let p = Pipeline::with_corpus(&corpus);
    p.run_ok(&["ingest"]);
    p.run_ok(&["score"]);
    let output = p.run(&["validate", "--sample-size", "1"]);
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("fixture miss"), "stderr: {stderr}");
}

#[test]
fn commands_do_not_mutate_inputs() {
    let corpus_before = read_bytes(&fixture("corpus_25.csv"));
    let cache_before = read_bytes(&fixture("llm_cache.jsonl"));
    let lexicon_before = read_bytes(&fixture("lexicon.tsv"));

    let p = Pipeline::new();
    p.run_ok(&["ingest"]);
    let cleaned_after_ingest = read_bytes(&p.out_file("cleaned.csv"));
    p.run_ok(&["score"]);
    assert_eq!(
        cleaned_after_ingest,
        read_bytes(&p.out_file("cleaned.csv")),
        "score must not touch the cleaned corpus"
    );
    p.run_ok(&["analyze"]);
    p.run_ok(&["validate", "--sample-size", "5"]);

    assert_eq!(corpus_before, read_bytes(&fixture("corpus_25.csv")));
    assert_eq!(cache_before, read_bytes(&fixture("llm_cache.jsonl")));
    assert_eq!(lexicon_before, read_bytes(&fixture("lexicon.tsv")));
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let p = Pipeline::new();
    let outputs = [
        "cleaned.csv",
        "row_errors.json",
        "scored.csv",
        "histogram.csv",
        "trend.csv",
        "journals.csv",
        "histogram.svg",
        "trend.svg",
        "journals.svg",
        "explain_6.json",
        "explain_6.html",
        "agreement.json",
    ];
    let run_all = || {
        p.run_ok(&["ingest"]);
        p.run_ok(&["score"]);
        p.run_ok(&["analyze"]);
        p.run_ok(&["explain", "6", "--samples", "200"]);
        p.run_ok(&["validate", "--sample-size", "10"]);
        outputs
            .iter()
            .map(|name| read_bytes(&p.out_file(name)))
            .collect::<Vec<_>>()
    };
    let first = run_all();
    let second = run_all();
    for (name, (a, b)) in outputs.iter().zip(first.iter().zip(&second)) {
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn summaries_are_json_on_stdout_logs_on_stderr() {
    let p = Pipeline::new();
    let output = p.run(&["ingest"]);
    assert!(output.status.success());
    let summary = parse_summary(&output);
    assert_eq!(summary["command"], "ingest");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("ingest"), "progress log expected on stderr");
}
