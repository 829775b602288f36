//! Shared helpers for CLI integration tests: fixture paths, per-test
//! pipeline directories and binary invocation.

// each test binary compiles this module and uses a different subset of it
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// A temp working directory holding a config file and an output directory.
pub struct Pipeline {
    pub dir: tempfile::TempDir,
    pub config_path: PathBuf,
}

impl Pipeline {
    /// Standard setup: the 25-record corpus, lexicon backend, fixture LLM
    /// served from the shipped warmed cache, seed 42.
    pub fn new() -> Self {
        Self::with_corpus(&fixture("corpus_25.csv"))
    }

    pub fn with_corpus(corpus: &Path) -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let config_path = dir.path().join("tenor.toml");
        let config = format!(
            r#"
input_csv = "{corpus}"
backend = "lexicon:{lexicon}"
seed = 42

[trend]
year_from = 2010
year_to = 2020

[llm]
model = "fixture-model"
cache_path = "{cache}"
mode = "fixture"
"#,
            corpus = corpus.display(),
            lexicon = fixture("lexicon.tsv").display(),
            cache = fixture("llm_cache.jsonl").display(),
        );
        std::fs::write(&config_path, config).expect("write config");
        Self { dir, config_path }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    /// Run the binary with the pipeline's config and output dir plus args.
    pub fn run(&self, args: &[&str]) -> Output {
        let mut command = Command::new(env!("CARGO_BIN_EXE_tenor"));
        command
            .arg("--config")
            .arg(&self.config_path)
            .arg("--output-dir")
            .arg(self.out_dir())
            .args(args)
            .env_remove("TENOR_LLM_TOKEN");
        command.output().expect("binary runs")
    }

    /// Run and require success, returning the stdout summary JSON.
    pub fn run_ok(&self, args: &[&str]) -> serde_json::Value {
        let output = self.run(args);
        assert!(
            output.status.success(),
            "tenor {args:?} failed\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
        parse_summary(&output)
    }
}

pub fn parse_summary(output: &Output) -> serde_json::Value {
    let stdout = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(stdout.trim()).unwrap_or_else(|e| {
        panic!("stdout is not a JSON summary: {e}\nstdout: {stdout}")
    })
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
