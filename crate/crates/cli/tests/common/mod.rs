#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use depsearch::corpus::{self, ParseOptions};
use depsearch::querylang;
use serde_json::Value;

pub const SEEDS: [&str; 3] = ["founded_by_active", "founded_by_passive", "founded_by_possessive"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn depsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depsearch"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("run depsearch")
}

/// Runs and parses stdout, panicking with stderr on failure.
pub fn depsearch_json(args: &[&str]) -> Value {
    let out = depsearch(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json stdout")
}

pub fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr not json: {}", String::from_utf8_lossy(&out.stderr)))
}

/// (id, query text, single-sentence CoNLL-U) for each seed query.
pub fn seed_requests() -> Vec<(String, String, String)> {
    let text = std::fs::read_to_string(fixtures().join("example_queries.txt")).unwrap();
    let queries = querylang::parse_query_file(&text).unwrap();
    let parses = corpus::parse_conllu_str(
        &std::fs::read_to_string(fixtures().join("example_queries.conllu")).unwrap(),
        ParseOptions::default(),
    )
    .unwrap();
    SEEDS
        .iter()
        .map(|id| {
            let q = queries.iter().find(|q| q.id == *id).unwrap();
            let s = parses.iter().find(|s| s.id == *id).unwrap();
            (id.to_string(), q.render(), corpus::to_conllu_string(std::slice::from_ref(s)))
        })
        .collect()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A running `depsearch serve`, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(project: &Path) -> Server {
        let mut child = Command::new(env!("CARGO_BIN_EXE_depsearch"))
            .args(["serve", p(project), "--port", "0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let v: Value = serde_json::from_str(&line).unwrap_or_else(|_| panic!("bad banner {line:?}"));
        Server { child, base: format!("http://{}", v["listening"].as_str().unwrap()) }
    }

    fn call(&self, method: &str, path: &str, body: Option<Value>) -> (u16, String) {
        let req = ureq::request(method, &format!("{}{path}", self.base));
        let res = match body {
            Some(b) => req.send_json(b),
            None => req.call(),
        };
        match res {
            Ok(r) => (r.status(), r.into_string().unwrap()),
            Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
            Err(e) => panic!("{method} {path}: {e}"),
        }
    }

    pub fn get_raw(&self, path: &str) -> (u16, String) {
        self.call("GET", path, None)
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let (s, b) = self.get_raw(path);
        (s, serde_json::from_str(&b).unwrap())
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let (s, b) = self.call("POST", path, Some(body));
        (s, serde_json::from_str(&b).unwrap())
    }

    pub fn method(&self, method: &str, path: &str) -> (u16, Value) {
        let (s, b) = self.call(method, path, None);
        (s, serde_json::from_str(&b).unwrap())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
