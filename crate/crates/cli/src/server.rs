//! JSON over HTTP/1.1 for a project directory.
//!
//! Reads run concurrently. Mutations (registration, sampling, labels,
//! dataset builds) take a single writer lock and persist before replying.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::thread;

use depsearch::bootstrap::{self, BootstrapConfig};
use depsearch::engine;
use serde::Deserialize;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::error::AppError;
use crate::project::{CompileStatus, Project, ProjectState, DATASET_FILES};

type Result<T> = std::result::Result<T, AppError>;

pub struct Service {
    project: Project,
    state: RwLock<ProjectState>,
    writer: Mutex<()>,
}

enum Reply {
    Json(u16, Value),
    File { bytes: Vec<u8>, content_type: &'static str, name: String },
}

fn ok(value: Value) -> Result<Reply> {
    Ok(Reply::Json(200, value))
}

pub fn serve(root: &Path, host: &str, port: u16, threads: usize) -> Result<()> {
    let (project, state) = Project::open(root)?;
    let server = Server::http((host, port)).map_err(|e| AppError::new(500, "bind", e.to_string()))?;
    let addr = server
        .server_addr()
        .to_ip()
        .map(|a| a.to_string())
        .unwrap_or_default();
    log::info!("serving {} on {addr}", root.display());
    {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", json!({ "listening": addr }));
        let _ = out.flush();
    }
    let server = Arc::new(server);
    let svc = Arc::new(Service { project, state: RwLock::new(state), writer: Mutex::new(()) });
    let workers: Vec<_> = (0..threads.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let svc = Arc::clone(&svc);
            thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    handle(&svc, req);
                }
            })
        })
        .collect();
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static header")
}

fn handle(svc: &Service, mut req: Request) {
    let method = req.method().clone();
    let url = req.url().to_string();
    let (path, query) = url.split_once('?').unwrap_or((&url, ""));
    let params: BTreeMap<String, String> = form_urlencoded::parse(query.as_bytes()).into_owned().collect();
    let segments: Vec<String> = path
        .split('/')
        .filter(|s| !s.is_empty())
        .map(|s| form_urlencoded::parse(format!("x={s}").as_bytes()).next().map(|(_, v)| v.into_owned()).unwrap_or_default())
        .collect();
    let mut body = String::new();
    let reply = match req.as_reader().read_to_string(&mut body) {
        Ok(_) => {
            let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
            route(svc, &method, &segs, &params, &body)
        }
        Err(e) => Err(AppError::bad_request("body", e.to_string())),
    };
    let reply = reply.unwrap_or_else(|e| Reply::Json(e.status, e.body()));
    log::debug!("{method} {url}");
    let result = match reply {
        Reply::Json(status, value) => {
            let mut text = serde_json::to_string_pretty(&value).unwrap_or_default();
            text.push('\n');
            req.respond(
                Response::from_string(text)
                    .with_status_code(status)
                    .with_header(header("Content-Type", "application/json; charset=utf-8")),
            )
        }
        Reply::File { bytes, content_type, name } => req.respond(
            Response::from_data(bytes)
                .with_header(header("Content-Type", content_type))
                .with_header(header("Content-Disposition", &format!("attachment; filename=\"{name}\""))),
        ),
    };
    if let Err(e) = result {
        log::warn!("response failed: {e}");
    }
}

fn param<T: std::str::FromStr>(params: &BTreeMap<String, String>, name: &str, default: T) -> Result<T> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| AppError::bad_request("parameter", format!("bad value for {name}: {v:?}"))),
    }
}

fn flag(params: &BTreeMap<String, String>, name: &str) -> bool {
    params.get(name).is_some_and(|v| v.is_empty() || v == "true" || v == "1")
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T> {
    let text = if body.trim().is_empty() { "{}" } else { body };
    Ok(serde_json::from_str(text)?)
}

fn route(svc: &Service, method: &Method, path: &[&str], params: &BTreeMap<String, String>, body: &str) -> Result<Reply> {
    use Method::{Get, Post};
    match (method, path) {
        (Get, ["corpus", "stats"]) => ok(svc.project.corpus_stats()),
        (Get, ["queries"]) => {
            let state = svc.state.read().unwrap();
            ok(json!({ "queries": state.queries.values().collect::<Vec<_>>() }))
        }
        (Post, ["queries"]) => register_query(svc, params, body),
        (Get, ["queries", id]) => {
            let state = svc.state.read().unwrap();
            let record = state.queries.get(*id).ok_or_else(|| AppError::not_found(format!("no query {id}")))?;
            ok(json!(record))
        }
        (Get | Post, ["queries", id, "search"]) => {
            let state = svc.state.read().unwrap();
            let pattern = svc.project.pattern(&state, id)?;
            let limit = param(params, "limit", 20usize)?;
            let offset = param(params, "offset", 0usize)?;
            ok(json!(engine::search(pattern, &svc.project.index, limit, offset)))
        }
        (Post, ["queries", id, "sample"]) => sample(svc, id, params),
        (Post, ["queries", id, "labels"]) => label(svc, id, body),
        (Get, ["datasets"]) => {
            let state = svc.state.read().unwrap();
            ok(json!({ "datasets": state.datasets.values().map(|d| d.view()).collect::<Vec<_>>() }))
        }
        (Post, ["datasets"]) => build(svc, params, body),
        (Get, ["datasets", id]) => {
            let state = svc.state.read().unwrap();
            let record = state.datasets.get(*id).ok_or_else(|| AppError::not_found(format!("no dataset {id}")))?;
            ok(record.view())
        }
        (Get, ["datasets", id, "status"]) => {
            let state = svc.state.read().unwrap();
            let record = state.datasets.get(*id).ok_or_else(|| AppError::not_found(format!("no dataset {id}")))?;
            ok(json!({ "id": record.id, "state": record.state }))
        }
        (Get, ["datasets", id, "download", file]) => download(svc, id, file),
        (_, ["corpus", ..] | ["queries", ..] | ["datasets", ..]) => {
            Err(AppError::new(405, "method_not_allowed", format!("{method} not allowed here")))
        }
        _ => Err(AppError::not_found(format!("no route /{}", path.join("/")))),
    }
}

#[derive(Deserialize)]
struct RegisterRequest {
    id: Option<String>,
    query: String,
    parse: Option<String>,
    triggers: Option<BTreeMap<String, Vec<String>>>,
}

fn register_query(svc: &Service, params: &BTreeMap<String, String>, body: &str) -> Result<Reply> {
    let req: RegisterRequest = json_body(body)?;
    let dry_run = flag(params, "dry_run");
    let _writer = if dry_run { None } else { Some(svc.writer.lock().unwrap()) };
    let id = match req.id {
        Some(id) if !id.trim().is_empty() => id,
        _ => {
            let state = svc.state.read().unwrap();
            (1..).map(|n| format!("q{n}")).find(|c| !state.queries.contains_key(c)).unwrap()
        }
    };
    let (record, error) = svc.project.compile_record(&id, &req.query, req.parse, req.triggers);
    let record = if dry_run {
        record
    } else {
        let mut state = svc.state.write().unwrap();
        let stored = svc.project.register(&mut state, record);
        svc.project.save_queries(&state)?;
        stored
    };
    match error {
        Some(e) => Ok(Reply::Json(e.status, json!({ "error": e.body()["error"], "query": record }))),
        None => ok(json!(record)),
    }
}

fn sample(svc: &Service, id: &str, params: &BTreeMap<String, String>) -> Result<Reply> {
    let n = param(params, "n", bootstrap::QUALITY_SAMPLE_SIZE)?;
    let seed = param(params, "seed", 0u64)?;
    let _writer = svc.writer.lock().unwrap();
    let matches = {
        let state = svc.state.read().unwrap();
        svc.project.sample(svc.project.pattern(&state, id)?, n, seed)
    };
    let mut state = svc.state.write().unwrap();
    let record = state.queries.get_mut(id).expect("checked above");
    if record.quality.seed != Some(seed) || record.quality.sampled != matches {
        record.quality.seed = Some(seed);
        record.quality.sampled = matches.clone();
        record.quality.labels.clear();
        record.quality.verdict = None;
    }
    svc.project.save_queries(&state)?;
    let index = &svc.project.index;
    let shown: Vec<Value> = matches
        .iter()
        .map(|m| {
            let tokens: Vec<&str> = index
                .corpus()
                .by_id(&m.sentence_id)
                .map(|s| s.words().collect())
                .unwrap_or_default();
            json!({ "sentence_id": m.sentence_id, "pattern_id": m.pattern_id, "bindings": m.bindings, "tokens": tokens })
        })
        .collect();
    ok(json!({ "id": id, "seed": seed, "matches": shown }))
}

fn parse_label(v: &Value) -> Result<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::String(s) if s.eq_ignore_ascii_case("yes") => Ok(true),
        Value::String(s) if s.eq_ignore_ascii_case("no") => Ok(false),
        other => Err(AppError::bad_request("labels", format!("label must be yes/no or a boolean, got {other}"))),
    }
}

fn label(svc: &Service, id: &str, body: &str) -> Result<Reply> {
    #[derive(Deserialize)]
    struct LabelRequest {
        labels: Vec<Value>,
    }
    let req: LabelRequest = json_body(body)?;
    let labels = req.labels.iter().map(parse_label).collect::<Result<Vec<_>>>()?;
    let verdict = bootstrap::quality_filter(&labels).map_err(|e| AppError::bad_request("labels", e.to_string()))?;
    let _writer = svc.writer.lock().unwrap();
    let mut state = svc.state.write().unwrap();
    let record = state.queries.get_mut(id).ok_or_else(|| AppError::not_found(format!("no query {id}")))?;
    if record.status != CompileStatus::Ok {
        return Err(AppError::conflict("not_compiled", format!("query {id} did not compile")));
    }
    record.quality.labels = labels.clone();
    record.quality.verdict = Some(verdict);
    svc.project.save_queries(&state)?;
    ok(json!({ "id": id, "labels": labels, "verdict": verdict }))
}

#[derive(Deserialize)]
struct BuildRequest {
    id: Option<String>,
    #[serde(flatten)]
    config: BootstrapConfig,
}

fn build(svc: &Service, params: &BTreeMap<String, String>, body: &str) -> Result<Reply> {
    let mut req: BuildRequest = json_body(body)?;
    req.config.include_pending |= flag(params, "include_pending");
    let _writer = svc.writer.lock().unwrap();
    let snapshot = svc.state.read().unwrap().clone();
    let id = match req.id {
        Some(id) if !id.trim().is_empty() => id,
        _ => (1..).map(|n| format!("ds{n}")).find(|c| !snapshot.datasets.contains_key(c)).unwrap(),
    };
    if id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(AppError::bad_request("dataset", format!("invalid dataset id {id:?}")));
    }
    let existed = snapshot.datasets.contains_key(&id);
    let record = svc.project.build_dataset(&snapshot, &id, req.config)?;
    svc.state.write().unwrap().datasets.insert(id, record.clone());
    Ok(Reply::Json(if existed { 200 } else { 201 }, record.view()))
}

fn download(svc: &Service, id: &str, file: &str) -> Result<Reply> {
    if !svc.state.read().unwrap().datasets.contains_key(id) {
        return Err(AppError::not_found(format!("no dataset {id}")));
    }
    if !DATASET_FILES.contains(&file) {
        return Err(AppError::not_found(format!("no file {file}")));
    }
    let path = svc.project.dataset_dir(id).join(file);
    let bytes = std::fs::read(&path).map_err(|e| AppError::io(&path, e))?;
    let content_type = match file {
        "dataset.jsonl" => "application/x-ndjson",
        "markers.tsv" => "text/tab-separated-values; charset=utf-8",
        _ => "application/json",
    };
    Ok(Reply::File { bytes, content_type, name: format!("{id}-{file}") })
}
