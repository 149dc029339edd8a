//! HTTP/JSON API over a [`Store`]. Routing is a pure function of the store
//! and the request so it can be exercised without sockets.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use serde_json::{json, Value};

use super::{CurationError, Entry, Part, QuestionnaireConfig, Rating, ReviewDecision, Role, Store, Verdict};
use crate::corpus::Label;
use crate::perturb::{Method, PerturbedSample, ReviewStatus};

pub const RATER_HEADER: &str = "X-Rater-Id";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpReply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl HttpReply {
    fn json(status: u16, v: Value) -> Self {
        HttpReply { status, content_type: "application/json", body: v.to_string().into_bytes() }
    }

    fn error(status: u16, code: &str, detail: impl Into<String>) -> Self {
        HttpReply::json(status, json!({ "error": code, "detail": detail.into() }))
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }
}

impl From<CurationError> for HttpReply {
    fn from(e: CurationError) -> Self {
        let (status, code) = match &e {
            CurationError::UnknownSample(_) | CurationError::UnknownQuota { .. } => (404, "not_found"),
            CurationError::Conflict(_) => (409, "conflict"),
            CurationError::Invalid(_) => (422, "invalid"),
            CurationError::Incomplete(_) => (422, "incomplete"),
            CurationError::Metric(_) => (422, "undefined"),
            CurationError::Io(_) | CurationError::Corrupt(_) => (500, "internal"),
        };
        HttpReply::error(status, code, e.to_string())
    }
}

type Reply = Result<HttpReply, HttpReply>;

fn bad_request(detail: impl Into<String>) -> HttpReply {
    HttpReply::error(400, "bad_request", detail)
}

fn parse_query(query: &str) -> HashMap<String, String> {
    form_urlencoded::parse(query.as_bytes()).into_owned().filter(|(_, v)| !v.is_empty()).collect()
}

fn query_method(q: &HashMap<String, String>) -> Result<Option<Method>, HttpReply> {
    q.get("method").map(|m| m.parse::<Method>().map_err(bad_request)).transpose()
}

fn summary(e: &Entry) -> Value {
    json!({
        "id": e.key(),
        "original_id": e.sample.original_id(),
        "dataset": e.dataset,
        "method": e.sample.method,
        "task": e.sample.noisy.task(),
        "status": e.status(),
        "revision": e.revision,
    })
}

fn detail(e: &Entry) -> Value {
    let mut v = summary(e);
    let m = v.as_object_mut().expect("object");
    m.insert("meaning_risk".into(), json!(e.sample.meaning_risk));
    m.insert("original".into(), e.original.as_ref().map_or(Value::Null, |s| s.to_json()));
    m.insert("noisy".into(), e.sample.noisy.to_json());
    m.insert("edits".into(), json!(e.sample.edits));
    m.insert("gold".into(), e.sample.noisy.gold().to_json());
    m.insert(
        "revised_label".into(),
        e.decision().and_then(|d| d.revised_label.as_ref()).map_or(Value::Null, Label::to_json),
    );
    m.insert("decision".into(), json!(e.record));
    m.insert("adjudicated".into(), json!(e.adjudicated));
    v
}

fn body_json(body: &[u8]) -> Result<Value, HttpReply> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("body is not JSON: {e}")))
}

fn str_field<'a>(v: &'a Value, k: &str) -> Option<&'a str> {
    v.get(k).and_then(Value::as_str)
}

/// Serves one request against the store.
pub fn handle(store: &RwLock<Store>, method: &str, url: &str, rater: Option<&str>, body: &[u8]) -> HttpReply {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let q = parse_query(query);
    let segments: Vec<String> = path
        .trim_matches('/')
        .split('/')
        .map(|s| percent_encoding::percent_decode_str(s).decode_utf8_lossy().into_owned())
        .collect();
    let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
    let read = || store.read().unwrap_or_else(|e| e.into_inner());
    let write = || store.write().unwrap_or_else(|e| e.into_inner());
    let result: Reply = match (method, segs.as_slice()) {
        ("GET", ["api", "queue"]) => (|| {
            let m = query_method(&q)?;
            let status = match q.get("status").map(String::as_str) {
                None => Some(ReviewStatus::Pending),
                Some("all") => None,
                Some(s) => Some(serde_json::from_value(json!(s)).map_err(|_| bad_request(format!("unknown status {s:?}")))?),
            };
            let s = read();
            let items: Vec<Value> = s.queue(m, q.get("dataset").map(String::as_str), status).into_iter().map(summary).collect();
            Ok(HttpReply::json(200, json!({ "count": items.len(), "items": items })))
        })(),
        ("GET", ["api", "samples", id]) => match read().get(id) {
            Some(e) => Ok(HttpReply::json(200, detail(e))),
            None => Err(CurationError::UnknownSample(id.to_string()).into()),
        },
        ("POST", ["api", "samples", id, "decision"]) => decide(store, id, rater, body),
        ("POST", ["api", "enqueue"]) => enqueue(store, body),
        ("GET", ["api", "progress"]) => (|| {
            let m = query_method(&q)?;
            let s = read();
            match (m, q.get("dataset")) {
                (Some(m), Some(d)) => Ok(HttpReply::json(200, json!(s.progress(m, d)?))),
                _ => {
                    let views: Vec<_> = s
                        .progress_all()
                        .into_iter()
                        .filter(|v| m.is_none_or(|m| v.method == m))
                        .filter(|v| q.get("dataset").is_none_or(|d| &v.dataset == d))
                        .collect();
                    Ok(HttpReply::json(200, json!({ "quotas": views })))
                }
            }
        })(),
        ("POST", ["api", "quota"]) => (|| {
            let v = body_json(body)?;
            let m: Method = str_field(&v, "method").ok_or_else(|| bad_request("method required"))?.parse().map_err(bad_request)?;
            let d = str_field(&v, "dataset").ok_or_else(|| bad_request("dataset required"))?;
            let t = v.get("target").and_then(Value::as_u64).ok_or_else(|| bad_request("target required"))?;
            let mut s = write();
            s.set_quota(m, d, t as usize)?;
            Ok(HttpReply::json(200, json!(s.progress(m, d)?)))
        })(),
        ("POST", ["api", "ratings"]) => rate(store, rater, body),
        ("GET", ["api", "stats"]) => (|| {
            let part: Part = q.get("part").ok_or_else(|| bad_request("part required"))?.parse().map_err(bad_request)?;
            Ok(HttpReply::json(200, json!(read().rating_stats(part)?)))
        })(),
        ("GET", ["api", "export"]) => (|| {
            let m = query_method(&q)?;
            let lines: Vec<String> = read()
                .export(m, q.get("dataset").map(String::as_str))
                .iter()
                .map(PerturbedSample::to_line)
                .collect();
            let mut body = lines.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            Ok(HttpReply { status: 200, content_type: "application/x-ndjson", body: body.into_bytes() })
        })(),
        ("GET", ["api", "questionnaire"]) => (|| {
            let mut cfg = QuestionnaireConfig::default();
            for (key, slot) in [("low", &mut cfg.low_risk), ("high", &mut cfg.high_risk)] {
                if let Some(v) = q.get(key) {
                    *slot = v.parse().map_err(|_| bad_request(format!("{key} must be a count")))?;
                }
            }
            if let Some(v) = q.get("seed") {
                cfg.seed = v.parse().map_err(|_| bad_request("seed must be an integer"))?;
            }
            Ok(HttpReply::json(200, json!({ "items": read().questionnaire(&cfg) })))
        })(),
        (_, ["api", ..]) => Err(HttpReply::error(404, "not_found", format!("no route {method} {path}"))),
        _ => Err(HttpReply::error(404, "not_found", path.to_string())),
    };
    result.unwrap_or_else(|e| e)
}

fn decide(store: &RwLock<Store>, id: &str, rater: Option<&str>, body: &[u8]) -> Reply {
    let v = body_json(body)?;
    let status: Verdict = serde_json::from_value(v.get("status").cloned().unwrap_or(Value::Null))
        .map_err(|_| bad_request("status must be accepted, relabeled or excluded"))?;
    let role: Role = match v.get("role") {
        None => Role::Reviewer,
        Some(r) => serde_json::from_value(r.clone()).map_err(|_| bad_request("role must be reviewer or adjudicator"))?,
    };
    let reviewer = str_field(&v, "reviewer").or(rater).unwrap_or_default().to_string();
    let mut s = store.write().unwrap_or_else(|e| e.into_inner());
    let task = s.get(id).ok_or_else(|| HttpReply::from(CurationError::UnknownSample(id.to_string())))?.sample.noisy.task();
    let revised_label = match v.get("revised_label") {
        None | Some(Value::Null) => None,
        Some(l) => Some(Label::from_json(task, l).map_err(|e| HttpReply::from(CurationError::Invalid(format!("revised_label: {e}"))))?),
    };
    let decision = ReviewDecision {
        sample: id.to_string(),
        reviewer,
        status,
        revised_label,
        timestamp: v.get("timestamp").and_then(Value::as_u64).unwrap_or(0),
        note: str_field(&v, "note").map(str::to_string),
        role,
    };
    let expected = v.get("revision").and_then(Value::as_u64);
    let entry = s.decide(decision, expected)?;
    Ok(HttpReply::json(200, detail(entry)))
}

fn enqueue(store: &RwLock<Store>, body: &[u8]) -> Reply {
    let v = body_json(body)?;
    let dataset = str_field(&v, "dataset").ok_or_else(|| bad_request("dataset required"))?;
    let parse_list = |k: &str| v.get(k).and_then(Value::as_array).cloned().unwrap_or_default();
    let samples = parse_list("samples")
        .into_iter()
        .map(PerturbedSample::from_json)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad_request(format!("samples: {e}")))?;
    let originals = parse_list("originals")
        .into_iter()
        .map(crate::corpus::Sample::from_json)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad_request(format!("originals: {e}")))?;
    let report = store.write().unwrap_or_else(|e| e.into_inner()).enqueue(dataset, &samples, &originals)?;
    Ok(HttpReply::json(200, json!(report)))
}

fn rate(store: &RwLock<Store>, rater: Option<&str>, body: &[u8]) -> Reply {
    let v = body_json(body)?;
    let sample = str_field(&v, "sample").ok_or_else(|| bad_request("sample required"))?;
    let category = serde_json::from_value(v.get("category").cloned().unwrap_or(Value::Null))
        .map_err(|_| bad_request("category must be same-meaning, changed-meaning or not-understandable"))?;
    let mut s = store.write().unwrap_or_else(|e| e.into_inner());
    let part = match str_field(&v, "part") {
        Some(p) => p.parse().map_err(bad_request)?,
        None => Part::of(
            s.get(sample)
                .ok_or_else(|| HttpReply::from(CurationError::UnknownSample(sample.to_string())))?
                .sample
                .method,
        ),
    };
    let rating = Rating {
        rater: str_field(&v, "rater").or(rater).unwrap_or_default().to_string(),
        sample: sample.to_string(),
        category,
        part,
    };
    s.record_rating(rating.clone())?;
    Ok(HttpReply::json(201, json!(rating)))
}

const PLACEHOLDER_UI: &str = "<!doctype html><title>clinperturb review</title>\
<p>The review UI is not bundled with this server. The JSON API is under <code>/api/</code>.</p>";

fn static_file(ui: Option<&Path>, path: &str) -> HttpReply {
    let Some(root) = ui else {
        return if path == "/" || path == "/index.html" {
            HttpReply { status: 200, content_type: "text/html; charset=utf-8", body: PLACEHOLDER_UI.as_bytes().to_vec() }
        } else {
            HttpReply::error(404, "not_found", path)
        };
    };
    let rel = path.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    if rel.split('/').any(|s| s == "..") {
        return HttpReply::error(400, "bad_request", "path escapes the UI directory");
    }
    let file = root.join(rel);
    // single-page app: unknown paths fall back to index.html
    let file = if file.is_file() { file } else { root.join("index.html") };
    match std::fs::read(&file) {
        Ok(body) => {
            let content_type = match file.extension().and_then(|e| e.to_str()) {
                Some("html") => "text/html; charset=utf-8",
                Some("js") => "text/javascript",
                Some("css") => "text/css",
                Some("json") => "application/json",
                Some("svg") => "image/svg+xml",
                _ => "application/octet-stream",
            };
            HttpReply { status: 200, content_type, body }
        }
        Err(_) => HttpReply::error(404, "not_found", path),
    }
}

/// The API plus optional static UI assets, served on a small thread pool.
pub struct CurationServer {
    server: Arc<tiny_http::Server>,
    workers: Vec<JoinHandle<()>>,
    pub store: Arc<RwLock<Store>>,
    pub url: String,
}

impl CurationServer {
    pub fn start(store: Store, addr: &str, ui: Option<PathBuf>) -> std::io::Result<Self> {
        let server = Arc::new(tiny_http::Server::http(addr).map_err(std::io::Error::other)?);
        let local = server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("not an IP listener"))?;
        let store = Arc::new(RwLock::new(store));
        let workers = (0..4)
            .map(|_| {
                let (server, store, ui) = (server.clone(), store.clone(), ui.clone());
                std::thread::spawn(move || {
                    while let Ok(mut req) = server.recv() {
                        let mut body = Vec::new();
                        let _ = req.as_reader().read_to_end(&mut body);
                        let rater = req
                            .headers()
                            .iter()
                            .find(|h| h.field.equiv(RATER_HEADER))
                            .map(|h| h.value.as_str().to_string());
                        let url = req.url().to_string();
                        let reply = if url.starts_with("/api/") || url == "/api" {
                            handle(&store, req.method().as_str(), &url, rater.as_deref(), &body)
                        } else {
                            static_file(ui.as_deref(), url.split('?').next().unwrap_or("/"))
                        };
                        let header =
                            tiny_http::Header::from_bytes("Content-Type", reply.content_type).expect("static header");
                        let resp = tiny_http::Response::from_data(reply.body)
                            .with_status_code(reply.status)
                            .with_header(header);
                        let _ = req.respond(resp);
                    }
                })
            })
            .collect();
        Ok(CurationServer { server, workers, store, url: format!("http://{local}") })
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for CurationServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
        let _ = self.store.read().map(|s| s.compact());
    }
}
