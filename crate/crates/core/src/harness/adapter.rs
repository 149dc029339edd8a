//! Wire protocol and transports for systems under test.
//!
//! Newline-delimited JSON. The harness opens with `{"hello":"clinperturb/1"}`
//! and the system answers `{"protocol":"clinperturb/1","tasks":[...]}`. Each
//! request is `{"id","task",<input fields>}`; each response `{"id","output"}`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Map, Value};

use super::fixtures::{handle_message, Responder};
use super::HarnessError;
use crate::corpus::{Label, Sample, Task};

pub const PROTOCOL: &str = "clinperturb/1";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_RETRIES: usize = 2;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Clone)]
pub enum Transport {
    /// Shell command speaking the protocol on stdin/stdout.
    Subprocess { command: String },
    /// URL receiving one POSTed JSON message per call.
    Http { url: String },
    /// A responder called directly, through the same JSON messages.
    InProcess(Arc<dyn Responder>),
}

impl std::fmt::Debug for Transport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transport::Subprocess { command } => write!(f, "subprocess:{command}"),
            Transport::Http { url } => write!(f, "http:{url}"),
            Transport::InProcess(_) => write!(f, "in-process"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemAdapter {
    pub transport: Transport,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub retries: usize,
    /// Delay before the first retry; doubled for each further attempt.
    pub backoff: Duration,
    pub label: String,
}

impl SystemAdapter {
    pub fn new(transport: Transport, label: impl Into<String>) -> Self {
        SystemAdapter {
            transport,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            timeout: DEFAULT_TIMEOUT,
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(200),
            label: label.into(),
        }
    }

    /// Parses `subprocess:CMD` or `http:URL`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let transport = if let Some(cmd) = spec.strip_prefix("subprocess:") {
            if cmd.trim().is_empty() {
                return Err("subprocess adapter needs a command".into());
            }
            Transport::Subprocess { command: cmd.to_string() }
        } else if let Some(url) = spec.strip_prefix("http:") {
            let url = if url.starts_with("//") { format!("http:{url}") } else { url.to_string() };
            if !url.starts_with("http://") {
                return Err(format!("http adapter needs an http:// URL, got {url:?}"));
            }
            Transport::Http { url }
        } else {
            return Err(format!("adapter {spec:?} must look like subprocess:CMD or http:URL"));
        };
        Ok(SystemAdapter::new(transport, spec))
    }

    pub fn in_process(responder: Arc<dyn Responder>, label: impl Into<String>) -> Self {
        SystemAdapter::new(Transport::InProcess(responder), label)
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Opens the transport and performs the handshake.
    pub fn connect(&self) -> Result<Connection, HarnessError> {
        let (inner, tasks) = match &self.transport {
            Transport::Subprocess { command } => {
                let mut proc = ChildProc::spawn(command)?;
                let tasks = proc.handshake(self.timeout)?;
                (Inner::Subprocess(Mutex::new(Some(proc))), tasks)
            }
            Transport::Http { url } => {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(self.timeout))
                    .build()
                    .into();
                let reply = http_post(&agent, url, &hello()).map_err(|e| HarnessError::Handshake(e.to_string()))?;
                (Inner::Http(agent), parse_hello(&reply)?)
            }
            Transport::InProcess(r) => {
                let reply = handle_message(r.as_ref(), &hello());
                (Inner::InProcess(r.clone()), parse_hello(&reply)?)
            }
        };
        Ok(Connection { adapter: self.clone(), tasks, inner })
    }
}

/// One label-free request.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: String,
    pub task: Task,
    pub input: Map<String, Value>,
}

impl Request {
    pub fn new(id: impl Into<String>, sample: &Sample) -> Self {
        Request { id: id.into(), task: sample.task(), input: sample.input_json() }
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id));
        m.insert("task".into(), json!(self.task.as_str()));
        for (k, v) in &self.input {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

fn hello() -> Value {
    json!({ "hello": PROTOCOL })
}

fn parse_hello(reply: &Value) -> Result<Vec<Task>, HarnessError> {
    let proto = reply.get("protocol").and_then(Value::as_str);
    if proto != Some(PROTOCOL) {
        return Err(HarnessError::Handshake(format!("expected protocol {PROTOCOL}, got {reply}")));
    }
    let tasks = reply
        .get("tasks")
        .and_then(Value::as_array)
        .ok_or_else(|| HarnessError::Handshake("reply lacks a tasks list".into()))?;
    tasks
        .iter()
        .map(|t| {
            t.as_str()
                .ok_or_else(|| HarnessError::Handshake(format!("bad task entry {t}")))?
                .parse::<Task>()
                .map_err(HarnessError::Handshake)
        })
        .collect()
}

/// Splits a response into (id, output).
fn parse_response(reply: &Value) -> Result<(String, Value), HarnessError> {
    let id = reply
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| HarnessError::Protocol(format!("response without an id: {reply}")))?;
    if let Some(err) = reply.get("error") {
        return Err(HarnessError::Protocol(format!("system reported an error for {id:?}: {err}")));
    }
    let output = reply
        .get("output")
        .ok_or_else(|| HarnessError::Protocol(format!("response for {id:?} has no output")))?;
    Ok((id.to_string(), output.clone()))
}

fn to_label(id: &str, task: Task, output: &Value) -> Result<Label, HarnessError> {
    Label::from_json(task, output).map_err(|e| HarnessError::Protocol(format!("output for {id:?}: {e}")))
}

enum Inner {
    Subprocess(Mutex<Option<ChildProc>>),
    Http(ureq::Agent),
    InProcess(Arc<dyn Responder>),
}

pub struct Connection {
    adapter: SystemAdapter,
    tasks: Vec<Task>,
    inner: Inner,
}

impl Connection {
    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn label(&self) -> &str {
        &self.adapter.label
    }

    /// Sends every request and returns predictions in request order.
    pub fn run(&self, requests: &[Request]) -> Result<Vec<Label>, HarnessError> {
        let mut seen = HashSet::new();
        for r in requests {
            if !self.tasks.contains(&r.task) {
                return Err(HarnessError::UnsupportedTask(r.task));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(HarnessError::DuplicateId(r.id.clone()));
            }
        }
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        match &self.inner {
            Inner::Subprocess(proc) => {
                let mut guard = proc.lock().unwrap_or_else(|e| e.into_inner());
                self.run_pipelined(&mut guard, requests)
            }
            Inner::Http(agent) => {
                let Transport::Http { url } = &self.adapter.transport else { unreachable!() };
                self.run_pooled(requests, |body| http_post(agent, url, body).map_err(CallError::from))
            }
            Inner::InProcess(r) => self.run_pooled(requests, |body| Ok(handle_message(r.as_ref(), body))),
        }
    }

    fn backoff(&self, attempt: usize) -> Duration {
        self.adapter.backoff * 2u32.saturating_pow(attempt.saturating_sub(1) as u32)
    }

    /// One call per request, at most `max_in_flight` concurrently.
    fn run_pooled<F>(&self, requests: &[Request], call: F) -> Result<Vec<Label>, HarnessError>
    where
        F: Fn(&Value) -> Result<Value, CallError> + Sync,
    {
        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let results: Mutex<Vec<Option<Result<Label, HarnessError>>>> =
            Mutex::new((0..requests.len()).map(|_| None).collect());
        let workers = self.adapter.max_in_flight.clamp(1, requests.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if failed.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(req) = requests.get(i) else { break };
                    let r = self.call_with_retries(req, &call);
                    if r.is_err() {
                        failed.store(true, Ordering::Relaxed);
                    }
                    results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                });
            }
        });
        let results = results.into_inner().unwrap_or_else(|e| e.into_inner());
        // report the first failure in request order
        let mut out = Vec::with_capacity(requests.len());
        for (r, req) in results.into_iter().zip(requests) {
            match r {
                Some(Ok(l)) => out.push(l),
                Some(Err(e)) => return Err(e),
                None => return Err(HarnessError::MissingPrediction(req.id.clone())),
            }
        }
        Ok(out)
    }

    fn call_with_retries<F>(&self, req: &Request, call: &F) -> Result<Label, HarnessError>
    where
        F: Fn(&Value) -> Result<Value, CallError>,
    {
        let body = req.to_json();
        let mut attempt = 0;
        loop {
            attempt += 1;
            match call(&body) {
                Ok(reply) => {
                    let (id, output) = parse_response(&reply)?;
                    if id != req.id {
                        return Err(HarnessError::UnknownId(id));
                    }
                    return to_label(&id, req.task, &output);
                }
                Err(e) if attempt > self.adapter.retries => {
                    return Err(match e {
                        CallError::Timeout => HarnessError::Timeout { id: req.id.clone(), attempts: attempt },
                        CallError::Other(detail) => {
                            HarnessError::Transport { id: req.id.clone(), attempts: attempt, detail }
                        }
                    })
                }
                Err(_) => std::thread::sleep(self.backoff(attempt)),
            }
        }
    }

    /// Streams requests over one child process, keeping up to
    /// `max_in_flight` outstanding. On silence past the timeout or child
    /// exit, the child is restarted and outstanding requests are resent.
    fn run_pipelined(&self, slot: &mut Option<ChildProc>, requests: &[Request]) -> Result<Vec<Label>, HarnessError> {
        let Transport::Subprocess { command } = &self.adapter.transport else { unreachable!() };
        let index: HashMap<&str, usize> = requests.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        let mut queue: VecDeque<usize> = (0..requests.len()).collect();
        let mut inflight: HashMap<String, usize> = HashMap::new();
        let mut attempts = vec![0usize; requests.len()];
        let mut out: Vec<Option<Label>> = vec![None; requests.len()];
        let mut remaining = requests.len();

        while remaining > 0 {
            if slot.is_none() {
                let mut proc = ChildProc::spawn(command)?;
                proc.handshake(self.adapter.timeout)?;
                *slot = Some(proc);
            }
            let proc = slot.as_mut().expect("spawned above");
            let mut broken = false;
            while inflight.len() < self.adapter.max_in_flight {
                let Some(i) = queue.pop_front() else { break };
                attempts[i] += 1;
                inflight.insert(requests[i].id.clone(), i);
                if proc.send(&requests[i].to_json()).is_err() {
                    broken = true;
                    break;
                }
            }
            let failure = if broken {
                Some(CallError::Other("child closed its input".into()))
            } else {
                match proc.rx.recv_timeout(self.adapter.timeout) {
                    Ok(line) => {
                        let reply: Value = serde_json::from_str(&line)
                            .map_err(|e| HarnessError::Protocol(format!("malformed response line {line:?}: {e}")))?;
                        let (id, output) = parse_response(&reply)?;
                        match inflight.remove(&id) {
                            Some(i) => {
                                out[i] = Some(to_label(&id, requests[i].task, &output)?);
                                remaining -= 1;
                            }
                            None if index.contains_key(id.as_str()) => {
                                return Err(HarnessError::Protocol(format!("unexpected response for {id:?}")))
                            }
                            None => return Err(HarnessError::UnknownId(id)),
                        }
                        None
                    }
                    Err(RecvTimeoutError::Timeout) => Some(CallError::Timeout),
                    Err(RecvTimeoutError::Disconnected) => Some(CallError::Other("child exited".into())),
                }
            };
            if let Some(err) = failure {
                let mut stalled: Vec<usize> = inflight.drain().map(|(_, i)| i).collect();
                stalled.sort_unstable();
                let worst = stalled.iter().map(|&i| attempts[i]).max().unwrap_or(0);
                if let Some(&i) = stalled.iter().find(|&&i| attempts[i] > self.adapter.retries) {
                    let id = requests[i].id.clone();
                    return Err(match err {
                        CallError::Timeout => HarnessError::Timeout { id, attempts: attempts[i] },
                        CallError::Other(detail) => HarnessError::Transport { id, attempts: attempts[i], detail },
                    });
                }
                for i in stalled.into_iter().rev() {
                    queue.push_front(i);
                }
                *slot = None;
                std::thread::sleep(self.backoff(worst));
            }
        }
        Ok(out.into_iter().map(|l| l.expect("all answered")).collect())
    }
}

/// Runs `samples` through the connection with wire ids from `id_of`.
pub fn run_system<'a, I>(conn: &Connection, items: I) -> Result<Vec<Label>, HarnessError>
where
    I: IntoIterator<Item = (String, &'a Sample)>,
{
    let requests: Vec<Request> = items.into_iter().map(|(id, s)| Request::new(id, s)).collect();
    conn.run(&requests)
}

#[derive(Debug)]
enum CallError {
    Timeout,
    Other(String),
}

impl From<ureq::Error> for CallError {
    fn from(e: ureq::Error) -> Self {
        match e {
            ureq::Error::Timeout(_) => CallError::Timeout,
            other => CallError::Other(other.to_string()),
        }
    }
}

fn http_post(agent: &ureq::Agent, url: &str, body: &Value) -> Result<Value, ureq::Error> {
    agent.post(url).send_json(body)?.body_mut().read_json::<Value>()
}

struct ChildProc {
    child: Child,
    stdin: Option<ChildStdin>,
    rx: Receiver<String>,
}

impl ChildProc {
    fn spawn(command: &str) -> Result<Self, HarnessError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| HarnessError::Handshake(format!("cannot start {command:?}: {e}")))?;
        let stdout = child.stdout.take().expect("piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildProc { child, stdin, rx })
    }

    fn send(&mut self, msg: &Value) -> std::io::Result<()> {
        let stdin = self.stdin.as_mut().ok_or(std::io::ErrorKind::BrokenPipe)?;
        let mut line = serde_json::to_string(msg).expect("json");
        line.push('\n');
        stdin.write_all(line.as_bytes())?;
        stdin.flush()
    }

    fn handshake(&mut self, timeout: Duration) -> Result<Vec<Task>, HarnessError> {
        self.send(&hello()).map_err(|e| HarnessError::Handshake(e.to_string()))?;
        let line = self
            .rx
            .recv_timeout(timeout)
            .map_err(|e| HarnessError::Handshake(format!("no handshake reply: {e}")))?;
        let reply: Value =
            serde_json::from_str(&line).map_err(|e| HarnessError::Handshake(format!("bad reply {line:?}: {e}")))?;
        parse_hello(&reply)
    }
}

impl Drop for ChildProc {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
