//! Command-line entry point. Exit codes: 0 success, 1 usage error,
//! 2 runtime error.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::corpus::sample::{read_jsonl, read_samples};
use crate::corpus::{CorpusError, RecordError, Sample, Task};
use crate::curation::{rating_stats, CurationServer, Part, Rating, Store};
use crate::harness::fixtures::{serve_stdio, HttpFixture};
use crate::harness::matrix::{check_gate, score_clean, score_perturbed};
use crate::harness::report::{render_table, reports_from_runs};
use crate::harness::{
    apply_reviews, run_matrix, EvalRun, MatrixConfig, Memorizer, Oracle, Perceptron, Responder, RunDir, SystemAdapter,
};
use crate::perturb::{perturb_corpus, write_perturbed, Method, PerturbationSpec, PerturbedSample};
use crate::resources::Resources;

#[derive(Parser, Debug)]
#[command(name = "clinperturb", version, about = "Clinical-text perturbation and black-box robustness evaluation")]
pub struct Cli {
    /// JSON file of default flag values; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a perturbed copy of a dataset.
    Perturb(PerturbArgs),
    /// Score a system on a clean or perturbed dataset.
    Evaluate(EvaluateArgs),
    /// Print the robustness table for stored runs.
    Report(ReportArgs),
    /// Clean run plus every method at PPS 1..4, with report.
    Sweep(SweepArgs),
    /// Serve the curation API (and UI assets, if given).
    Serve(ServeArgs),
    /// Questionnaire statistics: majority-vote percentages, Fleiss' kappa.
    #[command(alias = "kappa")]
    Stats(StatsArgs),
    /// Check resource tables and print their digests.
    ValidateResources(ResourceArgs),
    /// Run a reference system speaking the wire protocol.
    #[command(hide = true)]
    Fixture(FixtureArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Directory with replacement resource tables.
    #[arg(long, value_name = "DIR")]
    resources: Option<PathBuf>,
    /// Worker threads for perturbation and concurrent requests.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Task every input sample must belong to; other tasks are an error.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TaskArg {
    Ner,
    Re,
    Ti,
    Ss,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Ner => Task::Ner,
            TaskArg::Re => Task::Re,
            TaskArg::Ti => Task::Ti,
            TaskArg::Ss => Task::Ss,
        }
    }
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    pps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// subprocess:CMD or http:URL
    #[arg(long, value_name = "SPEC")]
    adapter: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, value_name = "SECS")]
    timeout: Option<u64>,
    /// Score meaning-risk samples that have not been reviewed.
    #[arg(long)]
    allow_unreviewed: bool,
    /// Curation store whose decisions apply to perturbed samples.
    #[arg(long, value_name = "DIR")]
    store: Option<PathBuf>,
    /// Dataset name recorded in runs (default: input file stem).
    #[arg(long)]
    dataset: Option<String>,
    /// System name recorded in runs (default: the adapter spec).
    #[arg(long)]
    system: Option<String>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Runs JSONL to write (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Run directory or runs.jsonl file.
    #[arg(long, value_name = "DIR")]
    runs: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Run directory to write.
    #[arg(long, value_name = "DIR")]
    runs: Option<PathBuf>,
    /// Methods to run (default: all 16).
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// PPS values (default: 1,2,3,4).
    #[arg(long, value_delimiter = ',')]
    pps: Vec<usize>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, value_name = "DIR")]
    store: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    /// Static review UI assets.
    #[arg(long, value_name = "DIR")]
    ui: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Ratings JSONL ({"rater","sample","category","part"} per line).
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Curation store to read ratings from instead.
    #[arg(long, value_name = "DIR")]
    store: Option<PathBuf>,
    #[arg(long)]
    part: Option<Part>,
}

#[derive(Args, Debug)]
struct ResourceArgs {
    #[arg(long, value_name = "DIR")]
    resources: Option<PathBuf>,
    /// Write the bundled tables to this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum FixtureKind {
    Oracle,
    Memorizer,
    Perceptron,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(value_enum)]
    kind: FixtureKind,
    /// Gold (oracle), memorized (memorizer) or training (perceptron) data;
    /// the bundled synthetic split is used when omitted.
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    /// Serve over HTTP on this port instead of stdin/stdout.
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    bind: Option<String>,
}

/// A usage problem found while resolving the plan (exit 1).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Defaults loaded from --config.
#[derive(Debug, Default)]
struct Config(serde_json::Map<String, Value>);

impl Config {
    fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(m)) => Ok(Config(m)),
            Ok(_) => Err(usage("config must be a JSON object")),
            Err(e) => Err(usage(format!("config {}: {e}", path.display()))),
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, key: &str) -> anyhow::Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| usage(format!("config key {key:?}: {e}"))))
            .transpose()
    }

    fn or<T: serde::de::DeserializeOwned>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> anyhow::Result<Option<PathBuf>> {
        self.or(flag, key)
    }
}

struct Resolved {
    resources: Resources,
    jobs: usize,
    seed: u64,
    task: Option<Task>,
}

fn resolve_common(c: &Common, cfg: &Config) -> anyhow::Result<Resolved> {
    let resources = match cfg.path(c.resources.clone(), "resources")? {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(usage(format!("resources directory {} does not exist", dir.display())));
            }
            Resources::load_dir(&dir).with_context(|| format!("loading resources from {}", dir.display()))?
        }
        None => Resources::bundled(),
    };
    let task = match (c.task, cfg.get::<String>("task")?) {
        (Some(t), _) => Some(t.into()),
        (None, Some(t)) => Some(t.parse::<Task>().map_err(usage)?),
        (None, None) => None,
    };
    Ok(Resolved {
        resources,
        jobs: cfg.or(c.jobs, "jobs")?.unwrap_or(0),
        seed: cfg.or(c.seed, "seed")?.unwrap_or(42),
        task,
    })
}

fn existing(path: Option<PathBuf>, flag: &str) -> anyhow::Result<PathBuf> {
    let p = path.ok_or_else(|| usage(format!("{flag} is required")))?;
    if !p.exists() {
        return Err(usage(format!("{flag} {}: no such file", p.display())));
    }
    Ok(p)
}

fn dataset_name(explicit: Option<String>, input: &Path) -> String {
    explicit.unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn load_clean(path: &Path, task: Option<Task>) -> anyhow::Result<Vec<Sample>> {
    Ok(read_samples(path, task)?)
}

fn is_perturbed_file(path: &Path) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty());
    Ok(match first {
        Some(l) => serde_json::from_str::<Value>(l).map(|v| v.get("perturbation").is_some()).unwrap_or(false),
        None => false,
    })
}

fn load_perturbed(path: &Path, task: Option<Task>) -> anyhow::Result<Vec<PerturbedSample>> {
    let all = read_jsonl(path, PerturbedSample::from_json)?;
    if let Some(expected) = task {
        if let Some((line, p)) = all.iter().find(|(_, p)| p.noisy.task() != expected) {
            let found = p.noisy.task();
            return Err(CorpusError::WrongTask { path: path.into(), line: *line, expected, found }.into());
        }
    }
    Ok(all.into_iter().map(|(_, p)| p).collect())
}

fn adapter(sys: &SystemArgs, jobs: usize, cfg: &Config) -> anyhow::Result<SystemAdapter> {
    let spec = cfg.or(sys.adapter.clone(), "adapter")?.ok_or_else(|| usage("--adapter is required"))?;
    let mut a = SystemAdapter::parse(&spec).map_err(usage)?;
    if jobs > 0 {
        a = a.with_max_in_flight(jobs);
    }
    if let Some(name) = cfg.or(sys.system.clone(), "system")? {
        a.label = name;
    }
    if let Some(t) = cfg.or(sys.timeout, "timeout")? {
        a = a.with_timeout(Duration::from_secs(t.max(1)));
    }
    Ok(a)
}

fn reviews_from(store: Option<&Path>) -> anyhow::Result<HashMap<String, crate::perturb::Review>> {
    match store {
        None => Ok(HashMap::new()),
        Some(dir) => {
            if !dir.is_dir() {
                return Err(usage(format!("--store {}: no such directory", dir.display())));
            }
            Ok(Store::open(dir)?.reviews())
        }
    }
}

fn write_runs(runs: &[EvalRun], out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let lines: Vec<String> = runs.iter().map(|r| serde_json::to_string(r).expect("json")).collect();
    match out {
        Some(p) => crate::corpus::sample::write_lines(p, lines)?,
        None => {
            for l in lines {
                writeln!(stdout, "{l}")?;
            }
        }
    }
    Ok(())
}

fn perturb(a: PerturbArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let input = existing(cfg.path(a.input, "in")?, "--in")?;
    let target = cfg.path(a.out, "out")?.ok_or_else(|| usage("--out is required"))?;
    let method = cfg.or(a.method, "method")?.ok_or_else(|| usage("--method is required"))?;
    let pps = cfg.or(a.pps, "pps")?.unwrap_or(1);
    let r = resolve_common(&a.common, cfg)?;
    let spec = PerturbationSpec::new(method, pps, r.seed).map_err(usage)?;
    let samples = load_clean(&input, r.task)?;
    let outcome = perturb_corpus(&samples, &spec, &r.resources, r.jobs);
    write_perturbed(&outcome.perturbed, &target)?;
    writeln!(
        err,
        "{method} pps={pps} seed={}: {} perturbed, {} not applicable -> {}",
        r.seed,
        outcome.perturbed.len(),
        outcome.not_applicable.len(),
        target.display()
    )?;
    let _ = out;
    Ok(())
}

fn evaluate(a: EvaluateArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let input = existing(cfg.path(a.input, "in")?, "--in")?;
    let r = resolve_common(&a.common, cfg)?;
    let adapter = adapter(&a.system, r.jobs, cfg)?;
    let allow = a.system.allow_unreviewed || cfg.get::<bool>("allow_unreviewed")?.unwrap_or(false);
    let reviews = reviews_from(cfg.path(a.system.store.clone(), "store")?.as_deref())?;
    let dataset = dataset_name(a.system.dataset.clone(), &input);
    let runs = if is_perturbed_file(&input)? {
        let mut items = load_perturbed(&input, r.task)?;
        apply_reviews(&mut items, &reviews);
        let mut groups: BTreeMap<(Method, usize), Vec<PerturbedSample>> = BTreeMap::new();
        for p in items {
            groups.entry((p.method, p.pps_requested)).or_default().push(p);
        }
        for ((method, _), set) in &groups {
            check_gate(*method, set, allow)?;
        }
        let conn = adapter.connect()?;
        let mut runs = Vec::new();
        for ((method, pps), set) in &groups {
            runs.extend(score_perturbed(&conn, &dataset, *method, *pps, set, &BTreeMap::new(), allow)?);
        }
        runs
    } else {
        let samples = load_clean(&input, r.task)?;
        score_clean(&adapter.connect()?, &dataset, &samples)?
    };
    for run in &runs {
        let score = run.score.map_or_else(|| "undefined".to_string(), |s| format!("{:.2}", s * 100.0));
        writeln!(err, "{} {} {} pps={}: {score} over {} samples", run.dataset, run.task, run.method, run.pps, run.n_scored)?;
    }
    write_runs(&runs, a.out.as_deref(), out)
}

fn runs_file(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("runs.jsonl")
    } else {
        p.to_path_buf()
    }
}

fn print_report(runs: &[EvalRun], out: &mut dyn Write) -> anyhow::Result<Vec<crate::harness::RobustnessReport>> {
    let reports = reports_from_runs(runs)?;
    write!(out, "{}", render_table(&reports))?;
    for rep in &reports {
        for c in rep.cells.iter().filter(|c| !c.missing.is_empty()) {
            let total = c.methods.len() + c.missing.len();
            writeln!(
                out,
                "note: {} {} {} pps={} averages {} of {total} methods (no score: {})",
                rep.task.as_str().to_uppercase(),
                if rep.system.is_empty() { &rep.dataset } else { &rep.system },
                match c.level {
                    crate::corpus::EditLevel::Char => "char",
                    crate::corpus::EditLevel::Word => "word",
                },
                c.pps,
                c.methods.len(),
                c.missing.join(", ")
            )?;
        }
    }
    Ok(reports)
}

fn report(a: ReportArgs, cfg: &Config, out: &mut dyn Write) -> anyhow::Result<()> {
    let path = existing(cfg.path(a.runs, "runs")?, "--runs")?;
    let runs = crate::harness::matrix::read_runs(&runs_file(&path))?;
    let reports = print_report(&runs, out)?;
    if let Some(p) = a.out {
        std::fs::write(&p, serde_json::to_string_pretty(&reports)? + "\n")?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let input = existing(cfg.path(a.input, "in")?, "--in")?;
    let dir = cfg.path(a.runs, "runs")?.ok_or_else(|| usage("--runs is required (output run directory)"))?;
    let r = resolve_common(&a.common, cfg)?;
    let adapter = adapter(&a.system, r.jobs, cfg)?;
    let mut mc = MatrixConfig::new(dataset_name(a.system.dataset.clone(), &input));
    if !a.method.is_empty() {
        mc.methods = a.method;
    }
    if !a.pps.is_empty() {
        if a.pps.contains(&0) {
            return Err(usage("pps values must be at least 1"));
        }
        mc.pps = a.pps;
    }
    mc.seed = r.seed;
    mc.jobs = r.jobs;
    mc.allow_unreviewed = a.system.allow_unreviewed || cfg.get::<bool>("allow_unreviewed")?.unwrap_or(false);
    mc.reviews = reviews_from(cfg.path(a.system.store.clone(), "store")?.as_deref())?;
    let samples = load_clean(&input, r.task)?;
    let conn = adapter.connect()?;
    let outcome = run_matrix(&conn, &samples, &r.resources, &mc)?;
    RunDir::new(&dir).write(&outcome.manifest, &outcome.runs)?;
    print_report(&outcome.runs, out)?;
    writeln!(err, "{} runs written to {}", outcome.runs.len(), dir.display())?;
    Ok(())
}

fn serve(a: ServeArgs, cfg: &Config, err: &mut dyn Write) -> anyhow::Result<()> {
    let dir = cfg.path(a.store, "store")?.ok_or_else(|| usage("--store is required"))?;
    let bind = cfg.or(a.bind, "bind")?.unwrap_or_else(|| "127.0.0.1".into());
    let port = cfg.or(a.port, "port")?.unwrap_or(8080);
    let ui = cfg.path(a.ui, "ui")?;
    if let Some(u) = &ui {
        if !u.is_dir() {
            return Err(usage(format!("--ui {}: no such directory", u.display())));
        }
    }
    let store = Store::open(&dir)?;
    let server = CurationServer::start(store, &format!("{bind}:{port}"), ui).map_err(|e| anyhow!("cannot bind {bind}:{port}: {e}"))?;
    writeln!(err, "curation API listening on {}/api/", server.url)?;
    server.wait();
    Ok(())
}

fn stats(a: StatsArgs, cfg: &Config, out: &mut dyn Write) -> anyhow::Result<()> {
    let ratings: Vec<Rating> = match (cfg.path(a.input, "in")?, cfg.path(a.store, "store")?) {
        (Some(p), _) => {
            let p = existing(Some(p), "--in")?;
            read_jsonl(&p, |v| serde_json::from_value::<Rating>(v).map_err(|e| RecordError::new("rating", e.to_string())))?
                .into_iter()
                .map(|(_, r)| r)
                .collect()
        }
        (None, Some(dir)) => Store::open(&existing(Some(dir), "--store")?)?.ratings().to_vec(),
        (None, None) => return Err(usage("--in or --store is required")),
    };
    let parts = match a.part {
        Some(p) => vec![p],
        None => [Part::LowRisk, Part::HighRisk]
            .into_iter()
            .filter(|p| ratings.iter().any(|r| r.part == *p))
            .collect(),
    };
    if parts.is_empty() {
        bail!("no ratings found");
    }
    for p in parts {
        let s = rating_stats(&ratings, p)?;
        writeln!(out, "{}", serde_json::to_string(&s)?)?;
    }
    Ok(())
}

fn validate_resources(a: ResourceArgs, cfg: &Config, out: &mut dyn Write) -> anyhow::Result<()> {
    if let Some(dir) = a.out {
        Resources::export_bundled(&dir)?;
        writeln!(out, "bundled resources written to {}", dir.display())?;
        return Ok(());
    }
    let res = match cfg.path(a.resources, "resources")? {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(usage(format!("--resources {}: no such directory", dir.display())));
            }
            Resources::load_dir(&dir)?
        }
        None => Resources::bundled(),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "ok": true, "sha256": res.digests }))?)?;
    Ok(())
}

fn fixture(a: FixtureArgs) -> anyhow::Result<()> {
    let responder: Arc<dyn Responder> = match a.kind {
        FixtureKind::Oracle => {
            let mut o = Oracle::new();
            let inputs = if a.input.is_empty() { Vec::new() } else { a.input.clone() };
            if inputs.is_empty() {
                o = o.with_samples(&crate::synthetic::bundled_test());
            }
            for p in &inputs {
                let p = existing(Some(p.clone()), "--in")?;
                o = if is_perturbed_file(&p)? {
                    o.with_perturbed(&load_perturbed(&p, None)?)
                } else {
                    o.with_samples(&load_clean(&p, None)?)
                };
            }
            Arc::new(o)
        }
        FixtureKind::Memorizer | FixtureKind::Perceptron => {
            let mut data = Vec::new();
            for p in &a.input {
                data.extend(load_clean(&existing(Some(p.clone()), "--in")?, None)?);
            }
            match (a.kind, data.is_empty()) {
                (FixtureKind::Memorizer, true) => Arc::new(Memorizer::new(&crate::synthetic::bundled_test())),
                (FixtureKind::Memorizer, false) => Arc::new(Memorizer::new(&data)),
                (_, true) => Arc::new(Perceptron::train(&crate::synthetic::bundled_train())),
                (_, false) => Arc::new(Perceptron::train(&data)),
            }
        }
    };
    match a.port {
        Some(port) => {
            let bind = a.bind.unwrap_or_else(|| "127.0.0.1".into());
            let f = HttpFixture::start(responder, &format!("{bind}:{port}"))?;
            eprintln!("fixture listening on {}", f.url);
            loop {
                std::thread::park();
            }
        }
        None => {
            let stdin = io::stdin();
            serve_stdio(responder.as_ref(), stdin.lock(), io::stdout().lock())?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, writing to the given streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let result = Config::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Perturb(a) => perturb(a, &cfg, out, err),
        Command::Evaluate(a) => evaluate(a, &cfg, out, err),
        Command::Report(a) => report(a, &cfg, out),
        Command::Sweep(a) => sweep(a, &cfg, out, err),
        Command::Serve(a) => serve(a, &cfg, err),
        Command::Stats(a) => stats(a, &cfg, out),
        Command::ValidateResources(a) => validate_resources(a, &cfg, out),
        Command::Fixture(a) => fixture(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) if e.is::<Usage>() => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock())
}
