use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::adapter::{Connection, Request, PROTOCOL};
use super::report::{render_table, reports_from_runs, RobustnessReport};
use super::{evaluate, EvalRun, HarnessError, CLEAN};
use crate::corpus::sample::{read_jsonl, write_lines};
use crate::corpus::{Label, Sample, Task};
use crate::metrics::MetricError;
use crate::perturb::{perturb_corpus, Method, PerturbationSpec, PerturbedSample, Review, ReviewStatus};
use crate::resources::Resources;

#[derive(Debug, Clone)]
pub struct MatrixConfig {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub pps: Vec<usize>,
    pub seed: u64,
    /// Perturbation workers; 0 = one per core.
    pub jobs: usize,
    pub allow_unreviewed: bool,
    /// Review decisions keyed by perturbation key.
    pub reviews: HashMap<String, Review>,
}

impl MatrixConfig {
    pub fn new(dataset: impl Into<String>) -> Self {
        MatrixConfig {
            dataset: dataset.into(),
            methods: Method::ALL.to_vec(),
            pps: (1..=4).collect(),
            seed: 42,
            jobs: 0,
            allow_unreviewed: false,
            reviews: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixOutcome {
    pub runs: Vec<EvalRun>,
    pub reports: Vec<RobustnessReport>,
    pub manifest: Value,
}

/// Overwrites review state with any recorded decision for the same key.
pub fn apply_reviews(samples: &mut [PerturbedSample], reviews: &HashMap<String, Review>) {
    for p in samples {
        if let Some(r) = reviews.get(&p.key()) {
            p.review = r.clone();
        }
    }
}

fn pending(samples: &[PerturbedSample]) -> usize {
    samples.iter().filter(|p| p.review.status == ReviewStatus::Pending).count()
}

/// Fails if any meaning-risk sample is still pending and the override is off.
pub fn check_gate(method: Method, samples: &[PerturbedSample], allow_unreviewed: bool) -> Result<(), HarnessError> {
    let n = pending(samples);
    if n > 0 && !allow_unreviewed {
        return Err(HarnessError::ReviewGate { method, pending: n });
    }
    Ok(())
}

fn score_run(
    conn: &Connection,
    template: EvalRun,
    requests: Vec<Request>,
    gold: Vec<Label>,
) -> Result<EvalRun, HarnessError> {
    let mut run = template;
    run.n_scored = requests.len();
    if requests.is_empty() {
        run.undefined = Some("no samples to score".into());
        return Ok(run);
    }
    let pred = conn.run(&requests)?;
    match evaluate(&pred, &gold, run.task) {
        Ok(s) => run.score = Some(s),
        Err(HarnessError::Metric(e @ (MetricError::ConstantInput | MetricError::Empty))) => {
            run.undefined = Some(e.to_string())
        }
        Err(e) => return Err(e),
    }
    Ok(run)
}

fn blank(conn: &Connection, dataset: &str, task: Task, method: &str, pps: usize) -> EvalRun {
    EvalRun {
        system: conn.label().to_string(),
        dataset: dataset.to_string(),
        task,
        method: method.to_string(),
        pps,
        score: None,
        undefined: None,
        n_scored: 0,
        n_not_applicable: 0,
        n_excluded_by_review: 0,
    }
}

fn tasks_of(tasks: impl Iterator<Item = Task>) -> Vec<Task> {
    let present: Vec<Task> = tasks.collect();
    Task::ALL.into_iter().filter(|t| present.contains(t)).collect()
}

/// Clean baseline, one run per task in the dataset.
pub fn score_clean(conn: &Connection, dataset: &str, samples: &[Sample]) -> Result<Vec<EvalRun>, HarnessError> {
    tasks_of(samples.iter().map(Sample::task))
        .into_iter()
        .map(|task| {
            let part: Vec<&Sample> = samples.iter().filter(|s| s.task() == task).collect();
            let requests = part.iter().map(|s| Request::new(s.id.clone(), s)).collect();
            let gold = part.iter().map(|s| s.gold()).collect();
            score_run(conn, blank(conn, dataset, task, CLEAN, 0), requests, gold)
        })
        .collect()
}

/// Scores one method's perturbed set per task: excluded samples are dropped,
/// relabeled samples are scored against the revised label.
pub fn score_perturbed(
    conn: &Connection,
    dataset: &str,
    method: Method,
    pps: usize,
    samples: &[PerturbedSample],
    not_applicable: &BTreeMap<Task, usize>,
    allow_unreviewed: bool,
) -> Result<Vec<EvalRun>, HarnessError> {
    check_gate(method, samples, allow_unreviewed)?;
    let tasks = tasks_of(samples.iter().map(|p| p.noisy.task()).chain(not_applicable.keys().copied()));
    tasks
        .into_iter()
        .map(|task| {
            let part: Vec<&PerturbedSample> = samples.iter().filter(|p| p.noisy.task() == task).collect();
            let (kept, excluded): (Vec<&PerturbedSample>, Vec<&PerturbedSample>) =
                part.into_iter().partition(|p| p.review.status != ReviewStatus::Excluded);
            let mut run = blank(conn, dataset, task, method.name(), pps);
            run.n_not_applicable = not_applicable.get(&task).copied().unwrap_or(0);
            run.n_excluded_by_review = excluded.len();
            let requests = kept.iter().map(|p| Request::new(p.key(), &p.noisy)).collect();
            let gold = kept.iter().map(|p| p.scoring_label()).collect();
            score_run(conn, run, requests, gold)
        })
        .collect()
}

fn dataset_digest(samples: &[Sample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.to_line().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Clean run plus one run per (method, pps) and task, with reports and a
/// manifest of everything needed to reproduce the perturbed sets.
pub fn run_matrix(
    conn: &Connection,
    samples: &[Sample],
    res: &Resources,
    cfg: &MatrixConfig,
) -> Result<MatrixOutcome, HarnessError> {
    for s in samples {
        if !conn.tasks().contains(&s.task()) {
            return Err(HarnessError::UnsupportedTask(s.task()));
        }
    }
    let task_of: HashMap<&str, Task> = samples.iter().map(|s| (s.id.as_str(), s.task())).collect();
    let mut sets = Vec::new();
    for &method in &cfg.methods {
        for &pps in &cfg.pps {
            let spec = PerturbationSpec::new(method, pps, cfg.seed).map_err(HarnessError::Other)?;
            let mut out = perturb_corpus(samples, &spec, res, cfg.jobs);
            apply_reviews(&mut out.perturbed, &cfg.reviews);
            let mut na: BTreeMap<Task, usize> = BTreeMap::new();
            for n in &out.not_applicable {
                *na.entry(task_of[n.id.as_str()]).or_default() += 1;
            }
            sets.push((method, pps, out.perturbed, na));
        }
    }
    // refuse before scoring anything
    for (method, _, set, _) in &sets {
        check_gate(*method, set, cfg.allow_unreviewed)?;
    }

    let mut runs = score_clean(conn, &cfg.dataset, samples)?;
    let mut counts = Vec::new();
    for (method, pps, set, na) in &sets {
        let scored = score_perturbed(conn, &cfg.dataset, *method, *pps, set, na, true)?;
        for r in &scored {
            let pending_scored = set
                .iter()
                .filter(|p| p.noisy.task() == r.task && p.review.status == ReviewStatus::Pending)
                .count();
            counts.push(json!({
                "task": r.task, "method": method, "pps": pps,
                "perturbed": r.n_scored + r.n_excluded_by_review,
                "not_applicable": r.n_not_applicable,
                "excluded_by_review": r.n_excluded_by_review,
                "pending_scored": pending_scored,
            }));
        }
        runs.extend(scored);
    }
    let reports = reports_from_runs(&runs)?;
    let manifest = json!({
        "protocol": PROTOCOL,
        "system": conn.label(),
        "dataset": { "id": cfg.dataset, "samples": samples.len(), "sha256": dataset_digest(samples) },
        "seed": cfg.seed,
        "methods": cfg.methods,
        "pps": cfg.pps,
        "allow_unreviewed": cfg.allow_unreviewed,
        "reviews_applied": cfg.reviews.len(),
        "resources": res.digests,
        "counts": counts,
    });
    Ok(MatrixOutcome { runs, reports, manifest })
}

/// Run directory layout: manifest.json, runs.jsonl, report.json, report.txt.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        RunDir { path: path.into() }
    }

    pub fn runs_path(&self) -> PathBuf {
        self.path.join("runs.jsonl")
    }

    pub fn write(&self, manifest: &Value, runs: &[EvalRun]) -> Result<Vec<RobustnessReport>, HarnessError> {
        fs::create_dir_all(&self.path)?;
        fs::write(self.path.join("manifest.json"), serde_json::to_string_pretty(manifest).expect("json") + "\n")?;
        write_lines(&self.runs_path(), runs.iter().map(|r| serde_json::to_string(r).expect("json")))?;
        self.write_reports(runs)
    }

    /// Recomputes and writes report.json and report.txt from runs.
    pub fn write_reports(&self, runs: &[EvalRun]) -> Result<Vec<RobustnessReport>, HarnessError> {
        let reports = reports_from_runs(runs)?;
        fs::write(self.path.join("report.json"), serde_json::to_string_pretty(&reports).expect("json") + "\n")?;
        fs::write(self.path.join("report.txt"), render_table(&reports))?;
        Ok(reports)
    }

    pub fn read_runs(&self) -> Result<Vec<EvalRun>, HarnessError> {
        read_runs(&self.runs_path())
    }
}

pub fn read_runs(path: &Path) -> Result<Vec<EvalRun>, HarnessError> {
    let parsed = read_jsonl(path, |v| {
        serde_json::from_value::<EvalRun>(v).map_err(|e| crate::corpus::RecordError::new("run", e.to_string()))
    })?;
    Ok(parsed.into_iter().map(|(_, r)| r).collect())
}
