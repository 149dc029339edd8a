//! Human review of meaning-risk perturbations and rater questionnaires.
//!
//! All state is a fold over an append-only JSONL event log; a compacted
//! snapshot records how many events it already contains.

pub mod server;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{Label, Sample};
use crate::metrics::{fleiss_kappa, landis_koch_band, majority_vote, MetricError, RatingMatrix};
use crate::perturb::rng::SplitMix64;
use crate::perturb::{Method, PerturbedSample, Review, ReviewStatus};

pub use server::{handle, CurationServer, HttpReply};

pub const DEFAULT_QUOTA: usize = 200;
pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
const COMPACT_EVERY: usize = 200;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("unknown sample {0:?}")]
    UnknownSample(String),
    #[error("no quota for {method} on {dataset:?}")]
    UnknownQuota { method: Method, dataset: String },
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("ratings incomplete: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    Relabeled,
    Excluded,
}

impl Verdict {
    fn status(self) -> ReviewStatus {
        match self {
            Verdict::Accepted => ReviewStatus::Accepted,
            Verdict::Relabeled => ReviewStatus::Relabeled,
            Verdict::Excluded => ReviewStatus::Excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    #[default]
    Reviewer,
    /// Overrides the decision of record.
    Adjudicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    /// Perturbation key of the sample.
    pub sample: String,
    pub reviewer: String,
    pub status: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised_label: Option<Label>,
    /// Seconds since the epoch; filled in when zero.
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    SameMeaning,
    ChangedMeaning,
    NotUnderstandable,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::SameMeaning, Category::ChangedMeaning, Category::NotUnderstandable];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::SameMeaning => "same-meaning",
            Category::ChangedMeaning => "changed-meaning",
            Category::NotUnderstandable => "not-understandable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    LowRisk,
    HighRisk,
}

impl Part {
    pub fn of(method: Method) -> Part {
        if method.is_meaning_risk() {
            Part::HighRisk
        } else {
            Part::LowRisk
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Part::LowRisk => "low-risk",
            Part::HighRisk => "high-risk",
        }
    }
}

impl std::str::FromStr for Part {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low-risk" => Ok(Part::LowRisk),
            "high-risk" => Ok(Part::HighRisk),
            _ => Err(format!("unknown part {s:?} (expected low-risk or high-risk)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub rater: String,
    pub sample: String,
    pub category: Category,
    pub part: Part,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
enum Event {
    Enqueue {
        dataset: String,
        sample: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        original: Option<Value>,
    },
    Decide {
        decision: ReviewDecision,
    },
    Quota {
        method: Method,
        dataset: String,
        target: usize,
    },
    Rate {
        rating: Rating,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub dataset: String,
    pub sample: PerturbedSample,
    pub original: Option<Sample>,
    /// Bumped on every decision; used for optimistic concurrency.
    pub revision: u64,
    /// First reviewer's latest decision.
    pub record: Option<ReviewDecision>,
    pub adjudicated: Option<ReviewDecision>,
}

impl Entry {
    pub fn key(&self) -> String {
        self.sample.key()
    }

    pub fn decision(&self) -> Option<&ReviewDecision> {
        self.adjudicated.as_ref().or(self.record.as_ref())
    }

    pub fn status(&self) -> ReviewStatus {
        match self.decision() {
            Some(d) => d.status.status(),
            None => self.sample.review.status,
        }
    }

    /// The sample with its review state as of the current decision.
    pub fn reviewed(&self) -> PerturbedSample {
        let mut p = self.sample.clone();
        p.review = Review {
            status: self.status(),
            revised_label: self.decision().and_then(|d| d.revised_label.clone()),
        };
        p
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnqueueReport {
    pub pending: usize,
    pub not_required: usize,
    pub duplicates: usize,
    /// Meaning-risk samples refused because their quota is already met.
    pub paused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaView {
    pub method: Method,
    pub dataset: String,
    pub target: usize,
    pub count: usize,
    pub remaining: usize,
    pub progress: f64,
    pub pending: usize,
    pub paused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingStats {
    pub part: Part,
    pub samples: usize,
    pub raters: usize,
    /// Verdict counts per category plus "tie".
    pub counts: BTreeMap<String, usize>,
    /// Same, as percentages of samples.
    pub percentages: BTreeMap<String, f64>,
    pub matrix: Vec<Vec<usize>>,
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_undefined: Option<String>,
    pub band: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireConfig {
    pub low_risk: usize,
    pub high_risk: usize,
    pub seed: u64,
}

impl Default for QuestionnaireConfig {
    fn default() -> Self {
        QuestionnaireConfig { low_risk: 30, high_risk: 20, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireItem {
    pub sample: String,
    pub method: Method,
    pub part: Part,
}

#[derive(Debug, Default)]
pub struct Store {
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
    targets: BTreeMap<(Method, String), usize>,
    ratings: Vec<Rating>,
    rated: BTreeSet<(String, String)>,
    events: usize,
    dir: Option<PathBuf>,
    log: Option<File>,
}

impl Store {
    pub fn in_memory() -> Store {
        Store::default()
    }

    /// Opens (or creates) a store directory: loads the snapshot, then
    /// replays the log past it.
    pub fn open(dir: &Path) -> Result<Store, CurationError> {
        fs::create_dir_all(dir)?;
        let mut store = Store::default();
        let snap = dir.join(SNAPSHOT_FILE);
        let skip = if snap.exists() {
            let dump: Value = serde_json::from_str(&fs::read_to_string(&snap)?)
                .map_err(|e| CurationError::Corrupt(format!("snapshot: {e}")))?;
            store.restore(&dump)?;
            store.events
        } else {
            0
        };
        let log = dir.join(LOG_FILE);
        if log.exists() {
            for (n, line) in BufReader::new(File::open(&log)?).lines().enumerate() {
                let line = line?;
                if n < skip || line.trim().is_empty() {
                    continue;
                }
                let ev: Event = serde_json::from_str(&line)
                    .map_err(|e| CurationError::Corrupt(format!("log line {}: {e}", n + 1)))?;
                store.apply(ev)?;
            }
        }
        store.log = Some(OpenOptions::new().create(true).append(true).open(&log)?);
        store.dir = Some(dir.to_path_buf());
        Ok(store)
    }

    /// Number of events folded into the current state.
    pub fn events(&self) -> usize {
        self.events
    }

    fn record(&mut self, ev: Event) -> Result<(), CurationError> {
        if let Some(log) = self.log.as_mut() {
            let mut line = serde_json::to_string(&ev).expect("events serialize");
            line.push('\n');
            log.write_all(line.as_bytes())?;
            log.flush()?;
        }
        self.apply(ev)?;
        if self.dir.is_some() && self.events % COMPACT_EVERY == 0 {
            self.compact()?;
        }
        Ok(())
    }

    fn apply(&mut self, ev: Event) -> Result<(), CurationError> {
        match ev {
            Event::Enqueue { dataset, sample, original } => {
                let sample = PerturbedSample::from_json(sample).map_err(|e| CurationError::Corrupt(e.to_string()))?;
                let original = original
                    .map(Sample::from_json)
                    .transpose()
                    .map_err(|e| CurationError::Corrupt(e.to_string()))?;
                self.index.insert(sample.key(), self.entries.len());
                self.entries.push(Entry { dataset, sample, original, revision: 0, record: None, adjudicated: None });
            }
            Event::Decide { decision } => {
                let i = *self
                    .index
                    .get(&decision.sample)
                    .ok_or_else(|| CurationError::Corrupt(format!("decision for unknown {}", decision.sample)))?;
                let e = &mut self.entries[i];
                e.revision += 1;
                match decision.role {
                    Role::Adjudicator => e.adjudicated = Some(decision),
                    Role::Reviewer => e.record = Some(decision),
                }
            }
            Event::Quota { method, dataset, target } => {
                self.targets.insert((method, dataset), target);
            }
            Event::Rate { rating } => {
                self.rated.insert((rating.rater.clone(), rating.sample.clone()));
                self.ratings.push(rating);
            }
        }
        self.events += 1;
        Ok(())
    }

    /// Full state as JSON; equal dumps mean equal stores.
    pub fn dump(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                json!({
                    "dataset": e.dataset,
                    "sample": e.sample.to_json(),
                    "original": e.original.as_ref().map(Sample::to_json),
                    "revision": e.revision,
                    "record": e.record,
                    "adjudicated": e.adjudicated,
                })
            })
            .collect();
        let targets: Vec<Value> = self
            .targets
            .iter()
            .map(|((m, d), t)| json!({ "method": m, "dataset": d, "target": t }))
            .collect();
        json!({ "events": self.events, "entries": entries, "targets": targets, "ratings": self.ratings })
    }

    fn restore(&mut self, dump: &Value) -> Result<(), CurationError> {
        let bad = |what: &str| CurationError::Corrupt(format!("snapshot {what}"));
        let field = |v: &Value, k: &str| v.get(k).cloned().unwrap_or(Value::Null);
        for e in dump["entries"].as_array().ok_or_else(|| bad("entries"))? {
            let sample = PerturbedSample::from_json(field(e, "sample")).map_err(|e| bad(&e.to_string()))?;
            let original = match field(e, "original") {
                Value::Null => None,
                v => Some(Sample::from_json(v).map_err(|e| bad(&e.to_string()))?),
            };
            let entry = Entry {
                dataset: e["dataset"].as_str().ok_or_else(|| bad("dataset"))?.to_string(),
                sample,
                original,
                revision: e["revision"].as_u64().ok_or_else(|| bad("revision"))?,
                record: serde_json::from_value(field(e, "record")).map_err(|e| bad(&e.to_string()))?,
                adjudicated: serde_json::from_value(field(e, "adjudicated")).map_err(|e| bad(&e.to_string()))?,
            };
            self.index.insert(entry.key(), self.entries.len());
            self.entries.push(entry);
        }
        for t in dump["targets"].as_array().ok_or_else(|| bad("targets"))? {
            let method: Method = serde_json::from_value(field(t, "method")).map_err(|e| bad(&e.to_string()))?;
            let dataset = t["dataset"].as_str().ok_or_else(|| bad("target dataset"))?.to_string();
            self.targets.insert((method, dataset), t["target"].as_u64().ok_or_else(|| bad("target"))? as usize);
        }
        let ratings: Vec<Rating> = serde_json::from_value(field(dump, "ratings")).map_err(|e| bad(&e.to_string()))?;
        for r in ratings {
            self.rated.insert((r.rater.clone(), r.sample.clone()));
            self.ratings.push(r);
        }
        self.events = dump["events"].as_u64().ok_or_else(|| bad("events"))? as usize;
        Ok(())
    }

    /// Writes the snapshot atomically.
    pub fn compact(&self) -> Result<(), CurationError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_string(&self.dump()).expect("json"))?;
        fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.index.get(key).map(|&i| &self.entries[i])
    }

    /// Adds perturbed samples; meaning-risk ones start pending. Originals
    /// (matched by id) are kept for diff display. Re-enqueueing is a no-op.
    pub fn enqueue(
        &mut self,
        dataset: &str,
        perturbed: &[PerturbedSample],
        originals: &[Sample],
    ) -> Result<EnqueueReport, CurationError> {
        let by_id: HashMap<&str, &Sample> = originals.iter().map(|s| (s.id.as_str(), s)).collect();
        let mut report = EnqueueReport::default();
        for p in perturbed {
            if self.index.contains_key(&p.key()) {
                report.duplicates += 1;
                continue;
            }
            if p.meaning_risk {
                let q = self.quota_counts(p.method, dataset);
                if q.0 >= self.target(p.method, dataset) {
                    report.paused += 1;
                    continue;
                }
            }
            let mut sample = p.clone();
            sample.review = Review {
                status: if p.meaning_risk { ReviewStatus::Pending } else { ReviewStatus::NotRequired },
                revised_label: None,
            };
            if p.meaning_risk {
                report.pending += 1;
            } else {
                report.not_required += 1;
            }
            let original = by_id.get(p.original_id()).map(|s| s.to_json());
            self.record(Event::Enqueue { dataset: dataset.to_string(), sample: sample.to_json(), original })?;
        }
        Ok(report)
    }

    /// Records a review decision. `expected_revision`, when given, must match
    /// the entry's current revision.
    pub fn decide(&mut self, mut d: ReviewDecision, expected_revision: Option<u64>) -> Result<&Entry, CurationError> {
        let i = *self.index.get(&d.sample).ok_or_else(|| CurationError::UnknownSample(d.sample.clone()))?;
        let e = &self.entries[i];
        if !e.sample.meaning_risk {
            return Err(CurationError::Conflict(format!("{} does not require review", d.sample)));
        }
        if d.reviewer.trim().is_empty() {
            return Err(CurationError::Invalid("reviewer id is required".into()));
        }
        match (d.status, &d.revised_label) {
            (Verdict::Relabeled, None) => {
                return Err(CurationError::Invalid("relabeled decisions need a revised_label".into()))
            }
            (Verdict::Relabeled, Some(l)) => {
                let mut probe = e.sample.noisy.clone();
                probe.set_gold(l.clone()).map_err(|m| CurationError::Invalid(format!("revised_label: {m}")))?;
            }
            (_, Some(_)) => return Err(CurationError::Invalid("revised_label is only allowed when relabeling".into())),
            (_, None) => {}
        }
        if let Some(rev) = expected_revision {
            if rev != e.revision {
                return Err(CurationError::Conflict(format!(
                    "{} is at revision {}, not {rev}",
                    d.sample, e.revision
                )));
            }
        }
        if d.role == Role::Reviewer {
            if let Some(r) = &e.record {
                if r.reviewer != d.reviewer {
                    return Err(CurationError::Conflict(format!("{} was already decided by {}", d.sample, r.reviewer)));
                }
            }
        }
        if d.timestamp == 0 {
            d.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |t| t.as_secs());
        }
        self.record(Event::Decide { decision: d })?;
        Ok(&self.entries[i])
    }

    pub fn set_quota(&mut self, method: Method, dataset: &str, target: usize) -> Result<(), CurationError> {
        self.record(Event::Quota { method, dataset: dataset.to_string(), target })
    }

    fn target(&self, method: Method, dataset: &str) -> usize {
        self.targets.get(&(method, dataset.to_string())).copied().unwrap_or(DEFAULT_QUOTA)
    }

    /// (accepted + relabeled, pending) for a method on a dataset.
    fn quota_counts(&self, method: Method, dataset: &str) -> (usize, usize) {
        let mut out = (0, 0);
        for e in self.entries.iter().filter(|e| e.sample.method == method && e.dataset == dataset) {
            match e.status() {
                ReviewStatus::Accepted | ReviewStatus::Relabeled => out.0 += 1,
                ReviewStatus::Pending => out.1 += 1,
                _ => {}
            }
        }
        out
    }

    pub fn progress(&self, method: Method, dataset: &str) -> Result<QuotaView, CurationError> {
        let known = self.targets.contains_key(&(method, dataset.to_string()))
            || self.entries.iter().any(|e| e.sample.method == method && e.dataset == dataset && e.sample.meaning_risk);
        if !known {
            return Err(CurationError::UnknownQuota { method, dataset: dataset.to_string() });
        }
        let target = self.target(method, dataset);
        let (count, pending) = self.quota_counts(method, dataset);
        Ok(QuotaView {
            method,
            dataset: dataset.to_string(),
            target,
            count,
            remaining: target.saturating_sub(count),
            progress: if target == 0 { 1.0 } else { count as f64 / target as f64 },
            pending,
            paused: count >= target,
        })
    }

    /// Quota views for every (method, dataset) with review work or a target.
    pub fn progress_all(&self) -> Vec<QuotaView> {
        let mut pairs: BTreeSet<(Method, String)> = self.targets.keys().cloned().collect();
        for e in self.entries.iter().filter(|e| e.sample.meaning_risk) {
            pairs.insert((e.sample.method, e.dataset.clone()));
        }
        pairs.into_iter().filter_map(|(m, d)| self.progress(m, &d).ok()).collect()
    }

    pub fn queue(&self, method: Option<Method>, dataset: Option<&str>, status: Option<ReviewStatus>) -> Vec<&Entry> {
        self.entries
            .iter()
            .filter(|e| method.is_none_or(|m| e.sample.method == m))
            .filter(|e| dataset.is_none_or(|d| e.dataset == d))
            .filter(|e| status.is_none_or(|s| e.status() == s))
            .collect()
    }

    /// Curated set: everything except excluded and still-pending samples,
    /// relabeled ones carrying their revised label.
    pub fn export(&self, method: Option<Method>, dataset: Option<&str>) -> Vec<PerturbedSample> {
        self.queue(method, dataset, None)
            .into_iter()
            .filter(|e| !matches!(e.status(), ReviewStatus::Excluded | ReviewStatus::Pending))
            .map(Entry::reviewed)
            .collect()
    }

    /// Review decisions keyed by perturbation key, for the harness.
    pub fn reviews(&self) -> HashMap<String, Review> {
        self.entries.iter().map(|e| (e.key(), e.reviewed().review)).collect()
    }

    pub fn record_rating(&mut self, r: Rating) -> Result<(), CurationError> {
        if r.rater.trim().is_empty() {
            return Err(CurationError::Invalid("rater id is required".into()));
        }
        if !self.index.contains_key(&r.sample) {
            return Err(CurationError::UnknownSample(r.sample.clone()));
        }
        if self.rated.contains(&(r.rater.clone(), r.sample.clone())) {
            return Err(CurationError::Conflict(format!("{} already rated {}", r.rater, r.sample)));
        }
        self.record(Event::Rate { rating: r })
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn rating_stats(&self, part: Part) -> Result<RatingStats, CurationError> {
        rating_stats(&self.ratings, part)
    }

    /// Method-stratified sample of entries for a rater questionnaire.
    pub fn questionnaire(&self, cfg: &QuestionnaireConfig) -> Vec<QuestionnaireItem> {
        let mut rng = SplitMix64::new(cfg.seed);
        let mut out = Vec::new();
        for (part, want) in [(Part::LowRisk, cfg.low_risk), (Part::HighRisk, cfg.high_risk)] {
            let mut by_method: BTreeMap<Method, Vec<&Entry>> = BTreeMap::new();
            for e in &self.entries {
                if Part::of(e.sample.method) == part && e.status() != ReviewStatus::Excluded {
                    by_method.entry(e.sample.method).or_default().push(e);
                }
            }
            let mut pools: Vec<(Method, Vec<&Entry>)> = by_method
                .into_iter()
                .map(|(m, v)| {
                    let order = rng.permutation(v.len());
                    (m, order.into_iter().map(|i| v[i]).collect())
                })
                .collect();
            let mut taken = 0;
            while taken < want && pools.iter().any(|(_, v)| !v.is_empty()) {
                for (m, pool) in pools.iter_mut() {
                    if taken == want {
                        break;
                    }
                    if let Some(e) = pool.pop() {
                        out.push(QuestionnaireItem { sample: e.key(), method: *m, part });
                        taken += 1;
                    }
                }
            }
        }
        out
    }
}

/// Majority-vote percentages and Fleiss' kappa for one questionnaire part.
/// Every sample of the part must be rated by every rater of the part.
pub fn rating_stats(ratings: &[Rating], part: Part) -> Result<RatingStats, CurationError> {
    let part_ratings: Vec<&Rating> = ratings.iter().filter(|r| r.part == part).collect();
    let raters: BTreeSet<&str> = part_ratings.iter().map(|r| r.rater.as_str()).collect();
    let mut per_sample: BTreeMap<&str, BTreeMap<Category, usize>> = BTreeMap::new();
    for r in &part_ratings {
        *per_sample.entry(&r.sample).or_default().entry(r.category).or_default() += 1;
    }
    if per_sample.is_empty() {
        return Err(CurationError::Incomplete(format!("no ratings for {}", part.as_str())));
    }
    for (s, counts) in &per_sample {
        let n: usize = counts.values().sum();
        if n != raters.len() {
            return Err(CurationError::Incomplete(format!("{s} has {n} of {} ratings", raters.len())));
        }
    }
    let mut counts: BTreeMap<String, usize> = Category::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    counts.insert("tie".into(), 0);
    let mut matrix = Vec::new();
    for cats in per_sample.values() {
        let row: Vec<(Category, usize)> = Category::ALL.iter().map(|c| (*c, cats.get(c).copied().unwrap_or(0))).collect();
        let vote = majority_vote(&row);
        let key = match (vote.verdict, vote.tie) {
            (Some(c), _) => c.as_str(),
            _ => "tie",
        };
        *counts.get_mut(key).expect("preset") += 1;
        matrix.push(row.into_iter().map(|(_, n)| n).collect::<Vec<_>>());
    }
    let n = per_sample.len() as f64;
    let percentages = counts.iter().map(|(k, v)| (k.clone(), *v as f64 * 100.0 / n)).collect();
    let (kappa, kappa_undefined) = if raters.len() < 2 {
        (None, Some("fewer than two raters".to_string()))
    } else {
        match fleiss_kappa(&RatingMatrix::new(matrix.clone())?) {
            Ok(k) => (Some(k), None),
            Err(e @ MetricError::SingleCategory) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    };
    let band = kappa.map(landis_koch_band).transpose()?.map(str::to_string);
    Ok(RatingStats {
        part,
        samples: per_sample.len(),
        raters: raters.len(),
        counts,
        percentages,
        matrix,
        kappa,
        kappa_undefined,
        band,
    })
}
