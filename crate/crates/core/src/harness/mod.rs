//! Black-box evaluation: drive a system over clean and perturbed sets, score
//! it and aggregate robustness reports.

pub mod adapter;
pub mod fixtures;
pub mod matrix;
pub mod perceptron;
pub mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BioTag, CorpusError, Label, Task};
use crate::metrics::{self, MetricError, TTestResult};
use crate::perturb::Method;

pub use adapter::{Connection, Request, SystemAdapter, Transport, PROTOCOL};
pub use fixtures::{Memorizer, Oracle, Responder};
pub use matrix::{apply_reviews, run_matrix, MatrixConfig, MatrixOutcome, RunDir};
pub use perceptron::Perceptron;
pub use report::{robustness_report, ReportCell, RobustnessReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("response for unknown id {0:?}")]
    UnknownId(String),
    #[error("no prediction for id {0:?}")]
    MissingPrediction(String),
    #[error("request {id:?} timed out after {attempts} attempts")]
    Timeout { id: String, attempts: usize },
    #[error("transport failure for {id:?} after {attempts} attempts: {detail}")]
    Transport { id: String, attempts: usize, detail: String },
    #[error("system does not support task {0}")]
    UnsupportedTask(Task),
    #[error("duplicate request id {0:?}")]
    DuplicateId(String),
    #[error("{pending} {method} samples are pending review; review them or pass --allow-unreviewed")]
    ReviewGate { method: Method, pending: usize },
    #[error("no runs for {level} pps={pps}")]
    NoRuns { level: String, pps: usize },
    #[error("runs mix datasets or tasks: {0}")]
    MixedRuns(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// One scored pass of a system over a dataset (clean or one method × pps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub system: String,
    pub dataset: String,
    pub task: Task,
    /// Method name, or "clean" for the baseline.
    pub method: String,
    pub pps: usize,
    /// Metric in [0, 1] (Pearson in [-1, 1]); `None` when undefined for the
    /// predictions, e.g. a constant SS predictor.
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
    pub n_scored: usize,
    pub n_not_applicable: usize,
    pub n_excluded_by_review: usize,
}

pub const CLEAN: &str = "clean";

impl EvalRun {
    pub fn is_clean(&self) -> bool {
        self.method == CLEAN
    }

    pub fn method(&self) -> Option<Method> {
        self.method.parse().ok()
    }
}

/// Scores predictions with the task's metric: NER entity F1, RE micro F1,
/// TI accuracy, SS Pearson.
pub fn evaluate(pred: &[Label], gold: &[Label], task: Task) -> Result<f64, HarnessError> {
    if pred.len() != gold.len() {
        return Err(MetricError::LengthMismatch { pred: pred.len(), gold: gold.len() }.into());
    }
    let shape = |what: &str| HarnessError::Protocol(format!("{what} output expected for task {task}"));
    Ok(match task {
        Task::Ner => {
            let p = tags(pred).ok_or_else(|| shape("tag list"))?;
            let g = tags(gold).ok_or_else(|| shape("tag list"))?;
            metrics::entity_f1(&p, &g)?
        }
        Task::Re => {
            let p = classes(pred).ok_or_else(|| shape("class"))?;
            let g = classes(gold).ok_or_else(|| shape("class"))?;
            let all: BTreeSet<&str> = p.iter().chain(&g).copied().collect();
            let all: Vec<&str> = all.into_iter().collect();
            metrics::micro_f1(&p, &g, &all)?
        }
        Task::Ti => {
            let p = classes(pred).ok_or_else(|| shape("class"))?;
            let g = classes(gold).ok_or_else(|| shape("class"))?;
            metrics::accuracy(&p, &g)?
        }
        Task::Ss => {
            let p = scores(pred).ok_or_else(|| shape("numeric"))?;
            let g = scores(gold).ok_or_else(|| shape("numeric"))?;
            metrics::pearson(&p, &g)?
        }
    })
}

fn tags(labels: &[Label]) -> Option<Vec<Vec<BioTag>>> {
    labels
        .iter()
        .map(|l| match l {
            Label::Tags(t) => Some(t.clone()),
            _ => None,
        })
        .collect()
}

fn classes(labels: &[Label]) -> Option<Vec<&str>> {
    labels
        .iter()
        .map(|l| match l {
            Label::Class(c) => Some(c.as_str()),
            _ => None,
        })
        .collect()
}

fn scores(labels: &[Label]) -> Option<Vec<f64>> {
    labels
        .iter()
        .map(|l| match l {
            Label::Score(s) => Some(*s),
            _ => None,
        })
        .collect()
}

/// Paired t-test between two runs' per-cell scores.
pub fn compare_runs_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, HarnessError> {
    Ok(metrics::paired_ttest(a, b)?)
}
