use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalRun, HarnessError};
use crate::corpus::{EditLevel, Task};
use crate::metrics::format2;
use crate::perturb::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub level: EditLevel,
    pub pps: usize,
    /// Mean score over the level's methods; `None` if every run was undefined.
    pub mean_score: Option<f64>,
    /// baseline − mean_score; displayed negated, as a signed change.
    pub decrease: Option<f64>,
    pub methods: Vec<String>,
    /// Methods of the level with no scored run for this pps.
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub system: String,
    pub dataset: String,
    pub task: Task,
    pub baseline: f64,
    pub cells: Vec<ReportCell>,
}

impl RobustnessReport {
    pub fn cell(&self, level: EditLevel, pps: usize) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.level == level && c.pps == pps)
    }

    /// Signed change for display (mean − baseline), ×100 at full precision.
    pub fn display_value(&self, level: EditLevel, pps: usize) -> Option<f64> {
        self.cell(level, pps).and_then(|c| c.decrease).map(|d| -d * 100.0)
    }
}

/// Averages each (level, pps) group of runs against the clean baseline.
pub fn robustness_report(baseline: &EvalRun, runs: &[EvalRun]) -> Result<RobustnessReport, HarnessError> {
    if !baseline.is_clean() {
        return Err(HarnessError::MixedRuns(format!("baseline run has method {}", baseline.method)));
    }
    let base = baseline
        .score
        .ok_or_else(|| HarnessError::Other(format!("baseline score undefined for {} {}", baseline.dataset, baseline.task)))?;
    let mut groups: BTreeMap<(usize, usize), Vec<(Method, &EvalRun)>> = BTreeMap::new();
    for r in runs.iter().filter(|r| !r.is_clean()) {
        if r.dataset != baseline.dataset || r.task != baseline.task || r.system != baseline.system {
            return Err(HarnessError::MixedRuns(format!(
                "{}/{}/{} vs baseline {}/{}/{}",
                r.system, r.dataset, r.task, baseline.system, baseline.dataset, baseline.task
            )));
        }
        let m = r.method().ok_or_else(|| HarnessError::Other(format!("unknown method {:?}", r.method)))?;
        let level = match m.level() {
            EditLevel::Char => 0,
            EditLevel::Word => 1,
        };
        groups.entry((level, r.pps)).or_default().push((m, r));
    }
    let mut cells = Vec::new();
    for ((level, pps), members) in groups {
        let level = if level == 0 { EditLevel::Char } else { EditLevel::Word };
        let scored: Vec<(Method, f64)> = members.iter().filter_map(|(m, r)| r.score.map(|s| (*m, s))).collect();
        let missing = Method::of_level(level)
            .filter(|m| !scored.iter().any(|(s, _)| s == m))
            .map(|m| m.name().to_string())
            .collect();
        let mean = (!scored.is_empty()).then(|| scored.iter().map(|(_, s)| s).sum::<f64>() / scored.len() as f64);
        cells.push(ReportCell {
            level,
            pps,
            mean_score: mean,
            decrease: mean.map(|m| base - m),
            methods: scored.iter().map(|(m, _)| m.name().to_string()).collect(),
            missing,
        });
    }
    Ok(RobustnessReport {
        system: baseline.system.clone(),
        dataset: baseline.dataset.clone(),
        task: baseline.task,
        baseline: base,
        cells,
    })
}

/// Groups runs by (system, dataset, task) and builds one report per group
/// that has a clean baseline.
pub fn reports_from_runs(runs: &[EvalRun]) -> Result<Vec<RobustnessReport>, HarnessError> {
    let mut groups: BTreeMap<(String, String, usize), Vec<EvalRun>> = BTreeMap::new();
    let task_order = |t: Task| Task::ALL.iter().position(|x| *x == t).unwrap_or(0);
    for r in runs {
        groups
            .entry((r.system.clone(), r.dataset.clone(), task_order(r.task)))
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for ((system, dataset, _), members) in groups {
        let baseline = members
            .iter()
            .find(|r| r.is_clean())
            .ok_or_else(|| HarnessError::Other(format!("no clean run for {system}/{dataset}")))?;
        out.push(robustness_report(baseline, &members)?);
    }
    // task-major order, matching the printed table
    out.sort_by_key(|r| task_order(r.task));
    Ok(out)
}

/// Aligned-text table: one row per report, baseline then char and word
/// columns for PPS 1..=4.
pub fn render_table(reports: &[RobustnessReport]) -> String {
    let mut rows: Vec<Vec<String>> = vec![{
        let mut h = vec!["Task".to_string(), "System".to_string(), "Test set".to_string()];
        for level in ["Char", "Word"] {
            for pps in 1..=4 {
                h.push(format!("{level} PPS={pps}"));
            }
        }
        h
    }];
    for r in reports {
        let system = if r.system.is_empty() { r.dataset.clone() } else { r.system.clone() };
        let mut row = vec![r.task.as_str().to_uppercase(), system, format2(r.baseline * 100.0)];
        for level in [EditLevel::Char, EditLevel::Word] {
            for pps in 1..=4 {
                row.push(match (r.cell(level, pps), r.display_value(level, pps)) {
                    (_, Some(v)) => format2(v),
                    (Some(_), None) => "undef".to_string(),
                    (None, None) => "-".to_string(),
                });
            }
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c < 2 {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            } else {
                let _ = write!(line, "{cell:>w$}  ", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
