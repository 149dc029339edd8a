//! Task metrics and the statistics used for run comparison and rater
//! agreement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::bio::{decode, first_violation};
use crate::corpus::BioTag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{pred} predictions for {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("no samples to score")]
    Empty,
    #[error("input is constant; the correlation is undefined")]
    ConstantInput,
    #[error("all paired differences are zero (exact tie); the p-value is undefined")]
    ExactTie,
    #[error("expected agreement is 1 (a single category was used); kappa is undefined")]
    SingleCategory,
    #[error("malformed BIO in sample {sample} at position {position}")]
    MalformedBio { sample: usize, position: usize },
    #[error("{0}")]
    Invalid(String),
}

fn check_lengths(pred: usize, gold: usize) -> Result<(), MetricError> {
    if pred != gold {
        Err(MetricError::LengthMismatch { pred, gold })
    } else if gold == 0 {
        Err(MetricError::Empty)
    } else {
        Ok(())
    }
}

pub fn accuracy<T: PartialEq>(pred: &[T], gold: &[T]) -> Result<f64, MetricError> {
    check_lengths(pred.len(), gold.len())?;
    let hits = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Per-class TP/FP/FN.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_class: BTreeMap<String, Counts>,
}

impl ConfusionCounts {
    /// Counts for single-label classification restricted to `classes`.
    pub fn from_labels<S: AsRef<str>>(pred: &[S], gold: &[S], classes: &[S]) -> Result<Self, MetricError> {
        check_lengths(pred.len(), gold.len())?;
        let classes: BTreeSet<&str> = classes.iter().map(AsRef::as_ref).collect();
        let mut per_class: BTreeMap<String, Counts> = classes.iter().map(|c| (c.to_string(), Counts::default())).collect();
        for (p, g) in pred.iter().zip(gold) {
            let (p, g) = (p.as_ref(), g.as_ref());
            if p == g {
                if let Some(c) = per_class.get_mut(p) {
                    c.tp += 1;
                }
                continue;
            }
            if let Some(c) = per_class.get_mut(p) {
                c.fp += 1;
            }
            if let Some(c) = per_class.get_mut(g) {
                c.fn_ += 1;
            }
        }
        Ok(ConfusionCounts { per_class })
    }

    pub fn total(&self) -> Counts {
        self.per_class.values().fold(Counts::default(), |a, c| Counts {
            tp: a.tp + c.tp,
            fp: a.fp + c.fp,
            fn_: a.fn_ + c.fn_,
        })
    }

    /// 2·ΣTP / (2·ΣTP + ΣFP + ΣFN).
    pub fn micro_f1(&self) -> f64 {
        self.total().f1()
    }
}

/// Micro-averaged F1 over `classes`. Equal to accuracy when every label is
/// one of `classes`.
pub fn micro_f1<S: AsRef<str>>(pred: &[S], gold: &[S], classes: &[S]) -> Result<f64, MetricError> {
    Ok(ConfusionCounts::from_labels(pred, gold, classes)?.micro_f1())
}

/// Entity-level F1: exact span and type matching, averaged over the entity
/// types that occur in the gold labels.
pub fn entity_f1(pred: &[Vec<BioTag>], gold: &[Vec<BioTag>]) -> Result<f64, MetricError> {
    check_lengths(pred.len(), gold.len())?;
    let mut per_type: BTreeMap<String, Counts> = BTreeMap::new();
    let mut gold_types = BTreeSet::new();
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(MetricError::Invalid(format!("sample {i}: {} predicted tags for {} tokens", p.len(), g.len())));
        }
        for tags in [p, g] {
            if let Some(position) = first_violation(tags) {
                return Err(MetricError::MalformedBio { sample: i, position });
            }
        }
        let ps: BTreeSet<_> = decode(p).into_iter().map(|s| (s.start, s.end, s.ty)).collect();
        let gs: BTreeSet<_> = decode(g).into_iter().map(|s| (s.start, s.end, s.ty)).collect();
        for span in &gs {
            gold_types.insert(span.2.clone());
            let c = per_type.entry(span.2.clone()).or_default();
            if ps.contains(span) {
                c.tp += 1;
            } else {
                c.fn_ += 1;
            }
        }
        for span in ps.difference(&gs) {
            per_type.entry(span.2.clone()).or_default().fp += 1;
        }
    }
    if gold_types.is_empty() {
        let any_pred = per_type.values().any(|c| c.fp > 0);
        return Ok(if any_pred { 0.0 } else { 1.0 });
    }
    let sum: f64 = gold_types.iter().map(|t| per_type[t].f1()).sum();
    Ok(sum / gold_types.len() as f64)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(MetricError::Invalid("pearson needs at least two points".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(MetricError::ConstantInput);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
}

/// Paired two-tailed t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, MetricError> {
    check_lengths(a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(MetricError::Invalid("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(MetricError::ExactTie);
    }
    let sd = var.sqrt();
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTestResult { n, mean_diff: mean, sd_diff: sd, t, df, p_two_tailed: student_t_two_tailed(t, df as f64) })
}

/// P(|T| ≥ |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta I_x(a, b).
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Subjects × categories count matrix with a constant number of raters per
/// subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    counts: Vec<Vec<usize>>,
    raters: usize,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<usize>>) -> Result<Self, MetricError> {
        let first = counts.first().ok_or(MetricError::Empty)?;
        let k = first.len();
        let raters: usize = first.iter().sum();
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(MetricError::Invalid(format!("row {i} has {} categories, expected {k}", row.len())));
            }
            if row.iter().sum::<usize>() != raters {
                return Err(MetricError::Invalid(format!("row {i} does not sum to {raters} raters")));
            }
        }
        if raters < 2 {
            return Err(MetricError::Invalid("at least two raters per subject are required".into()));
        }
        Ok(RatingMatrix { counts, raters })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn subjects(&self) -> usize {
        self.counts.len()
    }
}

/// Fleiss' κ = (P̄ − P̄e) / (1 − P̄e).
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, MetricError> {
    let n = m.subjects() as f64;
    let r = m.raters as f64;
    let k = m.counts[0].len();
    let p_bar = m
        .counts
        .iter()
        .map(|row| (row.iter().map(|&c| (c * c) as f64).sum::<f64>() - r) / (r * (r - 1.0)))
        .sum::<f64>()
        / n;
    let pe: f64 = (0..k)
        .map(|j| {
            let pj = m.counts.iter().map(|row| row[j] as f64).sum::<f64>() / (n * r);
            pj * pj
        })
        .sum();
    if (1.0 - pe).abs() < 1e-15 {
        return Err(MetricError::SingleCategory);
    }
    Ok((p_bar - pe) / (1.0 - pe))
}

/// Landis-Koch interpretation of a kappa value.
pub fn landis_koch_band(kappa: f64) -> Result<&'static str, MetricError> {
    if !(-1.0..=1.0).contains(&kappa) {
        return Err(MetricError::Invalid(format!("kappa {kappa} outside [-1, 1]")));
    }
    Ok(match kappa {
        k if k < 0.0 => "poor",
        k if k <= 0.20 => "slight",
        k if k <= 0.40 => "fair",
        k if k <= 0.60 => "moderate",
        k if k <= 0.80 => "substantial",
        _ => "almost perfect",
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote<C> {
    /// Strict-plurality category; `None` when the top count is shared.
    pub verdict: Option<C>,
    pub tie: bool,
}

pub fn majority_vote<C: Clone>(counts: &[(C, usize)]) -> Vote<C> {
    let top = counts.iter().map(|(_, n)| *n).max().unwrap_or(0);
    let leaders: Vec<&C> = counts.iter().filter(|(_, n)| *n == top && top > 0).map(|(c, _)| c).collect();
    match leaders.as_slice() {
        [only] => Vote { verdict: Some((*only).clone()), tie: false },
        [] => Vote { verdict: None, tie: false },
        _ => Vote { verdict: None, tie: true },
    }
}

/// Rounds half away from zero to two decimals, absorbing binary
/// representation error (6.105 → 6.11).
pub fn round2(v: f64) -> f64 {
    let scaled = v * 100.0;
    let nudged = scaled + scaled.signum() * 1e-9 * scaled.abs().max(1.0);
    nudged.round() / 100.0
}

/// Two-decimal display of a value already on the 0–100 scale.
pub fn format2(v: f64) -> String {
    let r = round2(v);
    if r == 0.0 {
        "0.00".to_string()
    } else {
        format!("{r:.2}")
    }
}
