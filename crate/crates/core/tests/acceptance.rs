mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;

use clinperturb::corpus::{EditLevel, Task};
use clinperturb::harness::{robustness_report, run_matrix, MatrixConfig, Memorizer, Oracle, SystemAdapter};
use clinperturb::metrics::{accuracy, fleiss_kappa, micro_f1, paired_ttest, pearson, student_t_two_tailed, RatingMatrix};
use clinperturb::perturb::rng::SplitMix64;
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec};
use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($c:expr, $($t:tt)*) => { if !$c { return Err(format!($($t)*)); } };
}

fn golden_examples() -> Outcome {
    let rows = golden_rows();
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.ok())
        .map(|r| format!("{}: expected {:?}, got {:?}", r.method, r.expected, r.got))
        .collect();
    ensure!(bad.is_empty(), "{}", bad.join("; "));
    Ok(format!("{} of 16 methods reproduce their worked example", rows.len()))
}

fn published_table() -> Outcome {
    let p = published();
    let mut char_ok = 0;
    let mut word_notes = Vec::new();
    for (level, task, printed) in &p.deltas {
        for (s, name) in SYSTEMS.iter().enumerate() {
            let runs = fixture_runs(&p, s, *task);
            let report = robustness_report(&runs[0], &runs[1..]).map_err(|e| e.to_string())?;
            let got = report.display_value(*level, 1).ok_or("empty cell")?;
            let oracle = p.mean_change(s, *task, *level);
            ensure!((got - oracle).abs() < 1e-9, "{name} {task} {level:?}: report {got} vs fixture mean {oracle}");
            let diff = got - printed[s];
            match level {
                EditLevel::Char => {
                    ensure!(diff.abs() <= 0.01, "{name} {task} char: {got:.4} vs printed {}", printed[s]);
                    char_ok += 1;
                }
                EditLevel::Word if diff.abs() > 0.01 => word_notes.push(format!("{name}-{task} {diff:+.2}")),
                EditLevel::Word => {}
            }
        }
    }
    ensure!(char_ok == 12, "only {char_ok} char cells checked");
    Ok(format!(
        "12/12 char-level cells within 0.01; printed word-level cells off the per-method mean: {}",
        if word_notes.is_empty() { "none".to_string() } else { word_notes.join(", ") }
    ))
}

fn determinism() -> Outcome {
    let mut combos = 0;
    for m in Method::ALL {
        for pps in 1..=4 {
            let spec = PerturbationSpec::new(m, pps, 42).unwrap();
            let lines = |jobs| -> Vec<String> {
                perturb_corpus(corpus(), &spec, res(), jobs).perturbed.iter().map(|p| p.to_line()).collect()
            };
            let a = lines(1);
            ensure!(a == lines(8) && a == lines(1), "{m} pps={pps} differs between runs or worker counts");
            combos += 1;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_test.jsonl");
    for m in ["char-delete", "cmw", "word-order", "verb-tense"] {
        let mut outputs = Vec::new();
        for (i, jobs) in ["1", "8"].iter().enumerate() {
            let out = dir.path().join(format!("{m}-{i}.jsonl"));
            let status = Command::new(env!("CARGO_BIN_EXE_clinperturb"))
                .args(["perturb", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()])
                .args(["--method", m, "--pps", "3", "--seed", "42", "--jobs", jobs])
                .output()
                .map_err(|e| e.to_string())?;
            ensure!(status.status.success(), "cli perturb {m} failed");
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure!(outputs[0] == outputs[1], "cli output for {m} differs between worker counts");
    }
    Ok(format!("{combos} method x pps sets identical over 3 runs (1 and 8 workers); CLI byte-identical for 4 methods"))
}

fn perturbation_properties() -> Outcome {
    let mut applied = 0;
    for m in Method::ALL {
        applied += engine_suite(m, 10_000, 0xacce97).map_err(|e| format!("{m}: {e}"))?;
    }
    let mut involutions = Vec::new();
    for m in [Method::Negation, Method::Spv, Method::VerbTense] {
        let n = involution_suite(m).map_err(|e| format!("{m}: {e}"))?;
        ensure!(n >= 100, "{m}: only {n} eligible sentences");
        involutions.push(format!("{m} {n}"));
    }
    Ok(format!("160000 cases ({applied} perturbed) meet every contract; involutions hold: {}", involutions.join(", ")))
}

fn metric_oracles() -> Outcome {
    let mut rng = SplitMix64::new(5);
    let classes = ["a", "b", "c", "d"];
    for _ in 0..100 {
        let n = 1 + rng.uniform(50);
        let gold: Vec<&str> = (0..n).map(|_| classes[rng.uniform(4)]).collect();
        let pred: Vec<&str> = (0..n).map(|_| classes[rng.uniform(4)]).collect();
        ensure!(micro_f1(&pred, &gold, &classes).unwrap() == accuracy(&pred, &gold).unwrap(), "micro F1 != accuracy");
    }
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    ensure!((r - 0.8).abs() < 1e-12, "pearson {r}");
    let p = student_t_two_tailed(2.262, 9.0);
    ensure!((p - 0.05).abs() <= 0.001, "t p-value {p}");
    for df in [1u32, 4, 9, 30] {
        for t in [0.5, 2.0, 4.0] {
            let (got, want) = (student_t_two_tailed(t, df as f64), t_pvalue_simpson(t, df));
            ensure!((got - want).abs() < 1e-7, "t df={df} t={t}: {got} vs {want}");
        }
    }
    let tt = paired_ttest(&[0.9, 0.8, 0.7, 0.85], &[0.88, 0.75, 0.69, 0.8]).map_err(|e| e.to_string())?;
    ensure!((tt.p_two_tailed - t_pvalue_simpson(tt.t, 3)).abs() < 1e-7, "paired t-test p-value");
    let mut checked = 0;
    while checked < 20 {
        let (subjects, raters) = (5 + rng.uniform(20), 2 + rng.uniform(6));
        let counts = random_matrix(&mut rng, subjects, raters, 3);
        let Ok(k) = fleiss_kappa(&RatingMatrix::new(counts.clone()).unwrap()) else { continue };
        ensure!((k - fleiss_by_pairs(&counts)).abs() < 1e-12, "fleiss {k} on {counts:?}");
        checked += 1;
    }
    Ok("micro F1 = accuracy (100 cases), Pearson 0.8, t(9, 2.262) p = 0.050, Fleiss matches pair counting (20)".into())
}

fn fixture_systems() -> Outcome {
    let cfg = |methods: Vec<Method>, pps: Vec<usize>| MatrixConfig {
        methods,
        pps,
        allow_unreviewed: true,
        ..MatrixConfig::new("synthetic")
    };
    // memorizer: perfect on clean, closed form on char-delete TI
    let m = Arc::new(Memorizer::new(corpus()));
    let conn = SystemAdapter::in_process(m, "memorizer").connect().map_err(|e| e.to_string())?;
    let out = run_matrix(&conn, corpus(), res(), &cfg(vec![Method::CharDelete], vec![1])).map_err(|e| e.to_string())?;
    ensure!(out.runs.iter().filter(|r| r.is_clean()).all(|r| r.score == Some(1.0)), "memorizer not perfect on clean");
    let set = perturb_corpus(corpus(), &PerturbationSpec::new(Method::CharDelete, 1, 42).unwrap(), res(), 0);
    let want = memorizer_ti_accuracy(corpus(), &set.perturbed);
    let ti = out.runs.iter().find(|r| r.task == Task::Ti && !r.is_clean()).ok_or("no TI run")?;
    ensure!(ti.score == Some(want), "memorizer TI {:?} vs closed form {want}", ti.score);

    // oracle: no loss on methods that keep the meaning
    let safe: Vec<Method> = Method::ALL.into_iter().filter(|m| !m.is_meaning_risk()).collect();
    let mut o = Oracle::new().with_samples(corpus());
    for &m in &safe {
        o = o.with_perturbed(&perturb_corpus(corpus(), &PerturbationSpec::new(m, 1, 42).unwrap(), res(), 0).perturbed);
    }
    let conn = SystemAdapter::in_process(Arc::new(o), "oracle").connect().map_err(|e| e.to_string())?;
    let out = run_matrix(&conn, corpus(), res(), &cfg(safe, vec![1])).map_err(|e| e.to_string())?;
    for r in &out.reports {
        ensure!(r.cells.iter().all(|c| c.decrease == Some(0.0)), "oracle lost score on {}", r.task);
    }

    // perceptron: graded degradation
    let conn = SystemAdapter::in_process(perceptron(), "perceptron").connect().map_err(|e| e.to_string())?;
    let pps = vec![1, 2, 3, 4];
    let out = run_matrix(&conn, corpus(), res(), &cfg(Method::ALL.to_vec(), pps.clone())).map_err(|e| e.to_string())?;
    let d = mean_decrease_by_pps(&out.reports, &pps);
    ensure!(d[0] > 0.0, "no decrease at PPS=1: {d:?}");
    ensure!(d.windows(2).all(|w| w[1] >= w[0]), "decrease not monotone: {d:?}");
    let shown: Vec<String> = d.iter().map(|v| format!("{:.2}", v * 100.0)).collect();
    Ok(format!(
        "memorizer TI {:.4} = closed form; oracle 0.00 on 12 methods; perceptron mean decrease by PPS {}",
        want,
        shown.join(" / ")
    ))
}

fn curation() -> Outcome {
    review_session()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("worked examples", golden_examples),
        ("published table recomputation", published_table),
        ("determinism", determinism),
        ("perturbation properties", perturbation_properties),
        ("metric oracles", metric_oracles),
        ("fixture systems", fixture_systems),
        ("review workflow", curation),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {} {name} ... PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name} ... FAIL ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
