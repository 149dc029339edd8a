#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use clinperturb::corpus::bio::is_well_formed;
use clinperturb::corpus::{detokenize, tokenize, EditLevel, Label, Payload, Sample, Task, TokenSeq};
use clinperturb::curation::server::RATER_HEADER;
use clinperturb::curation::{CurationServer, Store};
use clinperturb::harness::{
    run_matrix, EvalRun, HarnessError, MatrixConfig, Oracle, Perceptron, RobustnessReport, SystemAdapter,
};
use clinperturb::perturb::char_level::{self, LccMode};
use clinperturb::perturb::word_level::{self, ShuffleWindow};
use clinperturb::perturb::{perturb_corpus, perturb_sample, Method, PerturbationSpec, PerturbedSample};
use clinperturb::perturb::rng::SplitMix64;
use clinperturb::resources::Resources;
use clinperturb::synthetic;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde_json::{json, Value};

pub fn res() -> &'static Resources {
    static R: OnceLock<Resources> = OnceLock::new();
    R.get_or_init(Resources::bundled)
}

pub fn corpus() -> &'static [Sample] {
    static C: OnceLock<Vec<Sample>> = OnceLock::new();
    C.get_or_init(synthetic::bundled_test)
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

// ---- string distance oracles ----

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Optimal-string-alignment distance (adjacent transpositions cost 1).
pub fn damerau(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[a.len()][b.len()]
}

pub fn multiset<S: AsRef<str>>(items: &[S]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for s in items {
        *m.entry(s.as_ref().to_string()).or_insert(0) += 1;
    }
    m
}

/// Hand-written QWERTY adjacency, independent of the bundled table.
pub fn qwerty_adjacent(a: char, b: char) -> bool {
    const ROWS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];
    let pos = |c: char| {
        ROWS.iter().enumerate().find_map(|(r, row)| row.find(c.to_ascii_lowercase()).map(|i| (r as i32, i as i32)))
    };
    match (pos(a), pos(b)) {
        (Some((ra, ca)), Some((rb, cb))) if a != b => {
            // rows are offset by half a key; neighbours above sit at c, c+1 and below at c-1, c
            (ra == rb && (ca - cb).abs() == 1)
                || (rb == ra + 1 && (cb == ca || cb == ca - 1))
                || (rb == ra - 1 && (cb == ca || cb == ca + 1))
        }
        _ => false,
    }
}

// ---- golden rows ----

pub struct GoldenRow {
    pub method: Method,
    pub expected: String,
    pub got: Result<String, String>,
}

impl GoldenRow {
    pub fn ok(&self) -> bool {
        self.got.as_deref() == Ok(self.expected.as_str())
    }
}

fn idx(seq: &TokenSeq, word: &str) -> usize {
    seq.texts().iter().position(|t| t == word).unwrap_or_else(|| panic!("{word:?} not in sentence"))
}

fn choice_of(options: &[String], wanted: &str) -> usize {
    options.iter().position(|o| o == wanted).unwrap_or(usize::MAX)
}

/// Printed noisy sentences put a space before the final period.
fn printed(s: &str) -> String {
    s.replace(" .", ".")
}

fn sentence(text: &str, f: impl FnOnce(&TokenSeq) -> Result<word_level::WordEdit, clinperturb::perturb::ApplyError>) -> Result<String, String> {
    f(&tokenize(text)).map(|e| detokenize(&e.seq)).map_err(|e| e.to_string())
}

/// The published example rows, each rebuilt with its choices forced.
pub fn golden_rows() -> Vec<GoldenRow> {
    let r = res();
    let e = |x: Result<String, clinperturb::perturb::ApplyError>| x.map_err(|e| e.to_string());
    let mut rows = vec![
        GoldenRow { method: Method::CharDelete, expected: "speakng".into(), got: e(char_level::char_delete("speaking", 5)) },
        GoldenRow {
            method: Method::CharInsert,
            expected: "pataient".into(),
            got: e(char_level::char_insert("patient", 3, 'a')),
        },
        GoldenRow {
            method: Method::Lcc,
            expected: "NASAL".into(),
            got: e(char_level::letter_case_change("nasal", LccMode::All)),
        },
        GoldenRow {
            method: Method::Cmw,
            expected: "pacemkaer".into(),
            got: {
                let opts = r.misspellings.lookup("pacemaker").unwrap_or(&[]);
                e(char_level::misspell("pacemaker", choice_of(opts, "pacemkaer"), &r.misspellings))
            },
        },
        GoldenRow {
            method: Method::CharReplace,
            expected: "metastasos".into(),
            got: e(char_level::char_replace("metastasis", 8, 'o', &r.keyboard)),
        },
        GoldenRow { method: Method::CharSwap, expected: "fuond".into(), got: e(char_level::char_swap("found", 1)) },
    ];
    // Repetition: every position of the printed word, against the rule.
    let word = "abdominal";
    let chars: Vec<char> = word.chars().collect();
    let mut rep = Ok(String::new());
    for i in 0..chars.len() {
        let oracle: String = chars[..=i].iter().chain(std::iter::once(&chars[i])).chain(&chars[i + 1..]).collect();
        match char_level::char_repeat(word, i) {
            Ok(got) if got == oracle => {}
            Ok(got) => {
                rep = Err(format!("idx {i}: {got} != {oracle}"));
                break;
            }
            Err(err) => {
                rep = Err(err.to_string());
                break;
            }
        }
    }
    rows.push(GoldenRow {
        method: Method::CharRepeat,
        expected: "rule".into(),
        got: rep.map(|_| "rule".into()),
    });

    let sob = "He denies any shortness of breath or difficulty breathing.";
    let gi = "The patient has symptoms of a GI condition.";
    let acutely = "That day, he was found to be acutely short of breath with a respiratory rate of 40.";
    let neg = "She subsequently developed hypotension with SBP in the 70s.";
    let order = "This therapist fit the patient with the orthosis listed in the Treatment Plan.";
    let seizure = "Subsequently EEG was noted to have no seizure activity.";
    let rws = "Patient had some discomfort but was able to tolerate procedure.";
    let spv = "The patient has been given a stool softener (Senokot).";
    let tense = "Initial evaluation revealed corticate posturing was noted by the trauma team.";
    rows.extend([
        GoldenRow {
            method: Method::Rwa,
            expected: "He denies any SOB or difficulty breathing.".into(),
            got: sentence(sob, |s| {
                let i = idx(s, "shortness");
                let opts = r.abbreviations.abbreviations_of(&s.texts()[i..i + 3]).unwrap_or(&[]);
                word_level::replace_with_abbreviation(s, i, 3, choice_of(opts, "SOB"), &r.abbreviations)
            }),
        },
        GoldenRow {
            method: Method::Ae,
            expected: "The patient has symptoms of a gastrointestinal condition.".into(),
            got: sentence(gi, |s| {
                let opts = r.abbreviations.expansions_of("GI");
                let c = opts.iter().position(|p| p.phrase == "gastrointestinal").unwrap_or(usize::MAX);
                word_level::expand_abbreviation(s, idx(s, "GI"), c, &r.abbreviations)
            }),
        },
        GoldenRow {
            method: Method::WordDelete,
            expected: "That day, he was found to be short of breath with a respiratory rate of 40.".into(),
            got: sentence(acutely, |s| word_level::word_delete(s, idx(s, "acutely"))),
        },
        GoldenRow {
            method: Method::Negation,
            expected: "She subsequently did not develop hypotension with SBP in the 70s.".into(),
            got: sentence(neg, |s| word_level::negation_perturb(s, &r.verbs)),
        },
        GoldenRow {
            method: Method::WordOrder,
            expected: printed("This therapist fit the patient with the orthosis in the Plan Treatment listed ."),
            got: sentence(order, |s| {
                word_level::shuffle_window(s, &ShuffleWindow { start: idx(s, "listed"), perm: vec![1, 2, 4, 3, 0] })
            }),
        },
        GoldenRow {
            method: Method::WordRepeat,
            expected: "Subsequently EEG was noted to have no seizure seizure activity.".into(),
            got: sentence(seizure, |s| word_level::word_repeat(s, idx(s, "seizure"))),
        },
        GoldenRow {
            method: Method::Rws,
            expected: printed("Patient had some discomfort but was able to tolerate therapy ."),
            got: sentence(rws, |s| {
                let opts = r.synonyms.lookup("procedure").unwrap_or(&[]);
                word_level::replace_with_synonym(s, idx(s, "procedure"), choice_of(opts, "therapy"), &r.synonyms)
            }),
        },
        GoldenRow {
            method: Method::Spv,
            expected: "The patient have been given a stool softener (Senokot).".into(),
            got: sentence(spv, |s| word_level::spv_perturb(s, &r.verbs)),
        },
        GoldenRow {
            method: Method::VerbTense,
            expected: "Initial evaluation reveals corticate posturing was noted by the trauma team.".into(),
            got: sentence(tense, |s| word_level::tense_perturb(s, &r.verbs)),
        },
    ]);
    rows
}

// ---- published score fixture ----

pub const SYSTEMS: [&str; 3] = ["bert", "xlnet", "elmo"];

pub struct Published {
    /// [system][task] in percent
    pub clean: [[f64; 4]; 3],
    pub rows: Vec<(Method, [[f64; 4]; 3])>,
    /// Edit level of each row, as listed in the fixture.
    pub levels: Vec<EditLevel>,
    /// (level, task, [system]) printed PPS=1 changes
    pub deltas: Vec<(EditLevel, Task, [f64; 3])>,
}

fn grid(cols: &[&str]) -> [[f64; 4]; 3] {
    let mut g = [[0.0; 4]; 3];
    for (i, c) in cols.iter().enumerate() {
        g[i / 4][i % 4] = c.parse().expect("number");
    }
    g
}

fn data_lines(name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(data_path(name))
        .expect("fixture")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

pub fn published() -> Published {
    let mut clean = [[0.0; 4]; 3];
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for cols in data_lines("published_scores.tsv") {
        let refs: Vec<&str> = cols[2..].iter().map(String::as_str).collect();
        if cols[0] == "clean" {
            clean = grid(&refs);
        } else {
            rows.push((cols[0].parse().expect("method"), grid(&refs)));
            levels.push(if cols[1] == "char" { EditLevel::Char } else { EditLevel::Word });
        }
    }
    let deltas = data_lines("published_deltas.tsv")
        .into_iter()
        .map(|c| {
            let level = if c[0] == "char" { EditLevel::Char } else { EditLevel::Word };
            (level, c[1].parse().expect("task"), [c[2].parse().unwrap(), c[3].parse().unwrap(), c[4].parse().unwrap()])
        })
        .collect();
    Published { clean, rows, levels, deltas }
}

impl Published {
    /// Mean PPS=1 change against clean, in points, straight from the fixture.
    pub fn mean_change(&self, system: usize, task: Task, level: EditLevel) -> f64 {
        let t = task_index(task);
        let xs: Vec<f64> =
            self.rows.iter().zip(&self.levels).filter(|(_, l)| **l == level).map(|((_, g), _)| g[system][t]).collect();
        xs.iter().sum::<f64>() / xs.len() as f64 - self.clean[system][t]
    }
}

pub fn task_index(t: Task) -> usize {
    Task::ALL.iter().position(|x| *x == t).unwrap()
}

/// EvalRuns encoding one system × task column of the fixture at PPS=1.
pub fn fixture_runs(p: &Published, system: usize, task: Task) -> Vec<EvalRun> {
    let t = task_index(task);
    let run = |method: &str, pps: usize, score: f64| EvalRun {
        system: SYSTEMS[system].into(),
        dataset: "published".into(),
        task,
        method: method.into(),
        pps,
        score: Some(score / 100.0),
        undefined: None,
        n_scored: 1,
        n_not_applicable: 0,
        n_excluded_by_review: 0,
    };
    let mut runs = vec![run("clean", 0, p.clean[system][t])];
    runs.extend(p.rows.iter().map(|(m, g)| run(m.name(), 1, g[system][t])));
    runs
}

// ---- memorizer closed form ----

fn fields(s: &Sample) -> Vec<String> {
    match &s.payload {
        Payload::Ner { tokens, .. } => tokens.clone(),
        Payload::Re { text, entities, .. } => {
            let mut v = vec![text.clone()];
            v.extend(entities.iter().map(|e| format!("{}:{}:{}", e.start, e.end, e.ty)));
            v
        }
        Payload::Ti { premise, hypothesis, .. } => vec![premise.clone(), hypothesis.clone()],
        Payload::Ss { sentence1, sentence2, .. } => vec![sentence1.clone(), sentence2.clone()],
    }
}

fn label_key(l: &Label) -> String {
    serde_json::to_string(&l.to_json()).unwrap()
}

/// Accuracy a memorizer should reach on the perturbed TI set: each noisy
/// input scores iff its exact text is in the clean set with the same gold,
/// or the majority clean label (ties to the smallest) equals the gold.
pub fn memorizer_ti_accuracy(clean: &[Sample], perturbed: &[PerturbedSample]) -> f64 {
    let ti: Vec<&Sample> = clean.iter().filter(|s| s.task() == Task::Ti).collect();
    let table: HashMap<Vec<String>, String> = ti.iter().map(|s| (fields(s), label_key(&s.gold()))).collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &ti {
        *counts.entry(label_key(&s.gold())).or_default() += 1;
    }
    let best = counts.values().max().copied().unwrap_or(0);
    let majority = counts.iter().find(|(_, c)| **c == best).map(|(k, _)| k.clone()).unwrap_or_default();
    let set: Vec<&PerturbedSample> = perturbed.iter().filter(|p| p.noisy.task() == Task::Ti).collect();
    let hits = set
        .iter()
        .filter(|p| {
            let pred = table.get(&fields(&p.noisy)).cloned().unwrap_or_else(|| majority.clone());
            pred == label_key(&p.noisy.gold())
        })
        .count();
    hits as f64 / set.len() as f64
}

// ---- engine property suite ----

fn text_fields(s: &Sample) -> Vec<(String, String)> {
    match &s.payload {
        Payload::Ner { tokens, .. } => vec![("tokens".into(), tokens.join(" "))],
        Payload::Re { text, .. } => vec![("text".into(), text.clone())],
        Payload::Ti { premise, hypothesis, .. } => {
            vec![("premise".into(), premise.clone()), ("hypothesis".into(), hypothesis.clone())]
        }
        Payload::Ss { sentence1, sentence2, .. } => {
            vec![("sentence1".into(), sentence1.clone()), ("sentence2".into(), sentence2.clone())]
        }
    }
}

fn words_of(text: &str) -> Vec<String> {
    tokenize(text).texts()
}

/// Checks one perturbed sample against the per-method contracts.
pub fn check_perturbed(orig: &Sample, p: &PerturbedSample, pps: usize) -> Result<(), String> {
    let m = p.method;
    if p.pps_applied > pps || p.pps_applied != p.edits.len() || p.pps_applied == 0 {
        return Err(format!("budget: applied {} edits {} of {pps}", p.pps_applied, p.edits.len()));
    }
    if p.edits.iter().any(|e| e.method != m.name() || e.level != m.level()) {
        return Err("mixed methods in one sample".into());
    }
    if p.meaning_risk != matches!(m, Method::WordDelete | Method::Negation | Method::WordOrder | Method::Rws) {
        return Err("meaning-risk flag".into());
    }
    if p.noisy.id != orig.id {
        return Err("id changed".into());
    }
    if let Payload::Ner { tokens, labels } = &p.noisy.payload {
        if tokens.len() != labels.len() || !is_well_formed(labels) {
            return Err(format!("NER labels {labels:?} for {tokens:?}"));
        }
    }
    for e in &p.edits {
        let ok = match m {
            Method::CharDelete | Method::CharInsert | Method::CharRepeat | Method::CharReplace => {
                levenshtein(&e.before, &e.after) == 1
            }
            Method::CharSwap => damerau(&e.before, &e.after) == 1 && levenshtein(&e.before, &e.after) == 2,
            Method::Lcc => e.before.to_lowercase() == e.after.to_lowercase() && e.before != e.after,
            Method::Cmw => res()
                .misspellings
                .lookup(&e.before)
                .is_some_and(|v| v.iter().any(|x| x.eq_ignore_ascii_case(&e.after))),
            _ => e.before != e.after,
        };
        if !ok {
            return Err(format!("edit {:?} -> {:?}", e.before, e.after));
        }
        if m == Method::CharReplace {
            let (b, a): (Vec<char>, Vec<char>) = (e.before.chars().collect(), e.after.chars().collect());
            let diff: Vec<usize> = (0..b.len()).filter(|&i| b[i] != a[i]).collect();
            if diff.len() != 1 || !qwerty_adjacent(b[diff[0]], a[diff[0]]) {
                return Err(format!("replacement {:?} -> {:?} is not a keyboard neighbour", e.before, e.after));
            }
        }
    }
    // field-level contracts
    let before = text_fields(orig);
    let after = text_fields(&p.noisy);
    let changed: Vec<usize> = (0..before.len()).filter(|&i| before[i].1 != after[i].1).collect();
    if changed.is_empty() {
        return Err("text unchanged".into());
    }
    let per_field = |i: usize| p.edits.iter().filter(|e| e.field == before[i].0).count();
    for &i in &changed {
        let (wb, wa) = (words_of(&before[i].1), words_of(&after[i].1));
        let k = per_field(i);
        let ok = match m {
            Method::WordOrder => multiset(&wb) == multiset(&wa) && wb != wa,
            Method::WordDelete => wa.len() + k == wb.len(),
            Method::WordRepeat => wa.len() == wb.len() + k,
            Method::Lcc => before[i].1.to_lowercase() == after[i].1.to_lowercase(),
            Method::CharSwap => levenshtein(&before[i].1, &after[i].1) <= 2 * k,
            Method::CharDelete | Method::CharInsert | Method::CharRepeat | Method::CharReplace => {
                levenshtein(&before[i].1, &after[i].1) <= k
            }
            _ => true,
        };
        if !ok {
            return Err(format!("{}: {:?} -> {:?}", before[i].0, before[i].1, after[i].1));
        }
    }
    Ok(())
}

/// Runs `cases` random (sample, seed, pps) draws through the engine and
/// checks every contract; returns how many were perturbed.
pub fn engine_suite(method: Method, cases: usize, seed: u64) -> Result<usize, String> {
    let c = corpus();
    let mut rng = SplitMix64::new(seed ^ method as u64);
    let mut applied = 0;
    for _ in 0..cases {
        let s = &c[rng.uniform(c.len())];
        let pps = 1 + rng.uniform(4);
        let spec = PerturbationSpec::new(method, pps, rng.next_u64()).unwrap();
        let first = perturb_sample(s, &spec, res());
        if first != perturb_sample(s, &spec, res()) {
            return Err(format!("{}: nondeterministic", s.id));
        }
        if let Ok(p) = first {
            check_perturbed(s, &p, pps).map_err(|e| format!("{} {method} pps={pps}: {e}", s.id))?;
            applied += 1;
        }
    }
    Ok(applied)
}

/// Clause-level methods undo themselves on the sentences they apply to.
pub fn involution_suite(method: Method) -> Result<usize, String> {
    let lex = &res().verbs;
    let apply = |seq: &TokenSeq| match method {
        Method::Negation => word_level::negation_perturb(seq, lex),
        Method::Spv => word_level::spv_perturb(seq, lex),
        Method::VerbTense => word_level::tense_perturb(seq, lex),
        _ => unreachable!(),
    };
    let mut n = 0;
    for s in corpus() {
        for (_, text) in text_fields(s) {
            let seq = tokenize(&text);
            let Ok(once) = apply(&seq) else { continue };
            let twice = apply(&once.seq).map_err(|e| format!("{text:?}: second application failed: {e}"))?;
            if detokenize(&twice.seq) != text {
                return Err(format!("{text:?} -> {:?} -> {:?}", detokenize(&once.seq), detokenize(&twice.seq)));
            }
            n += 1;
        }
    }
    Ok(n)
}

// ---- metric oracles ----

/// Γ(n/2) for a positive integer n, by exact recursion from Γ(1) and Γ(1/2).
pub fn gamma_half(n: u32) -> f64 {
    match n {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => (n as f64 / 2.0 - 1.0) * gamma_half(n - 2),
    }
}

/// Two-tailed Student t p-value by composite Simpson integration of the
/// density over [0, |t|].
pub fn t_pvalue_simpson(t: f64, df: u32) -> f64 {
    let v = df as f64;
    let c = gamma_half(df + 1) / ((v * std::f64::consts::PI).sqrt() * gamma_half(df));
    let f = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
    let n = 20_000;
    let h = t.abs() / n as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

/// Fleiss' kappa by explicit enumeration of rater pairs.
pub fn fleiss_by_pairs(counts: &[Vec<usize>]) -> f64 {
    let mut agree_pairs = 0.0;
    let mut pairs = 0.0;
    let k = counts[0].len();
    let mut totals = vec![0usize; k];
    for row in counts {
        let ratings: Vec<usize> = row.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let mut a = 0usize;
        let mut p = 0usize;
        for i in 0..ratings.len() {
            for j in 0..ratings.len() {
                if i != j {
                    p += 1;
                    a += usize::from(ratings[i] == ratings[j]);
                }
            }
        }
        agree_pairs += a as f64 / p as f64;
        pairs += 1.0;
        for &r in &ratings {
            totals[r] += 1;
        }
    }
    let observed = agree_pairs / pairs;
    let all: usize = totals.iter().sum();
    let expected: f64 = totals.iter().map(|&t| (t as f64 / all as f64).powi(2)).sum();
    (observed - expected) / (1.0 - expected)
}

/// Random rating matrix with `raters` ratings per subject.
pub fn random_matrix(rng: &mut SplitMix64, subjects: usize, raters: usize, categories: usize) -> Vec<Vec<usize>> {
    (0..subjects)
        .map(|_| {
            let mut row = vec![0; categories];
            for _ in 0..raters {
                row[rng.uniform(categories)] += 1;
            }
            row
        })
        .collect()
}

// ---- harness helpers ----

pub fn perceptron() -> Arc<Perceptron> {
    static P: OnceLock<Arc<Perceptron>> = OnceLock::new();
    P.get_or_init(|| Arc::new(Perceptron::train(&synthetic::bundled_train()))).clone()
}

/// Shell command running the built binary's fixture subcommand.
pub fn fixture_command(kind: &str) -> String {
    format!("'{}' fixture {kind}", env!("CARGO_BIN_EXE_clinperturb"))
}

/// Mean decrease over every task and level of `reports`, per pps.
pub fn mean_decrease_by_pps(reports: &[RobustnessReport], pps: &[usize]) -> Vec<f64> {
    pps.iter()
        .map(|&k| {
            let d: Vec<f64> = reports
                .iter()
                .flat_map(|r| [EditLevel::Char, EditLevel::Word].map(|l| r.cell(l, k).and_then(|c| c.decrease)))
                .flatten()
                .collect();
            d.iter().sum::<f64>() / d.len() as f64
        })
        .collect()
}

// ---- curation API client ----

pub struct Api {
    agent: ureq::Agent,
    pub base: String,
}

pub struct ApiReply {
    pub status: u16,
    pub body: String,
}

impl ApiReply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or(Value::Null)
    }
}

impl Api {
    pub fn new(base: &str) -> Api {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Api { agent, base: base.trim_end_matches('/').to_string() }
    }

    pub fn get(&self, path: &str) -> ApiReply {
        let mut r = self.agent.get(format!("{}{path}", self.base)).call().expect("GET");
        ApiReply { status: r.status().as_u16(), body: r.body_mut().read_to_string().expect("body") }
    }

    pub fn post(&self, path: &str, rater: Option<&str>, body: &Value) -> ApiReply {
        let mut req = self.agent.post(format!("{}{path}", self.base)).header("Content-Type", "application/json");
        if let Some(r) = rater {
            req = req.header(RATER_HEADER, r);
        }
        let mut r = req.send(body.to_string()).expect("POST");
        ApiReply { status: r.status().as_u16(), body: r.body_mut().read_to_string().expect("body") }
    }
}

pub fn sample_path(key: &str) -> String {
    format!("/api/samples/{}", utf8_percent_encode(key, NON_ALPHANUMERIC))
}

/// A label the oracle's answer cannot match.
pub fn flipped(l: &Label) -> Label {
    match l {
        Label::Class(c) if c == "contradiction" => Label::Class("entailment".into()),
        Label::Class(_) => Label::Class("contradiction".into()),
        other => other.clone(),
    }
}

/// Scripted review of 50 meaning-risk samples over HTTP: 10 excluded,
/// 5 relabeled, 35 accepted; then checks quota, export and the scoring gate.
/// Returns a one-line summary.
pub fn review_session() -> Result<String, String> {
    macro_rules! ensure {
        ($c:expr, $($t:tt)*) => { if !$c { return Err(format!($($t)*)); } };
    }
    let spec = PerturbationSpec::new(Method::Negation, 1, 42).unwrap();
    let all = perturb_corpus(corpus(), &spec, res(), 0).perturbed;
    // round-robin over tasks so every task is represented
    let mut by_task: BTreeMap<Task, std::collections::VecDeque<PerturbedSample>> = BTreeMap::new();
    for p in all {
        by_task.entry(p.noisy.task()).or_default().push_back(p);
    }
    let mut fifty = Vec::new();
    while fifty.len() < 50 {
        for q in by_task.values_mut() {
            if let Some(p) = q.pop_front().filter(|_| fifty.len() < 50) {
                fifty.push(p);
            }
        }
    }
    let ids: BTreeSet<&str> = fifty.iter().map(|p| p.original_id()).collect();
    let originals: Vec<Sample> = corpus().iter().filter(|s| ids.contains(s.id.as_str())).cloned().collect();
    ensure!(originals.len() == 50, "expected 50 originals, got {}", originals.len());

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let server = CurationServer::start(Store::open(dir.path()).map_err(|e| e.to_string())?, "127.0.0.1:0", None)
        .map_err(|e| e.to_string())?;
    let api = Api::new(&server.url);
    let enq = api.post(
        "/api/enqueue",
        None,
        &json!({
            "dataset": "synthetic",
            "samples": fifty.iter().map(PerturbedSample::to_json).collect::<Vec<_>>(),
            "originals": originals.iter().map(Sample::to_json).collect::<Vec<_>>(),
        }),
    );
    ensure!(enq.status == 200 && enq.json()["pending"] == 50, "enqueue: {} {}", enq.status, enq.body);
    let queue = api.get("/api/queue?method=negation&dataset=synthetic").json();
    ensure!(queue["count"] == 50, "queue count {}", queue["count"]);

    // the oracle answers with the unreviewed gold
    let oracle = Arc::new(Oracle::new().with_samples(&originals).with_perturbed(&fifty));
    let conn = SystemAdapter::in_process(oracle, "oracle").connect().map_err(|e| e.to_string())?;
    let cfg = |reviews| MatrixConfig {
        methods: vec![Method::Negation],
        pps: vec![1],
        reviews,
        ..MatrixConfig::new("synthetic")
    };
    let reviews = || server.store.read().unwrap().reviews();
    match run_matrix(&conn, &originals, res(), &cfg(reviews())) {
        Err(HarnessError::ReviewGate { pending: 50, .. }) => {}
        other => return Err(format!("gate did not refuse 50 pending samples: {:?}", other.map(|o| o.runs.len()))),
    }

    let ti: Vec<&PerturbedSample> = fifty.iter().filter(|p| p.noisy.task() == Task::Ti).collect();
    ensure!(ti.len() >= 5, "only {} TI samples", ti.len());
    let relabel: BTreeMap<String, Label> = ti[..5].iter().map(|p| (p.key(), flipped(&p.noisy.gold()))).collect();
    let exclude: BTreeSet<String> =
        fifty.iter().map(|p| p.key()).filter(|k| !relabel.contains_key(k)).take(10).collect();
    for p in &fifty {
        let key = p.key();
        let body = if let Some(l) = relabel.get(&key) {
            json!({ "status": "relabeled", "revised_label": l.to_json(), "revision": 0 })
        } else if exclude.contains(&key) {
            json!({ "status": "excluded", "note": "meaning changed", "revision": 0 })
        } else {
            json!({ "status": "accepted", "revision": 0 })
        };
        let r = api.post(&format!("{}/decision", sample_path(&key)), Some("reviewer-a"), &body);
        ensure!(r.status == 200, "decision for {key}: {} {}", r.status, r.body);
    }

    let q = api.get("/api/progress?method=negation&dataset=synthetic").json();
    ensure!(
        q["count"] == 40 && q["target"] == 200 && q["remaining"] == 160 && q["pending"] == 0,
        "quota view {q}"
    );
    let export = api.get("/api/export?method=negation&dataset=synthetic");
    let lines: Vec<PerturbedSample> = export
        .body
        .lines()
        .map(|l| PerturbedSample::from_json(serde_json::from_str(l).unwrap()).unwrap())
        .collect();
    ensure!(lines.len() == 40, "export has {} samples", lines.len());
    let revised: Vec<&PerturbedSample> = lines.iter().filter(|p| p.review.revised_label.is_some()).collect();
    ensure!(revised.len() == 5, "export has {} revised labels", revised.len());
    for p in &revised {
        ensure!(p.review.revised_label.as_ref() == relabel.get(&p.key()), "wrong revised label on {}", p.key());
        ensure!(p.scoring_label() == relabel[&p.key()], "scoring label ignores the revision on {}", p.key());
    }
    ensure!(lines.iter().all(|p| !exclude.contains(&p.key())), "export contains an excluded sample");

    let out = run_matrix(&conn, &originals, res(), &cfg(reviews())).map_err(|e| format!("gate after review: {e}"))?;
    let kept_ti = ti.iter().filter(|p| !exclude.contains(&p.key())).count();
    let run = out.runs.iter().find(|r| r.task == Task::Ti && !r.is_clean()).ok_or("no TI run")?;
    let want = (kept_ti - 5) as f64 / kept_ti as f64;
    ensure!(run.score == Some(want), "TI score {:?}, expected {want}", run.score);
    let excluded: usize = out.runs.iter().map(|r| r.n_excluded_by_review).sum();
    let scored: usize = out.runs.iter().filter(|r| !r.is_clean()).map(|r| r.n_scored).sum();
    ensure!(excluded == 10 && scored == 40, "scored {scored}, excluded {excluded}");
    Ok(format!("50 reviewed, export 40 (5 relabeled), quota 40/200, TI {:.4} with revised labels", want))
}
