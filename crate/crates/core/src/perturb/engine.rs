//! Seeded orchestration: draws targets and choices, applies up to `pps`
//! edits of one method, and records provenance.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::bio::apply_op;
use crate::corpus::sample::{read_jsonl, write_lines};
use crate::corpus::{
    detokenize, tokenize, BioTag, CorpusError, Edit, EntityMention, Label, Location, Payload, RecordError,
    Sample, TokenKind, TokenOp, TokenSeq,
};
use crate::resources::Resources;

use super::char_level::{self, swap_positions, LccMode};
use super::rng::{sample_seed, SplitMix64};
use super::word_level::{self, ShuffleWindow, WordEdit};
use super::{ApplyError, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub method: Method,
    pub pps: usize,
    pub global_seed: u64,
}

impl PerturbationSpec {
    pub fn new(method: Method, pps: usize, global_seed: u64) -> Result<Self, String> {
        if pps == 0 {
            return Err("pps must be at least 1".into());
        }
        Ok(PerturbationSpec { method, pps, global_seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewStatus {
    NotRequired,
    Pending,
    Accepted,
    Relabeled,
    Excluded,
}

impl ReviewStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewStatus::NotRequired => "not-required",
            ReviewStatus::Pending => "pending",
            ReviewStatus::Accepted => "accepted",
            ReviewStatus::Relabeled => "relabeled",
            ReviewStatus::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub status: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised_label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSample {
    /// The noisy sample: same id and extra keys as the original, perturbed
    /// inputs, gold label realigned where tokens moved.
    pub noisy: Sample,
    pub method: Method,
    pub pps_requested: usize,
    pub pps_applied: usize,
    pub global_seed: u64,
    pub edits: Vec<Edit>,
    pub meaning_risk: bool,
    pub review: Review,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{id}: {method} not applicable ({reason})")]
pub struct NotApplicable {
    pub id: String,
    pub method: Method,
    pub reason: String,
}

impl PerturbedSample {
    pub fn original_id(&self) -> &str {
        &self.noisy.id
    }

    /// Stable key of this perturbation: sample, method, budget and seed.
    pub fn key(&self) -> String {
        format!("{}@{}.p{}.s{}", self.noisy.id, self.method, self.pps_requested, self.global_seed)
    }

    /// Label to score against: the reviewer's revision if there is one.
    pub fn scoring_label(&self) -> Label {
        self.review.revised_label.clone().unwrap_or_else(|| self.noisy.gold())
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.noisy.to_json();
        let m = v.as_object_mut().expect("samples are objects");
        m.insert(
            "perturbation".into(),
            json!({
                "original_id": self.noisy.id,
                "method": self.method,
                "pps_requested": self.pps_requested,
                "pps_applied": self.pps_applied,
                "seed": self.global_seed,
                "meaning_risk": self.meaning_risk,
                "edits": self.edits,
            }),
        );
        m.insert("review".into(), serde_json::to_value(&self.review).expect("review"));
        v
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("perturbed samples serialize")
    }

    pub fn from_json(value: Value) -> Result<Self, RecordError> {
        let Value::Object(mut m) = value else {
            return Err(RecordError::new("record", "expected a JSON object"));
        };
        let pert = m.shift_remove("perturbation").ok_or_else(|| RecordError::new("perturbation", "missing"))?;
        let review = m.shift_remove("review").ok_or_else(|| RecordError::new("review", "missing"))?;
        let noisy = Sample::from_json(Value::Object(m))?;

        #[derive(Deserialize)]
        struct Meta {
            method: Method,
            pps_requested: usize,
            pps_applied: usize,
            seed: u64,
            meaning_risk: bool,
            edits: Vec<Edit>,
        }
        let meta: Meta = serde_json::from_value(pert).map_err(|e| RecordError::new("perturbation", e.to_string()))?;
        #[derive(Deserialize)]
        struct RawReview {
            status: ReviewStatus,
            #[serde(default)]
            revised_label: Option<Value>,
        }
        let raw: RawReview = serde_json::from_value(review).map_err(|e| RecordError::new("review", e.to_string()))?;
        let revised_label = match raw.revised_label {
            None | Some(Value::Null) => None,
            Some(v) => {
                let label = Label::from_json(noisy.task(), &v).map_err(|e| RecordError::new("review", e))?;
                label.validate_for(noisy.task()).map_err(|e| RecordError::new("review", e))?;
                Some(label)
            }
        };
        if meta.pps_applied != meta.edits.len() {
            return Err(RecordError::new("perturbation", "pps_applied differs from the number of edits"));
        }
        Ok(PerturbedSample {
            noisy,
            method: meta.method,
            pps_requested: meta.pps_requested,
            pps_applied: meta.pps_applied,
            global_seed: meta.seed,
            edits: meta.edits,
            meaning_risk: meta.meaning_risk,
            review: Review { status: raw.status, revised_label },
        })
    }
}

/// Token range of an RE entity plus its byte offsets inside the edge tokens.
#[derive(Debug, Clone)]
struct EntityAnchor {
    first: usize,
    last: usize,
    lead: usize,
    trail: usize,
    ty: String,
}

struct Field {
    name: &'static str,
    seq: TokenSeq,
    touched: Vec<bool>,
    clause_done: bool,
    labels: Option<Vec<BioTag>>,
    entities: Vec<EntityAnchor>,
}

impl Field {
    fn new(name: &'static str, seq: TokenSeq) -> Self {
        let touched = vec![false; seq.len()];
        Field { name, seq, touched, clause_done: false, labels: None, entities: Vec::new() }
    }

    /// A structural edit over `s..e` may not straddle an entity boundary.
    fn span_ok(&self, s: usize, e: usize) -> bool {
        self.entities
            .iter()
            .all(|a| e <= a.first || s > a.last || (a.first <= s && e <= a.last + 1))
    }

    fn in_entity(&self, i: usize) -> bool {
        self.entities.iter().any(|a| (a.first..=a.last).contains(&i))
    }

    fn untouched(&self, s: usize, e: usize) -> bool {
        !self.touched[s..e].iter().any(|&t| t)
    }

    fn commit(&mut self, seq: TokenSeq, op: &TokenOp) {
        let origins = op.origins(self.seq.len());
        let mut touched: Vec<bool> = origins.iter().map(|o| o.is_none_or(|i| self.touched[i])).collect();
        let fresh = match op {
            TokenOp::Substitute { index } => *index..index + 1,
            TokenOp::Delete { .. } => 0..0,
            TokenOp::Duplicate { index } => *index..index + 2,
            TokenOp::Reorder { start, perm } => *start..start + perm.len(),
            TokenOp::Splice { start, inserted, .. } => *start..start + inserted,
        };
        for t in &mut touched[fresh] {
            *t = true;
        }
        for a in &mut self.entities {
            let inside: Vec<usize> = origins
                .iter()
                .enumerate()
                .filter(|(_, o)| o.is_some_and(|i| (a.first..=a.last).contains(&i)))
                .map(|(p, _)| p)
                .collect();
            if let (Some(&f), Some(&l)) = (inside.first(), inside.last()) {
                a.first = f;
                a.last = l;
            }
        }
        if let Some(labels) = &mut self.labels {
            apply_op(labels, op).expect("ops produced by the engine are in range");
        }
        self.seq = seq;
        self.touched = touched;
    }
}

enum Target {
    Token(usize),
    Phrase { start: usize, len: usize },
    Window,
    Clause(WordEdit),
}

fn letter_count(s: &str) -> usize {
    s.chars().count()
}

fn all_caps(s: &str) -> bool {
    s.chars().any(char::is_alphabetic) && s.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase)
}

/// Window lengths and starts available to word-order in the current field.
fn windows(field: &Field) -> Vec<(usize, Vec<usize>)> {
    let seq = &field.seq;
    let n = seq.len();
    if seq.word_count() < 3 || n < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for m in 2..n {
        let starts: Vec<usize> = (0..=n - m)
            .filter(|&s| {
                let w = &seq.tokens[s..s + m];
                field.untouched(s, s + m)
                    && w.iter().all(|t| t.kind != TokenKind::Punctuation)
                    && w.iter().any(|t| t.text != w[0].text)
                    && field.span_ok(s, s + m)
            })
            .collect();
        if !starts.is_empty() {
            out.push((m, starts));
        }
    }
    out
}

fn targets(method: Method, field: &Field, res: &Resources) -> Vec<Target> {
    let seq = &field.seq;
    let free = |i: usize| !field.touched[i];
    let char_targets = || (0..seq.len()).filter(move |&i| free(i) && seq.tokens[i].is_char_target());
    let words = || (0..seq.len()).filter(move |&i| free(i) && seq.tokens[i].is_word());
    let text = |i: usize| seq.tokens[i].text.as_str();
    let tokens = |v: Vec<usize>| v.into_iter().map(Target::Token).collect();
    match method {
        Method::CharDelete => tokens(char_targets().filter(|&i| letter_count(text(i)) >= 3).collect()),
        Method::CharInsert | Method::CharRepeat => tokens(char_targets().filter(|&i| letter_count(text(i)) >= 2).collect()),
        Method::Lcc => tokens(char_targets().filter(|&i| text(i).chars().any(|c| c.is_uppercase() || c.is_lowercase())).collect()),
        Method::Cmw => tokens(char_targets().filter(|&i| res.misspellings.lookup(text(i)).is_some()).collect()),
        Method::CharReplace => tokens(char_targets().filter(|&i| text(i).chars().any(|c| c.is_ascii_alphabetic())).collect()),
        Method::CharSwap => tokens(char_targets().filter(|&i| !swap_positions(text(i)).is_empty()).collect()),
        Method::Rwa => {
            let texts = seq.texts();
            let mut out = Vec::new();
            let mut i = 0;
            while i < seq.len() {
                let max = res.abbreviations.max_phrase_len().min(seq.len() - i);
                let hit = (1..=max).rev().find(|&len| {
                    field.untouched(i, i + len)
                        && field.span_ok(i, i + len)
                        && res.abbreviations.abbreviations_of(&texts[i..i + len]).is_some()
                });
                match hit {
                    Some(len) => {
                        out.push(Target::Phrase { start: i, len });
                        i += len;
                    }
                    None => i += 1,
                }
            }
            out
        }
        Method::Ae => tokens(
            (0..seq.len())
                .filter(|&i| free(i) && all_caps(text(i)) && !res.abbreviations.expansions_of(text(i)).is_empty())
                .collect(),
        ),
        Method::WordDelete => {
            if seq.word_count() < 2 {
                return Vec::new();
            }
            tokens(words().filter(|&i| !field.in_entity(i)).collect())
        }
        Method::WordRepeat => tokens(words().collect()),
        Method::Rws => tokens(words().filter(|&i| res.synonyms.lookup(text(i)).is_some()).collect()),
        Method::WordOrder => {
            if windows(field).is_empty() {
                Vec::new()
            } else {
                vec![Target::Window]
            }
        }
        Method::Negation | Method::Spv | Method::VerbTense => {
            if field.clause_done {
                return Vec::new();
            }
            let edit = match method {
                Method::Negation => word_level::negation_perturb(seq, &res.verbs),
                Method::Spv => word_level::spv_perturb(seq, &res.verbs),
                _ => word_level::tense_perturb(seq, &res.verbs),
            };
            match edit {
                Ok(e) if field.span_ok(e.index, e.index + 1) => vec![Target::Clause(e)],
                _ => Vec::new(),
            }
        }
    }
}

struct Applied {
    seq: TokenSeq,
    op: TokenOp,
    location: Location,
    before: String,
    after: String,
}

fn char_edit(seq: &TokenSeq, i: usize, char_idx: usize, new: Result<String, ApplyError>) -> Applied {
    let new = new.expect("targets are filtered for eligibility");
    let mut out = seq.clone();
    out.set_text(i, new.clone());
    Applied {
        seq: out,
        op: TokenOp::Substitute { index: i },
        location: Location { token: i, char: Some(char_idx) },
        before: seq.tokens[i].text.clone(),
        after: new,
    }
}

fn word_edit(e: WordEdit) -> Applied {
    Applied { location: Location { token: e.index, char: None }, seq: e.seq, op: e.op, before: e.before, after: e.after }
}

fn apply(method: Method, field: &Field, target: Target, rng: &mut SplitMix64, res: &Resources) -> Applied {
    let seq = &field.seq;
    let expect = |r: Result<WordEdit, ApplyError>| word_edit(r.expect("targets are filtered for eligibility"));
    match target {
        Target::Token(i) => {
            let word = seq.tokens[i].text.as_str();
            let chars: Vec<char> = word.chars().collect();
            let n = chars.len();
            match method {
                Method::CharDelete => {
                    let idx = 1 + rng.uniform(n - 2);
                    char_edit(seq, i, idx, char_level::char_delete(word, idx))
                }
                Method::CharInsert => {
                    let idx = 1 + rng.uniform(n - 1);
                    let mut ch = (b'a' + rng.uniform(26) as u8) as char;
                    if chars[idx - 1].is_uppercase() && chars[idx].is_uppercase() {
                        ch = ch.to_ascii_uppercase();
                    }
                    char_edit(seq, i, idx, char_level::char_insert(word, idx, ch))
                }
                Method::Lcc => {
                    let mode = if rng.uniform(2) == 0 { LccMode::First } else { LccMode::All };
                    let idx = chars.iter().position(|c| c.is_uppercase() || c.is_lowercase()).unwrap_or(0);
                    char_edit(seq, i, idx, char_level::letter_case_change(word, mode))
                }
                Method::Cmw => {
                    let n_variants = res.misspellings.lookup(word).map_or(0, <[String]>::len);
                    let choice = rng.uniform(n_variants);
                    char_edit(seq, i, 0, char_level::misspell(word, choice, &res.misspellings))
                }
                Method::CharRepeat => {
                    let idx = rng.uniform(n);
                    char_edit(seq, i, idx, char_level::char_repeat(word, idx))
                }
                Method::CharReplace => {
                    let positions: Vec<usize> = (0..n).filter(|&k| chars[k].is_ascii_alphabetic()).collect();
                    let idx = *rng.pick(&positions);
                    let neighbors = res.keyboard.neighbors(chars[idx]).expect("ascii letter");
                    let ch = *rng.pick(&neighbors);
                    char_edit(seq, i, idx, char_level::char_replace(word, idx, ch, &res.keyboard))
                }
                Method::CharSwap => {
                    let idx = *rng.pick(&swap_positions(word));
                    char_edit(seq, i, idx, char_level::char_swap(word, idx))
                }
                Method::Ae => {
                    let choice = rng.uniform(res.abbreviations.expansions_of(word).len());
                    expect(word_level::expand_abbreviation(seq, i, choice, &res.abbreviations))
                }
                Method::WordDelete => expect(word_level::word_delete(seq, i)),
                Method::WordRepeat => expect(word_level::word_repeat(seq, i)),
                Method::Rws => {
                    let choice = rng.uniform(res.synonyms.lookup(word).map_or(0, <[String]>::len));
                    expect(word_level::replace_with_synonym(seq, i, choice, &res.synonyms))
                }
                _ => unreachable!("{method} does not target single tokens"),
            }
        }
        Target::Phrase { start, len } => {
            let n_abbr = res
                .abbreviations
                .abbreviations_of(&seq.texts()[start..start + len])
                .map_or(0, <[String]>::len);
            let choice = rng.uniform(n_abbr);
            expect(word_level::replace_with_abbreviation(seq, start, len, choice, &res.abbreviations))
        }
        Target::Window => {
            let options = windows(field);
            let (m, starts) = rng.pick(&options);
            let start = *rng.pick(starts);
            let texts: Vec<&str> = seq.tokens[start..start + m].iter().map(|t| t.text.as_str()).collect();
            let perm = loop {
                let p = rng.permutation(*m);
                if p.iter().enumerate().any(|(j, &k)| texts[j] != texts[k]) {
                    break p;
                }
            };
            expect(word_level::shuffle_window(seq, &ShuffleWindow { start, perm }))
        }
        Target::Clause(e) => word_edit(e),
    }
}

fn anchors(seq: &TokenSeq, entities: &[EntityMention]) -> Vec<EntityAnchor> {
    entities
        .iter()
        .map(|e| {
            let overlapping: Vec<usize> =
                (0..seq.len()).filter(|&i| seq.tokens[i].start < e.end && e.start < seq.tokens[i].end).collect();
            let first = overlapping.first().copied().unwrap_or(0);
            let last = overlapping.last().copied().unwrap_or(first);
            EntityAnchor {
                first,
                last,
                lead: e.start.saturating_sub(seq.tokens[first].start),
                trail: seq.tokens[last].end.saturating_sub(e.end),
                ty: e.ty.clone(),
            }
        })
        .collect()
}

fn resolve(seq: &TokenSeq, text: &str, a: &EntityAnchor) -> EntityMention {
    let (tf, tl) = (&seq.tokens[a.first], &seq.tokens[a.last]);
    let mut start = tf.start + a.lead;
    let mut end = tl.end.saturating_sub(a.trail);
    if start >= end || !text.is_char_boundary(start) || !text.is_char_boundary(end) || start >= tf.end || end <= tl.start {
        start = tf.start;
        end = tl.end;
    }
    EntityMention { start, end, ty: a.ty.clone() }
}

/// Applies up to `spec.pps` edits of `spec.method` to one sample.
pub fn perturb_sample(sample: &Sample, spec: &PerturbationSpec, res: &Resources) -> Result<PerturbedSample, NotApplicable> {
    let method = spec.method;
    let mut rng = SplitMix64::new(sample_seed(spec.global_seed, &sample.id, method.name()));

    let mut fields: Vec<Field> = match &sample.payload {
        Payload::Ner { tokens, labels } => {
            let mut f = Field::new("tokens", TokenSeq::from_words(tokens));
            f.labels = Some(labels.clone());
            vec![f]
        }
        Payload::Re { text, entities, .. } => {
            let seq = tokenize(text);
            let mut f = Field::new("text", seq);
            f.entities = anchors(&f.seq, entities);
            vec![f]
        }
        Payload::Ti { premise, hypothesis, .. } => {
            vec![Field::new("premise", tokenize(premise)), Field::new("hypothesis", tokenize(hypothesis))]
        }
        Payload::Ss { sentence1, sentence2, .. } => {
            vec![Field::new("sentence1", tokenize(sentence1)), Field::new("sentence2", tokenize(sentence2))]
        }
    };

    let mut edits = Vec::new();
    for _ in 0..spec.pps {
        let mut candidates: Vec<(usize, Vec<Target>)> = fields
            .iter()
            .enumerate()
            .map(|(k, f)| (k, targets(method, f, res)))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        if candidates.is_empty() {
            break;
        }
        let (k, mut ts) = candidates.swap_remove(rng.uniform(candidates.len()));
        let target = ts.swap_remove(rng.uniform(ts.len()));
        let field = &mut fields[k];
        let applied = apply(method, field, target, &mut rng, res);
        edits.push(Edit {
            level: method.level(),
            method: method.name().to_string(),
            field: field.name.to_string(),
            location: applied.location,
            before: applied.before,
            after: applied.after,
            op: applied.op.clone(),
        });
        if method.is_clause_level() {
            field.clause_done = true;
        }
        field.commit(applied.seq, &applied.op);
    }

    if edits.is_empty() {
        return Err(NotApplicable { id: sample.id.clone(), method, reason: "no eligible target".into() });
    }

    let mut noisy = sample.clone();
    noisy.payload = match (&sample.payload, fields.as_slice()) {
        (Payload::Ner { .. }, [f]) => Payload::Ner {
            tokens: f.seq.texts(),
            labels: f.labels.clone().expect("ner field carries labels"),
        },
        (Payload::Re { label, .. }, [f]) => {
            let text = detokenize(&f.seq);
            let entities = f.entities.iter().map(|a| resolve(&f.seq, &text, a)).collect();
            Payload::Re { text, entities, label: label.clone() }
        }
        (Payload::Ti { label, .. }, [p, h]) => {
            Payload::Ti { premise: detokenize(&p.seq), hypothesis: detokenize(&h.seq), label: label.clone() }
        }
        (Payload::Ss { score, .. }, [a, b]) => {
            Payload::Ss { sentence1: detokenize(&a.seq), sentence2: detokenize(&b.seq), score: *score }
        }
        _ => unreachable!("field layout follows the task"),
    };
    let meaning_risk = method.is_meaning_risk();
    Ok(PerturbedSample {
        noisy,
        method,
        pps_requested: spec.pps,
        pps_applied: edits.len(),
        global_seed: spec.global_seed,
        edits,
        meaning_risk,
        review: Review {
            status: if meaning_risk { ReviewStatus::Pending } else { ReviewStatus::NotRequired },
            revised_label: None,
        },
    })
}

/// Perturbed samples in input order, plus the samples the method could not touch.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbOutcome {
    pub perturbed: Vec<PerturbedSample>,
    pub not_applicable: Vec<NotApplicable>,
}

/// Perturbs a corpus on `jobs` worker threads (0 = rayon default). Output
/// order and content do not depend on the number of workers.
pub fn perturb_corpus(samples: &[Sample], spec: &PerturbationSpec, res: &Resources, jobs: usize) -> PerturbOutcome {
    let run = || samples.par_iter().map(|s| perturb_sample(s, spec, res)).collect::<Vec<_>>();
    let results = match jobs {
        0 => run(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run),
    };
    let mut out = PerturbOutcome { perturbed: Vec::new(), not_applicable: Vec::new() };
    for r in results {
        match r {
            Ok(p) => out.perturbed.push(p),
            Err(na) => out.not_applicable.push(na),
        }
    }
    out
}

pub fn write_perturbed(samples: &[PerturbedSample], path: &Path) -> Result<(), CorpusError> {
    write_lines(path, samples.iter().map(PerturbedSample::to_line))
}

pub fn read_perturbed(path: &Path) -> Result<Vec<PerturbedSample>, CorpusError> {
    Ok(read_jsonl(path, PerturbedSample::from_json)?.into_iter().map(|(_, p)| p).collect())
}
