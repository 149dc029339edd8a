//! Hashed-feature averaged perceptron: a small learned baseline whose
//! scores degrade under noise without any ML framework.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::fixtures::Responder;
use crate::corpus::bio::repair;
use crate::corpus::{BioTag, EntityMention, Label, Payload, Sample, Task};
use crate::perturb::rng::{fnv1a64, SplitMix64};

pub const DIM: usize = 1 << 18;
pub const EPOCHS: usize = 5;
pub const SEED: u64 = 2021;

const NEGATION_CUES: &[&str] = &["not", "no", "denies", "denied", "without", "never", "negative"];

struct Model {
    classes: Vec<String>,
    /// classes × DIM averaged weights
    weights: Vec<f32>,
}

impl Model {
    fn train(instances: &[(Vec<usize>, usize)], classes: Vec<String>, seed: u64) -> Model {
        let k = classes.len();
        let mut w = vec![0f32; k * DIM];
        let mut u = vec![0f32; k * DIM];
        let mut c = 1f32;
        let mut rng = SplitMix64::new(seed);
        for _ in 0..EPOCHS {
            for i in rng.permutation(instances.len()) {
                let (feats, gold) = &instances[i];
                let guess = argmax(&w, k, feats);
                if guess != *gold {
                    for &f in feats {
                        w[gold * DIM + f] += 1.0;
                        u[gold * DIM + f] += c;
                        w[guess * DIM + f] -= 1.0;
                        u[guess * DIM + f] -= c;
                    }
                }
                c += 1.0;
            }
        }
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi -= ui / c;
        }
        Model { classes, weights: w }
    }

    fn predict(&self, feats: &[usize]) -> &str {
        &self.classes[argmax(&self.weights, self.classes.len(), feats)]
    }
}

fn argmax(w: &[f32], k: usize, feats: &[usize]) -> usize {
    let mut best = (0, f32::NEG_INFINITY);
    for class in 0..k {
        let s: f32 = feats.iter().map(|&f| w[class * DIM + f]).sum();
        if s > best.1 {
            best = (class, s);
        }
    }
    best.0
}

fn hash(feature: &str) -> usize {
    (fnv1a64(feature.as_bytes()) as usize) & (DIM - 1)
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn bag(out: &mut Vec<String>, prefix: &str, ws: &[String]) {
    for w in ws {
        out.push(format!("{prefix}u:{w}"));
        let padded: Vec<char> = format!("^{w}$").chars().collect();
        for tri in padded.windows(3) {
            out.push(format!("{prefix}c:{}", tri.iter().collect::<String>()));
        }
    }
}

fn finish(mut names: Vec<String>) -> Vec<usize> {
    names.push("bias".into());
    let set: BTreeSet<usize> = names.iter().map(|n| hash(n)).collect();
    set.into_iter().collect()
}

fn pair_features(a: &str, b: &str) -> Vec<usize> {
    let (wa, wb) = (words(a), words(b));
    let mut f = Vec::new();
    bag(&mut f, "", &wa);
    bag(&mut f, "", &wb);
    bag(&mut f, "b:", &wb);
    let sa: BTreeSet<&String> = wa.iter().collect();
    let sb: BTreeSet<&String> = wb.iter().collect();
    let shared = sa.intersection(&sb).count();
    for w in sa.intersection(&sb) {
        f.push(format!("ov:{w}"));
    }
    let jaccard = shared as f64 / sa.union(&sb).count().max(1) as f64;
    f.push(format!("ovr:{}", (jaccard * 10.0).floor() as usize));
    let neg = |ws: &[String]| ws.iter().filter(|w| NEGATION_CUES.contains(&w.as_str())).count().min(2);
    f.push(format!("neg:{}:{}", neg(&wa), neg(&wb)));
    finish(f)
}

fn re_features(text: &str, entities: &[EntityMention]) -> Vec<usize> {
    let mut f = Vec::new();
    bag(&mut f, "", &words(text));
    let mut ents: Vec<&EntityMention> = entities.iter().collect();
    ents.sort_by_key(|e| e.start);
    if let [a, b, ..] = ents.as_slice() {
        f.push(format!("et:{}-{}", a.ty, b.ty));
        if let Some(between) = text.get(a.end.min(b.start)..b.start) {
            for w in words(between) {
                f.push(format!("btw:{w}"));
            }
        }
    }
    finish(f)
}

fn token_features(tokens: &[String], i: usize) -> Vec<usize> {
    let lower = |j: usize| tokens.get(j).map_or("<s>".to_string(), |t| t.to_lowercase());
    let w = &tokens[i];
    let mut f = vec![
        format!("w:{}", lower(i)),
        format!("p:{}", if i == 0 { "<s>".into() } else { lower(i - 1) }),
        format!("n:{}", lower(i + 1)),
        format!("pp:{}", if i < 2 { "<s>".into() } else { lower(i - 2) }),
        format!("nn:{}", lower(i + 2)),
        format!("upper:{}", w.chars().next().is_some_and(char::is_uppercase)),
    ];
    bag(&mut f, "t", &[w.to_lowercase()]);
    finish(f)
}

fn ss_bin(score: f64) -> String {
    format!("{}", (score * 2.0).round().clamp(0.0, 10.0) as u32)
}

fn fields<'a>(req: &'a Map<String, Value>, names: &[&str]) -> Result<Vec<&'a str>, String> {
    names
        .iter()
        .map(|n| req.get(*n).and_then(Value::as_str).ok_or_else(|| format!("request lacks {n}")))
        .collect()
}

pub struct Perceptron {
    models: BTreeMap<Task, Model>,
}

impl Perceptron {
    /// Trains one model per task present in `train`.
    pub fn train(train: &[Sample]) -> Perceptron {
        let mut per_task: BTreeMap<Task, (Vec<(Vec<usize>, String)>, BTreeSet<String>)> = BTreeMap::new();
        for s in train {
            let (insts, classes) = per_task.entry(s.task()).or_default();
            match &s.payload {
                Payload::Ner { tokens, labels } => {
                    for (i, tag) in labels.iter().enumerate() {
                        insts.push((token_features(tokens, i), tag.to_string()));
                        classes.insert(tag.to_string());
                    }
                }
                Payload::Re { text, entities, label } => {
                    insts.push((re_features(text, entities), label.clone()));
                    classes.insert(label.clone());
                }
                Payload::Ti { premise, hypothesis, label } => {
                    insts.push((pair_features(premise, hypothesis), label.clone()));
                    classes.insert(label.clone());
                }
                Payload::Ss { sentence1, sentence2, score } => {
                    insts.push((pair_features(sentence1, sentence2), ss_bin(*score)));
                    classes.insert(ss_bin(*score));
                }
            }
        }
        let models = per_task
            .into_iter()
            .map(|(task, (insts, classes))| {
                let classes: Vec<String> = classes.into_iter().collect();
                let idx: BTreeMap<&String, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
                let data: Vec<(Vec<usize>, usize)> = insts.iter().map(|(f, c)| (f.clone(), idx[c])).collect();
                let seed = SEED ^ fnv1a64(task.as_str().as_bytes());
                (task, Model::train(&data, classes, seed))
            })
            .collect();
        Perceptron { models }
    }
}

impl Responder for Perceptron {
    fn tasks(&self) -> Vec<Task> {
        self.models.keys().copied().collect()
    }

    fn respond(&self, task: Task, req: &Map<String, Value>) -> Result<Value, String> {
        let model = self.models.get(&task).ok_or_else(|| format!("no model for task {task}"))?;
        Ok(match task {
            Task::Ner => {
                let tokens: Vec<String> = serde_json::from_value(req.get("tokens").cloned().unwrap_or(Value::Null))
                    .map_err(|e| format!("tokens: {e}"))?;
                let mut tags: Vec<BioTag> = (0..tokens.len())
                    .map(|i| model.predict(&token_features(&tokens, i)).parse().expect("trained on valid tags"))
                    .collect();
                repair(&mut tags);
                Label::Tags(tags).to_json()
            }
            Task::Re => {
                let text = fields(req, &["text"])?[0];
                let entities: Vec<EntityMention> =
                    serde_json::from_value(req.get("entities").cloned().unwrap_or(json!([])))
                        .map_err(|e| format!("entities: {e}"))?;
                json!(model.predict(&re_features(text, &entities)))
            }
            Task::Ti => {
                let f = fields(req, &["premise", "hypothesis"])?;
                json!(model.predict(&pair_features(f[0], f[1])))
            }
            Task::Ss => {
                let f = fields(req, &["sentence1", "sentence2"])?;
                let bin: f64 = model.predict(&pair_features(f[0], f[1])).parse().expect("numeric bins");
                json!(bin / 2.0)
            }
        })
    }
}
