use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::bio::{first_violation, BioTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ner,
    Re,
    Ti,
    Ss,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Ner, Task::Re, Task::Ti, Task::Ss];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Ner => "ner",
            Task::Re => "re",
            Task::Ti => "ti",
            Task::Ss => "ss",
        }
    }

    /// Names of the free-text fields a perturbation may touch.
    pub fn text_fields(self) -> &'static [&'static str] {
        match self {
            Task::Ner => &["tokens"],
            Task::Re => &["text"],
            Task::Ti => &["premise", "hypothesis"],
            Task::Ss => &["sentence1", "sentence2"],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ner" => Ok(Task::Ner),
            "re" => Ok(Task::Re),
            "ti" => Ok(Task::Ti),
            "ss" => Ok(Task::Ss),
            other => Err(format!("unknown task {other:?} (expected ner, re, ti or ss)")),
        }
    }
}

pub const TI_LABELS: [&str; 3] = ["entailment", "contradiction", "neutral"];

/// Entity mention in an RE text, byte offsets `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Ner { tokens: Vec<String>, labels: Vec<BioTag> },
    Re { text: String, entities: Vec<EntityMention>, label: String },
    Ti { premise: String, hypothesis: String, label: String },
    Ss { sentence1: String, sentence2: String, score: f64 },
}

/// Gold label or system output for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Tags(Vec<BioTag>),
    Class(String),
    Score(f64),
}

impl Label {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("labels serialize")
    }

    /// Parses an output value for `task`.
    pub fn from_json(task: Task, value: &Value) -> Result<Label, String> {
        match task {
            Task::Ner => {
                let arr = value.as_array().ok_or("expected a list of BIO tags")?;
                arr.iter()
                    .map(|v| {
                        v.as_str()
                            .ok_or_else(|| "expected a string tag".to_string())
                            .and_then(|s| s.parse::<BioTag>().map_err(|e| e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Label::Tags)
            }
            Task::Re | Task::Ti => value
                .as_str()
                .map(|s| Label::Class(s.to_string()))
                .ok_or_else(|| "expected a class string".to_string()),
            Task::Ss => value
                .as_f64()
                .map(Label::Score)
                .ok_or_else(|| "expected a number".to_string()),
        }
    }

    /// Checks that the label is a legal gold value for `task`.
    pub fn validate_for(&self, task: Task) -> Result<(), String> {
        match (task, self) {
            (Task::Ner, Label::Tags(tags)) => match first_violation(tags) {
                Some(i) => Err(format!("BIO violation at position {i}")),
                None => Ok(()),
            },
            (Task::Re, Label::Class(c)) if !c.is_empty() => Ok(()),
            (Task::Ti, Label::Class(c)) if TI_LABELS.contains(&c.as_str()) => Ok(()),
            (Task::Ti, Label::Class(c)) => Err(format!("unknown TI label {c:?}")),
            (Task::Ss, Label::Score(s)) if (0.0..=5.0).contains(s) => Ok(()),
            (Task::Ss, Label::Score(_)) => Err("score out of range".to_string()),
            _ => Err(format!("label has the wrong shape for task {task}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub payload: Payload,
    /// Keys not understood by this crate, preserved in order on write.
    pub extra: Map<String, Value>,
}

impl Sample {
    pub fn task(&self) -> Task {
        match self.payload {
            Payload::Ner { .. } => Task::Ner,
            Payload::Re { .. } => Task::Re,
            Payload::Ti { .. } => Task::Ti,
            Payload::Ss { .. } => Task::Ss,
        }
    }

    pub fn gold(&self) -> Label {
        match &self.payload {
            Payload::Ner { labels, .. } => Label::Tags(labels.clone()),
            Payload::Re { label, .. } | Payload::Ti { label, .. } => Label::Class(label.clone()),
            Payload::Ss { score, .. } => Label::Score(*score),
        }
    }

    /// Replaces the gold label (used for relabeled review decisions).
    pub fn set_gold(&mut self, label: Label) -> Result<(), String> {
        label.validate_for(self.task())?;
        match (&mut self.payload, label) {
            (Payload::Ner { labels, tokens }, Label::Tags(t)) => {
                if t.len() != tokens.len() {
                    return Err("revised tags do not match the token count".into());
                }
                *labels = t;
            }
            (Payload::Re { label, .. }, Label::Class(c)) | (Payload::Ti { label, .. }, Label::Class(c)) => {
                *label = c
            }
            (Payload::Ss { score, .. }, Label::Score(s)) => *score = s,
            _ => unreachable!("validated above"),
        }
        Ok(())
    }

    /// Text of a free-text field (NER tokens joined by spaces).
    pub fn field_text(&self, field: &str) -> Option<String> {
        match (&self.payload, field) {
            (Payload::Ner { tokens, .. }, "tokens") => Some(tokens.join(" ")),
            (Payload::Re { text, .. }, "text") => Some(text.clone()),
            (Payload::Ti { premise, .. }, "premise") => Some(premise.clone()),
            (Payload::Ti { hypothesis, .. }, "hypothesis") => Some(hypothesis.clone()),
            (Payload::Ss { sentence1, .. }, "sentence1") => Some(sentence1.clone()),
            (Payload::Ss { sentence2, .. }, "sentence2") => Some(sentence2.clone()),
            _ => None,
        }
    }

    /// Label-free request fields sent to a system under test.
    pub fn input_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        match &self.payload {
            Payload::Ner { tokens, .. } => {
                m.insert("tokens".into(), json!(tokens));
            }
            Payload::Re { text, entities, .. } => {
                m.insert("text".into(), json!(text));
                m.insert("entities".into(), serde_json::to_value(entities).expect("entities"));
            }
            Payload::Ti { premise, hypothesis, .. } => {
                m.insert("premise".into(), json!(premise));
                m.insert("hypothesis".into(), json!(hypothesis));
            }
            Payload::Ss { sentence1, sentence2, .. } => {
                m.insert("sentence1".into(), json!(sentence1));
                m.insert("sentence2".into(), json!(sentence2));
            }
        }
        m
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id));
        m.insert("task".into(), json!(self.task().as_str()));
        for (k, v) in self.input_json() {
            m.insert(k, v);
        }
        match &self.payload {
            Payload::Ner { labels, .. } => m.insert("labels".into(), json!(labels)),
            Payload::Re { label, .. } | Payload::Ti { label, .. } => m.insert("label".into(), json!(label)),
            Payload::Ss { score, .. } => m.insert("score".into(), json!(score)),
        };
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("sample serializes")
    }

    pub fn from_json(value: Value) -> Result<Sample, RecordError> {
        let Value::Object(mut m) = value else {
            return Err(RecordError::new("record", "expected a JSON object"));
        };
        let id = take_string(&mut m, "id")?;
        let task: Task = take_string(&mut m, "task")?
            .parse()
            .map_err(|e: String| RecordError::new("task", e))?;
        let payload = match task {
            Task::Ner => {
                let tokens: Vec<String> = take_typed(&mut m, "tokens")?;
                let raw: Vec<String> = take_typed(&mut m, "labels")?;
                let labels = raw
                    .iter()
                    .map(|s| s.parse::<BioTag>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| RecordError::new("labels", e.to_string()))?;
                if labels.len() != tokens.len() {
                    return Err(RecordError::new(
                        "labels",
                        format!("{} labels for {} tokens", labels.len(), tokens.len()),
                    ));
                }
                if let Some(i) = first_violation(&labels) {
                    return Err(RecordError::new("labels", format!("BIO violation at position {i}")));
                }
                Payload::Ner { tokens, labels }
            }
            Task::Re => {
                let text = take_string(&mut m, "text")?;
                let entities: Vec<EntityMention> = take_typed(&mut m, "entities")?;
                for e in &entities {
                    if e.start >= e.end
                        || e.end > text.len()
                        || !text.is_char_boundary(e.start)
                        || !text.is_char_boundary(e.end)
                    {
                        return Err(RecordError::new(
                            "entities",
                            format!("span {}..{} outside text bounds", e.start, e.end),
                        ));
                    }
                }
                let label = take_string(&mut m, "label")?;
                Payload::Re { text, entities, label }
            }
            Task::Ti => {
                let premise = take_string(&mut m, "premise")?;
                let hypothesis = take_string(&mut m, "hypothesis")?;
                let label = take_string(&mut m, "label")?;
                if !TI_LABELS.contains(&label.as_str()) {
                    return Err(RecordError::new("label", format!("unknown TI label {label:?}")));
                }
                Payload::Ti { premise, hypothesis, label }
            }
            Task::Ss => {
                let sentence1 = take_string(&mut m, "sentence1")?;
                let sentence2 = take_string(&mut m, "sentence2")?;
                let score: f64 = take_typed(&mut m, "score")?;
                if !(0.0..=5.0).contains(&score) {
                    return Err(RecordError::new("score", "score out of range"));
                }
                Payload::Ss { sentence1, sentence2, score }
            }
        };
        Ok(Sample { id, payload, extra: m })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct RecordError {
    pub field: String,
    pub message: String,
}

impl RecordError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        RecordError { field: field.into(), message: message.into() }
    }
}

fn take_string(m: &mut Map<String, Value>, key: &str) -> Result<String, RecordError> {
    match m.shift_remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(RecordError::new(key, "expected a string")),
        None => Err(RecordError::new(key, "missing")),
    }
}

fn take_typed<T: serde::de::DeserializeOwned>(m: &mut Map<String, Value>, key: &str) -> Result<T, RecordError> {
    let v = m.shift_remove(key).ok_or_else(|| RecordError::new(key, "missing"))?;
    serde_json::from_value(v).map_err(|e| RecordError::new(key, e.to_string()))
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Record { path: PathBuf, line: usize, source: RecordError },
    #[error("{path}:{line}: duplicate sample id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: expected task {expected}, found {found}")]
    WrongTask { path: PathBuf, line: usize, expected: Task, found: Task },
}

/// Reads JSON lines, calling `parse` on every non-blank line.
pub fn read_jsonl<T>(
    path: &Path,
    mut parse: impl FnMut(Value) -> Result<T, RecordError>,
) -> Result<Vec<(usize, T)>, CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let file = fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record = |source| CorpusError::Record { path: path.to_path_buf(), line: lineno, source };
        let value: Value =
            serde_json::from_str(&line).map_err(|e| record(RecordError::new("json", e.to_string())))?;
        out.push((lineno, parse(value).map_err(record)?));
    }
    Ok(out)
}

/// Reads a canonical dataset. With `task` set, every record must be of that task.
pub fn read_samples(path: &Path, task: Option<Task>) -> Result<Vec<Sample>, CorpusError> {
    let rows = read_jsonl(path, Sample::from_json)?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, sample) in rows {
        if let Some(expected) = task {
            if sample.task() != expected {
                return Err(CorpusError::WrongTask { path: path.into(), line, expected, found: sample.task() });
            }
        }
        if !seen.insert(sample.id.clone()) {
            return Err(CorpusError::DuplicateId { path: path.into(), line, id: sample.id });
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_lines<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for line in lines {
        w.write_all(line.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_samples(samples: &[Sample], path: &Path) -> Result<(), CorpusError> {
    write_lines(path, samples.iter().map(Sample::to_line))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Sample, RecordError> {
        Sample::from_json(serde_json::from_str(s).unwrap())
    }

    #[test]
    fn reads_ti_record() {
        let s = parse(r#"{"id":"t1","task":"ti","premise":"p","hypothesis":"h","label":"neutral"}"#).unwrap();
        assert_eq!(s.task(), Task::Ti);
        assert_eq!(s.gold(), Label::Class("neutral".into()));
    }

    #[test]
    fn rejects_bad_records() {
        let err = parse(r#"{"id":"s1","task":"ss","sentence1":"a","sentence2":"b","score":5.5}"#).unwrap_err();
        assert_eq!(err.message, "score out of range");
        let err = parse(r#"{"id":"n","task":"ner","tokens":["a","b"],"labels":["O","I-x"]}"#).unwrap_err();
        assert_eq!(err.field, "labels");
        let err = parse(r#"{"id":"n","task":"ner","tokens":["a"],"labels":["O","O"]}"#).unwrap_err();
        assert!(err.message.contains("2 labels for 1 tokens"));
        let err = parse(r#"{"id":"r","task":"re","text":"abc","entities":[{"start":1,"end":9,"type":"x"}],"label":"y"}"#)
            .unwrap_err();
        assert_eq!(err.field, "entities");
        let err = parse(r#"{"task":"ti"}"#).unwrap_err();
        assert_eq!((err.field.as_str(), err.message.as_str()), ("id", "missing"));
    }

    #[test]
    fn unknown_keys_survive_a_round_trip() {
        let line = r#"{"id":"t1","task":"ti","premise":"p","hypothesis":"h","label":"neutral","source":"x","n":3}"#;
        let s = parse(line).unwrap();
        assert_eq!(s.to_line(), line);
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(
            &path,
            "{\"id\":\"a\",\"task\":\"ti\",\"premise\":\"p\",\"hypothesis\":\"h\",\"label\":\"neutral\"}\n\nnot json\n",
        )
        .unwrap();
        let err = read_samples(&path, None).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }
}
