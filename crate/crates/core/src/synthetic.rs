//! Deterministic synthetic clinical corpus used by tests, examples and the
//! fixture adapters. Real benchmark data is license-restricted; these
//! template sentences exercise every method and carry learnable label cues.

use crate::corpus::{tokenize, BioTag, EntityMention, Payload, Sample};
use crate::perturb::rng::SplitMix64;

pub const DEFAULT_SEED: u64 = 2021;
pub const TEST_PER_TASK: usize = 250;
pub const TRAIN_PER_TASK: usize = 500;

/// The committed copies, byte-identical to `generate(DEFAULT_SEED)`.
pub const TEST_JSONL: &str = include_str!("../data/synthetic_test.jsonl");
pub const TRAIN_JSONL: &str = include_str!("../data/synthetic_train.jsonl");

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub test: Vec<Sample>,
    pub train: Vec<Sample>,
}

impl SyntheticCorpus {
    pub fn to_jsonl(samples: &[Sample]) -> String {
        samples.iter().map(|s| s.to_line() + "\n").collect()
    }
}

fn parse_lines(text: &str) -> Vec<Sample> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Sample::from_json(serde_json::from_str(l).expect("bundled corpus is JSON")).expect("bundled corpus is valid"))
        .collect()
}

pub fn bundled_test() -> Vec<Sample> {
    parse_lines(TEST_JSONL)
}

pub fn bundled_train() -> Vec<Sample> {
    parse_lines(TRAIN_JSONL)
}

#[derive(Clone, Copy)]
struct Slot {
    article: &'static str,
    head: &'static str,
}

/// Past "be" agreeing with a bare treatment head ("antibiotics were").
fn was(slot: Slot) -> &'static str {
    if slot.article.is_empty() && slot.head.ends_with('s') {
        "were"
    } else {
        "was"
    }
}

const fn s(article: &'static str, head: &'static str) -> Slot {
    Slot { article, head }
}

const PROBLEMS: &[Slot] = &[
    s("", "chest pain"),
    s("", "shortness of breath"),
    s("", "abdominal pain"),
    s("", "hypotension"),
    s("", "hypertension"),
    s("a", "heart murmur"),
    s("", "nausea"),
    s("", "fever"),
    s("", "pneumonia"),
    s("", "diarrhea"),
    s("", "dizziness"),
    s("a", "severe headache"),
    s("", "atrial fibrillation"),
    s("a", "urinary tract infection"),
    s("", "anemia"),
    s("", "edema"),
    s("", "weakness"),
    s("", "seizure activity"),
    s("", "gastrointestinal bleeding"),
    s("", "acute kidney injury"),
    s("", "congestive heart failure"),
    s("", "leg swelling"),
    s("a", "persistent cough"),
    s("a", "rash"),
    s("", "chronic back pain"),
];

const TESTS: &[Slot] = &[
    s("an", "EEG"),
    s("a", "chest x-ray"),
    s("a", "CT scan"),
    s("an", "electrocardiogram"),
    s("a", "blood culture"),
    s("an", "ultrasound"),
    s("a", "biopsy"),
    s("an", "MRI"),
    s("a", "complete blood count"),
    s("a", "urinalysis"),
    s("an", "echocardiogram"),
    s("a", "basic metabolic panel"),
];

const TREATMENTS: &[Slot] = &[
    s("", "aspirin"),
    s("", "insulin"),
    s("", "metoprolol"),
    s("a", "stool softener"),
    s("", "intravenous fluids"),
    s("", "antibiotics"),
    s("", "acetaminophen"),
    s("", "physical therapy"),
    s("", "oxygen"),
    s("", "heparin"),
    s("", "lisinopril"),
    s("", "furosemide"),
    s("", "morphine"),
    s("", "prednisone"),
];

const SUBJECTS: &[&str] = &["The patient", "She", "He", "Patient", "The man", "The woman"];
const CONTEXTS: &[&str] = &["", "", "", "On admission,", "Today,", "Yesterday,", "Overnight,", "On exam,", "At the clinic,"];
const RELATIVES: &[&str] = &["mother", "father", "sister", "brother"];
const JOBS: &[&str] = &["teacher", "nurse", "carpenter", "driver", "farmer", "cook"];

/// Sentence assembly with byte spans of typed entities.
#[derive(Default)]
struct Builder {
    text: String,
    spans: Vec<(usize, usize, &'static str)>,
}

impl Builder {
    fn push(&mut self, piece: &str) {
        if piece.is_empty() {
            return;
        }
        let glue = matches!(piece, "." | "," | ";");
        if !self.text.is_empty() && !glue {
            self.text.push(' ');
        }
        self.text.push_str(piece);
    }

    fn words(&mut self, text: &str) -> &mut Self {
        for w in text.split(' ') {
            self.push(w);
        }
        self
    }

    fn entity(&mut self, slot: Slot, ty: &'static str) -> &mut Self {
        self.typed(slot, ty, false)
    }

    /// Entity at the start of a sentence: its first word is capitalized.
    fn lead(&mut self, slot: Slot, ty: &'static str) -> &mut Self {
        self.typed(slot, ty, true)
    }

    fn typed(&mut self, slot: Slot, ty: &'static str, cap: bool) -> &mut Self {
        let article = if cap { capitalize(slot.article) } else { slot.article.to_string() };
        self.push(&article);
        if !self.text.is_empty() {
            self.text.push(' ');
        }
        let head = if cap && article.is_empty() { capitalize(slot.head) } else { slot.head.to_string() };
        let start = self.text.len();
        self.text.push_str(&head);
        self.spans.push((start, self.text.len(), ty));
        self
    }

    fn end(&mut self) -> &mut Self {
        self.push(".");
        self
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Gen {
    rng: SplitMix64,
}

impl Gen {
    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *self.rng.pick(items)
    }

    fn chance(&mut self, percent: usize) -> bool {
        self.rng.uniform(100) < percent
    }

    /// Context prefix and correctly cased subject.
    fn opening(&mut self, b: &mut Builder) {
        let ctx = self.pick(CONTEXTS);
        let subj = self.pick(SUBJECTS);
        if ctx.is_empty() {
            b.words(subj);
        } else {
            b.words(ctx);
            let lowered = if subj == "Patient" { "the patient".to_string() } else { subj.to_lowercase() };
            b.words(&lowered);
        }
    }

    fn suffix(&mut self, b: &mut Builder) {
        match self.rng.uniform(6) {
            0 => {
                let n = 1 + self.rng.uniform(9);
                b.words(&format!("on hospital day {n}"));
            }
            1 => {
                let n = 12 + self.rng.uniform(29);
                b.words(&format!("with a respiratory rate of {n}"));
            }
            2 => {
                let d = self.pick(&["70s", "80s", "90s"]);
                b.words(&format!("with SBP in the {d}"));
            }
            3 => {
                b.words(self.pick(&["per the nurse", "according to the family", "since last week"]));
            }
            _ => {}
        }
    }

    fn ner(&mut self) -> Builder {
        let mut b = Builder::default();
        let p = self.pick(PROBLEMS);
        let t = self.pick(TESTS);
        let r = self.pick(TREATMENTS);
        match self.rng.uniform(10) {
            0 => {
                self.opening(&mut b);
                b.words("has").entity(p, "problem");
                self.suffix(&mut b);
            }
            1 => {
                self.opening(&mut b);
                b.words("developed").entity(p, "problem").words("after").entity(r, "treatment");
            }
            2 => {
                b.lead(t, "test").words("revealed").entity(p, "problem");
                self.suffix(&mut b);
            }
            3 => {
                self.opening(&mut b);
                b.words("was started on").entity(r, "treatment").words("for").entity(p, "problem");
            }
            4 => {
                let q = self.pick(PROBLEMS);
                self.opening(&mut b);
                b.words("denies").entity(p, "problem").words("and").entity(q, "problem");
            }
            5 => {
                self.opening(&mut b);
                b.words("was given").entity(r, "treatment");
                self.suffix(&mut b);
            }
            6 => {
                self.opening(&mut b);
                b.words("underwent").entity(t, "test").words(", which showed").entity(p, "problem");
            }
            7 => {
                b.words("There was no evidence of").entity(p, "problem").words("on").entity(t, "test");
            }
            8 => {
                self.opening(&mut b);
                b.words("reports").entity(p, "problem");
                self.suffix(&mut b);
            }
            _ => {
                self.opening(&mut b);
                b.words("is taking").entity(r, "treatment").words("for").entity(p, "problem");
            }
        }
        b.end();
        b
    }

    fn re(&mut self) -> (Builder, &'static str) {
        let mut b = Builder::default();
        let p = self.pick(PROBLEMS);
        let t = self.pick(TESTS);
        let r = self.pick(TREATMENTS);
        let roll = self.rng.uniform(100);
        let variant = self.rng.uniform(3);
        let label = match roll {
            0..=39 => {
                match variant {
                    0 => {
                        b.lead(r, "treatment").words(&format!("{} given for", was(r))).entity(p, "problem");
                    }
                    1 => {
                        self.opening(&mut b);
                        b.words("received").entity(r, "treatment").words("for").entity(p, "problem");
                    }
                    _ => {
                        self.opening(&mut b);
                        b.words("was treated for").entity(p, "problem").words("with").entity(r, "treatment");
                    }
                }
                "TrAP"
            }
            40..=69 => {
                match variant {
                    0 => {
                        b.lead(t, "test").words("revealed").entity(p, "problem");
                    }
                    1 => {
                        b.lead(t, "test").words("showed").entity(p, "problem");
                    }
                    _ => {
                        b.lead(p, "problem").words("was seen on").entity(t, "test");
                    }
                }
                "TeRP"
            }
            70..=84 => {
                match variant {
                    0 => {
                        b.lead(r, "treatment").words("caused").entity(p, "problem");
                    }
                    1 => {
                        self.opening(&mut b);
                        b.words("developed").entity(p, "problem").words("secondary to").entity(r, "treatment");
                    }
                    _ => {
                        self.opening(&mut b);
                        b.words("stopped").entity(r, "treatment").words("because of").entity(p, "problem");
                    }
                }
                "TrCP"
            }
            _ => {
                match variant {
                    0 => {
                        b.lead(t, "test").words("was ordered to evaluate").entity(p, "problem");
                    }
                    1 => {
                        b.lead(t, "test").words("was performed for possible").entity(Slot { article: "", ..p }, "problem");
                    }
                    _ => {
                        self.opening(&mut b);
                        b.words("needs").entity(t, "test").words("to rule out").entity(p, "problem");
                    }
                }
                "TeCP"
            }
        };
        self.suffix(&mut b);
        b.end();
        (b, label)
    }

    fn ti(&mut self) -> (String, String, &'static str) {
        let p = self.pick(PROBLEMS);
        let r = self.pick(TREATMENTS);
        let mut b = Builder::default();
        self.opening(&mut b);
        if self.chance(50) {
            b.words("has").entity(p, "problem");
            self.suffix(&mut b);
        } else {
            b.words("presented with").entity(p, "problem").words("and was given").entity(r, "treatment");
        }
        b.end();
        let phrase = |slot: Slot| if slot.article.is_empty() { slot.head.to_string() } else { format!("{} {}", slot.article, slot.head) };
        let roll = self.rng.uniform(100);
        let (hyp, label) = match roll {
            0..=39 => {
                let h = match self.rng.uniform(3) {
                    0 => format!("The patient has {}.", phrase(p)),
                    1 => format!("The patient presented with {}.", phrase(p)),
                    _ => format!("{} was present.", capitalize(&phrase(p))),
                };
                (h, "entailment")
            }
            40..=74 => {
                let h = match self.rng.uniform(4) {
                    0 => format!("The patient denies {}.", p.head),
                    1 => format!("The patient does not have {}.", phrase(p)),
                    2 => format!("The patient has no {}.", p.head),
                    _ => "The patient is healthy.".to_string(),
                };
                (h, "contradiction")
            }
            _ => {
                let q = self.pick(PROBLEMS);
                let h = match self.rng.uniform(4) {
                    0 => format!("The patient has a family history of {}.", q.head),
                    1 => format!("The patient lives with her {}.", self.pick(RELATIVES)),
                    2 => format!("The patient was admitted last year for {}.", q.head),
                    _ => format!("The patient works as a {}.", self.pick(JOBS)),
                };
                (h, "neutral")
            }
        };
        (b.text, hyp, label)
    }

    fn ss_sentence(&mut self, template: usize, p: Slot, r: Slot) -> String {
        let mut b = Builder::default();
        match template {
            0 => {
                self.opening(&mut b);
                b.words("was given").entity(r, "treatment").words("for").entity(p, "problem");
            }
            1 => {
                b.lead(r, "treatment").words(&format!("{} administered to treat", was(r))).entity(p, "problem");
            }
            _ => {
                self.opening(&mut b);
                b.words("received").entity(r, "treatment").words("because of").entity(p, "problem");
            }
        }
        b.end();
        b.text
    }

    fn ss(&mut self) -> (String, String, f64) {
        let p = self.pick(PROBLEMS);
        let r = self.pick(TREATMENTS);
        let t = self.rng.uniform(3);
        let same_p = self.chance(50);
        let same_r = self.chance(50);
        let same_t = self.chance(50);
        let other = |g: &mut Gen, pool: &[Slot], cur: Slot| loop {
            let c = g.pick(pool);
            if c.head != cur.head {
                break c;
            }
        };
        let p2 = if same_p { p } else { other(self, PROBLEMS, p) };
        let r2 = if same_r { r } else { other(self, TREATMENTS, r) };
        let t2 = if same_t { t } else { (t + 1 + self.rng.uniform(2)) % 3 };
        let s1 = self.ss_sentence(t, p, r);
        let s2 = self.ss_sentence(t2, p2, r2);
        let score = 2.5 * f64::from(u8::from(same_p)) + 2.0 * f64::from(u8::from(same_r)) + 0.5 * f64::from(u8::from(same_t));
        (s1, s2, score)
    }
}

fn ner_sample(id: String, b: &Builder) -> Sample {
    let seq = tokenize(&b.text);
    let mut labels = vec![BioTag::O; seq.len()];
    for &(start, end, ty) in &b.spans {
        let mut first = true;
        for (i, tok) in seq.tokens.iter().enumerate() {
            if tok.start >= start && tok.end <= end {
                labels[i] = if first { BioTag::B(ty.into()) } else { BioTag::I(ty.into()) };
                first = false;
            }
        }
    }
    Sample { id, payload: Payload::Ner { tokens: seq.texts(), labels }, extra: Default::default() }
}

/// Generates `TEST_PER_TASK` + `TRAIN_PER_TASK` unique samples per task.
pub fn generate(seed: u64) -> SyntheticCorpus {
    let mut g = Gen { rng: SplitMix64::new(seed) };
    let total = TEST_PER_TASK + TRAIN_PER_TASK;
    let mut seen = std::collections::HashSet::new();
    let mut test = Vec::new();
    let mut train = Vec::new();
    for task in ["ner", "re", "ti", "ss"] {
        let mut made = 0;
        while made < total {
            let split = if made < TEST_PER_TASK { "test" } else { "train" };
            let n = if made < TEST_PER_TASK { made + 1 } else { made - TEST_PER_TASK + 1 };
            let id = format!("{task}-{split}-{n:04}");
            let (key, sample) = match task {
                "ner" => {
                    let b = g.ner();
                    (b.text.clone(), ner_sample(id, &b))
                }
                "re" => {
                    let (b, label) = g.re();
                    let entities = b
                        .spans
                        .iter()
                        .map(|&(start, end, ty)| EntityMention { start, end, ty: ty.to_string() })
                        .collect();
                    let payload = Payload::Re { text: b.text.clone(), entities, label: label.to_string() };
                    (b.text, Sample { id, payload, extra: Default::default() })
                }
                "ti" => {
                    let (premise, hypothesis, label) = g.ti();
                    let key = format!("{premise}\u{1F}{hypothesis}");
                    let payload = Payload::Ti { premise, hypothesis, label: label.to_string() };
                    (key, Sample { id, payload, extra: Default::default() })
                }
                _ => {
                    let (sentence1, sentence2, score) = g.ss();
                    let key = format!("{sentence1}\u{1F}{sentence2}");
                    let payload = Payload::Ss { sentence1, sentence2, score };
                    (key, Sample { id, payload, extra: Default::default() })
                }
            };
            if !seen.insert(format!("{task}\u{1F}{key}")) {
                continue;
            }
            if split == "test" {
                test.push(sample);
            } else {
                train.push(sample);
            }
            made += 1;
        }
    }
    SyntheticCorpus { test, train }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Task;

    #[test]
    fn committed_files_match_the_generator() {
        let c = generate(DEFAULT_SEED);
        assert_eq!(SyntheticCorpus::to_jsonl(&c.test), TEST_JSONL);
        assert_eq!(SyntheticCorpus::to_jsonl(&c.train), TRAIN_JSONL);
    }

    #[test]
    fn shape() {
        let test = bundled_test();
        assert_eq!(test.len(), 4 * TEST_PER_TASK);
        for task in [Task::Ner, Task::Re, Task::Ti, Task::Ss] {
            assert_eq!(test.iter().filter(|s| s.task() == task).count(), TEST_PER_TASK);
        }
        for s in &test {
            if let Payload::Re { text, entities, .. } = &s.payload {
                assert_eq!(entities.len(), 2);
                for e in entities {
                    assert!(!text[e.start..e.end].starts_with(' '));
                }
            }
        }
    }
}
