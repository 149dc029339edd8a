//! Closed-lexicon + suffix-rule part-of-speech tagger.
//!
//! Lookup order: closed word lists, then the verb lexicon (readings
//! disambiguated by the previous tag), then suffix rules, then `NOUN-SG`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenKind, TokenSeq};
use crate::resources::{VerbForm, VerbLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "NOUN-SG")]
    NounSg,
    #[serde(rename = "NOUN-PL")]
    NounPl,
    #[serde(rename = "PRONOUN-SG")]
    PronounSg,
    #[serde(rename = "PRONOUN-PL")]
    PronounPl,
    #[serde(rename = "VERB-BASE")]
    VerbBase,
    #[serde(rename = "VERB-3SG")]
    Verb3sg,
    #[serde(rename = "VERB-PAST")]
    VerbPast,
    #[serde(rename = "VERB-GERUND")]
    VerbGerund,
    #[serde(rename = "VERB-PART")]
    VerbPart,
    #[serde(rename = "AUX")]
    Aux,
    #[serde(rename = "DET")]
    Det,
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "ADV")]
    Adv,
    #[serde(rename = "PREP")]
    Prep,
    #[serde(rename = "CONJ")]
    Conj,
    #[serde(rename = "NUM")]
    Num,
    #[serde(rename = "PUNCT")]
    Punct,
    #[serde(rename = "OTHER")]
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 18] = [
        PosTag::NounSg,
        PosTag::NounPl,
        PosTag::PronounSg,
        PosTag::PronounPl,
        PosTag::VerbBase,
        PosTag::Verb3sg,
        PosTag::VerbPast,
        PosTag::VerbGerund,
        PosTag::VerbPart,
        PosTag::Aux,
        PosTag::Det,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Prep,
        PosTag::Conj,
        PosTag::Num,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::NounSg => "NOUN-SG",
            PosTag::NounPl => "NOUN-PL",
            PosTag::PronounSg => "PRONOUN-SG",
            PosTag::PronounPl => "PRONOUN-PL",
            PosTag::VerbBase => "VERB-BASE",
            PosTag::Verb3sg => "VERB-3SG",
            PosTag::VerbPast => "VERB-PAST",
            PosTag::VerbGerund => "VERB-GERUND",
            PosTag::VerbPart => "VERB-PART",
            PosTag::Aux => "AUX",
            PosTag::Det => "DET",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Prep => "PREP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, PosTag::NounSg | PosTag::NounPl | PosTag::PronounSg | PosTag::PronounPl)
    }

    pub fn is_plural(self) -> bool {
        matches!(self, PosTag::NounPl | PosTag::PronounPl)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown POS tag {s:?}"))
    }
}

pub(crate) const BE_FORMS: &[&str] = &["am", "is", "are", "was", "were", "be", "been", "being"];
pub(crate) const MODALS: &[&str] = &["will", "would", "can", "could", "may", "might", "shall", "should", "must"];
pub(crate) const DO_FORMS: &[&str] = &["do", "does", "did"];
const FINITE_AUX: &[&str] = &["is", "are", "was", "were", "has", "had", "will", "would", "can", "could", "may", "might", "should", "must"];
pub(crate) const HAVE_FORMS: &[&str] = &["have", "has", "had"];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any", "no", "another", "all",
    "both", "either", "neither", "such", "its", "his", "her", "their", "our", "my", "your", "whose", "several",
    "many", "few", "much", "more", "most", "other",
];
const PRONOUNS_SG: &[&str] = &[
    "he", "she", "it", "him", "himself", "herself", "itself", "someone", "anyone", "everyone", "nobody",
    "somebody", "anybody", "everybody", "something", "anything", "nothing", "everything", "one",
];
const PRONOUNS_PL: &[&str] = &["i", "me", "we", "us", "they", "them", "you", "themselves", "ourselves", "yourself"];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "to", "for", "with", "by", "from", "about", "into", "onto", "over", "under", "after",
    "before", "during", "without", "within", "between", "through", "throughout", "across", "along", "around",
    "among", "against", "toward", "towards", "upon", "via", "per", "since", "until", "despite", "except",
    "beside", "besides", "beyond", "near", "inside", "outside", "behind", "below", "above", "up", "down", "off",
    "out", "like", "as", "than", "following", "including", "regarding",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "because", "although", "though", "while", "if", "unless", "whereas",
    "when", "whether", "once",
];
const ADVERBS: &[&str] = &[
    "not", "never", "also", "very", "often", "always", "already", "still", "just", "then", "now", "there", "here",
    "again", "soon", "later", "subsequently", "currently", "recently", "previously", "initially", "today",
    "yesterday", "tomorrow", "well", "only", "even", "almost", "quite", "rather", "too", "however", "therefore",
    "finally", "ever", "ago", "twice", "again", "otherwise", "together", "home", "back", "away", "further",
];
const ADJECTIVES: &[&str] = &[
    "able", "severe", "mild", "acute", "chronic", "new", "old", "normal", "stable", "significant", "positive",
    "negative", "left", "right", "good", "poor", "high", "low", "large", "small", "same", "short", "long",
    "initial", "prior", "recent", "mild", "moderate", "clear", "soft", "warm", "dry", "afebrile", "alert",
    "awake", "elevated", "unremarkable", "unchanged", "intact", "free", "full", "first", "second", "third",
    "last", "next", "few", "bad", "better", "worse", "best", "worst", "young", "elderly", "due", "likely",
    "unlikely", "able", "unable", "tender", "nontender", "regular", "irregular", "minimal", "febrile",
];
/// Words the -al/-ly/-s suffix rules would mis-tag.
const NOUN_EXCEPTIONS: &[&str] = &[
    "hospital", "referral", "interval", "signal", "trial", "arrival", "family", "supply", "reply", "belly",
    "anomaly", "vital", "vitals", "status", "diagnosis", "prognosis", "sepsis", "stenosis", "thrombosis",
    "metastasis", "analysis", "dialysis", "virus", "abscess", "illness", "weakness", "shortness", "numbness",
    "dizziness", "stress", "pus", "ileus", "fetus", "urinalysis", "this", "gas", "bus", "access",
];
const IRREGULAR_PARTICIPLES: &[&str] = &[
    "given", "taken", "seen", "done", "gone", "shown", "known", "written", "eaten", "fallen", "spoken", "broken",
    "chosen", "driven", "forgotten", "begun", "drunk", "grown", "thrown", "worn", "undergone", "become", "arisen",
    "hidden", "ridden", "risen", "shaken", "woken", "swollen",
];
const NUMBER_WORDS: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty", "thirty", "forty", "fifty",
    "sixty", "seventy", "eighty", "ninety", "hundred", "thousand", "zero",
];
const OTHER_WORDS: &[&str] = &["who", "whom", "what", "which", "where", "how", "why", "there's"];

/// Tags every token. Total: each token receives exactly one tag.
pub fn pos_tag(seq: &TokenSeq, lex: &VerbLexicon) -> Vec<PosTag> {
    let mut tags: Vec<PosTag> = Vec::with_capacity(seq.len());
    for (i, tok) in seq.tokens.iter().enumerate() {
        let tag = match tok.kind {
            TokenKind::Punctuation => PosTag::Punct,
            TokenKind::Number => PosTag::Num,
            TokenKind::Word if tok.number_led => PosTag::Num,
            TokenKind::Word => {
                let prev = i.checked_sub(1).map(|p| (seq.tokens[p].text.to_lowercase(), tags[p]));
                // look past adverbs for auxiliaries ("has not been", "was also noted")
                let governor = (0..i)
                    .rev()
                    .find(|&p| tags[p] != PosTag::Adv)
                    .map(|p| (seq.tokens[p].text.to_lowercase(), tags[p]));
                let next_finite = seq.tokens.get(i + 1).is_some_and(|n| {
                    let nw = n.text.to_lowercase();
                    n.kind == TokenKind::Word
                        && (FINITE_AUX.contains(&nw.as_str())
                            || lex
                            .lookup(&n.text)
                            .iter()
                            .any(|(_, f)| matches!(f, VerbForm::Past | VerbForm::ThirdSingular)))
                });
                tag_word(&tok.text, prev.as_ref(), governor.as_ref(), next_finite, lex)
            }
        };
        tags.push(tag);
    }
    tags
}

fn in_list(list: &[&str], w: &str) -> bool {
    list.contains(&w)
}

fn tag_word(
    text: &str,
    prev: Option<&(String, PosTag)>,
    governor: Option<&(String, PosTag)>,
    next_finite: bool,
    lex: &VerbLexicon,
) -> PosTag {
    let w = text.to_lowercase();
    let w = w.as_str();

    if in_list(BE_FORMS, w) || in_list(MODALS, w) || in_list(DO_FORMS, w) || w == "cannot" {
        return PosTag::Aux;
    }
    // always verbs; whether one is auxiliary is left to clause analysis
    match w {
        "has" => return PosTag::Verb3sg,
        "had" => return PosTag::VerbPast,
        "have" => return PosTag::VerbBase,
        _ => {}
    }
    if in_list(PRONOUNS_PL, w) {
        return PosTag::PronounPl;
    }
    if in_list(PRONOUNS_SG, w) {
        return PosTag::PronounSg;
    }
    if in_list(DETERMINERS, w) {
        return PosTag::Det;
    }
    if in_list(PREPOSITIONS, w) {
        return PosTag::Prep;
    }
    if in_list(CONJUNCTIONS, w) {
        return PosTag::Conj;
    }
    if in_list(NUMBER_WORDS, w) {
        return PosTag::Num;
    }
    if in_list(OTHER_WORDS, w) {
        return PosTag::Other;
    }
    if in_list(ADVERBS, w) {
        return PosTag::Adv;
    }
    if in_list(ADJECTIVES, w) {
        return PosTag::Adj;
    }

    let prev_word = prev.map(|p| p.0.as_str());
    let prev_tag = prev.map(|p| p.1);
    let nominal_slot = matches!(prev_tag, Some(PosTag::Det | PosTag::Adj | PosTag::Num))
        || (prev_tag == Some(PosTag::Prep) && prev_word != Some("to"));
    let after_aux = governor.is_some_and(|(gw, gt)| {
        *gt == PosTag::Aux && (in_list(BE_FORMS, gw) || gw == "being") || in_list(HAVE_FORMS, gw)
    });
    let needs_base = prev_word == Some("to")
        || governor.is_some_and(|(gw, _)| in_list(MODALS, gw) || in_list(DO_FORMS, gw) || gw == "cannot");

    if in_list(IRREGULAR_PARTICIPLES, w) && !lex.lookup(w).iter().any(|(_, f)| *f == VerbForm::Base) {
        return if after_aux { PosTag::VerbPart } else { PosTag::Adj };
    }

    let readings = lex.lookup(w);
    if !readings.is_empty() {
        let has = |f: VerbForm| readings.iter().any(|(_, rf)| *rf == f);
        if needs_base && has(VerbForm::Base) {
            return PosTag::VerbBase;
        }
        if has(VerbForm::Past) && after_aux {
            return PosTag::VerbPart;
        }
        // head of a compound subject: "blood count revealed"
        let compound_head = matches!(prev_tag, Some(PosTag::NounSg | PosTag::NounPl)) && next_finite && !has(VerbForm::Past);
        if nominal_slot || compound_head {
            if has(VerbForm::Past) && !has(VerbForm::Base) {
                return PosTag::Adj;
            }
            return if has(VerbForm::ThirdSingular) { PosTag::NounPl } else { PosTag::NounSg };
        }
        if has(VerbForm::ThirdSingular) {
            return PosTag::Verb3sg;
        }
        if has(VerbForm::Past) && has(VerbForm::Base) {
            let singular_subject = matches!(prev_tag, Some(PosTag::NounSg | PosTag::PronounSg));
            return if singular_subject { PosTag::VerbPast } else { PosTag::VerbBase };
        }
        if has(VerbForm::Past) {
            return PosTag::VerbPast;
        }
        return PosTag::VerbBase;
    }

    if in_list(NOUN_EXCEPTIONS, w) {
        return if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("is") && !w.ends_with("us") && w != "this" {
            PosTag::NounPl
        } else {
            PosTag::NounSg
        };
    }
    let n = w.chars().count();
    if n > 4 && w.ends_with("ly") {
        return PosTag::Adv;
    }
    if n > 4 && w.ends_with("ing") {
        return if nominal_slot { PosTag::NounSg } else { PosTag::VerbGerund };
    }
    if n > 4 && w.ends_with("ed") {
        if after_aux {
            return PosTag::VerbPart;
        }
        return if nominal_slot { PosTag::Adj } else { PosTag::VerbPast };
    }
    const ADJ_SUFFIXES: &[&str] = &["ous", "ive", "ic", "ful", "less", "able", "ible", "ical", "al", "ary"];
    if n > 4 && ADJ_SUFFIXES.iter().any(|s| w.ends_with(s)) {
        return PosTag::Adj;
    }
    if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return PosTag::NounPl;
    }
    if w.chars().all(|c| c.is_alphabetic() || c == '-' || c == '\'' || c == '.') {
        PosTag::NounSg
    } else {
        PosTag::Other
    }
}
