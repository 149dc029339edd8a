use thiserror::Error;

use super::morphology::{base_from_third, match_case, past_regular, third_singular};
use crate::resources::{VerbForm, VerbLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Singular,
    Plural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tense {
    Present,
    Past,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InflectError {
    #[error("{0:?} is not a present-tense verb")]
    NotPresent(String),
    #[error("{0:?} has the same form for every subject number")]
    NumberInvariant(String),
    #[error("no {1} form known for {0:?}")]
    UnknownForm(String, &'static str),
}

const MODAL_PAIRS: &[(&str, &str)] = &[("will", "would"), ("can", "could"), ("may", "might"), ("shall", "should")];

/// Agreement form of a present-tense verb for a subject of the given number.
pub fn inflect_number(verb: &str, target: Number, lex: &VerbLexicon) -> Result<String, InflectError> {
    let w = verb.to_lowercase();
    let out = match w.as_str() {
        "is" | "am" | "are" => match target {
            Number::Singular => "is".to_string(),
            Number::Plural => "are".to_string(),
        },
        "was" | "were" => match target {
            Number::Singular => "was".to_string(),
            Number::Plural => "were".to_string(),
        },
        _ if super::tagger::MODALS.contains(&w.as_str()) || w == "cannot" => {
            return Err(InflectError::NumberInvariant(verb.to_string()))
        }
        _ => {
            let readings = lex.lookup(&w);
            let present = readings
                .iter()
                .find(|(_, f)| matches!(f, VerbForm::Base | VerbForm::ThirdSingular));
            match (present, readings.is_empty()) {
                (Some((entry, _)), _) => match target {
                    Number::Singular => entry.third_singular.clone(),
                    Number::Plural => entry.plural.clone(),
                },
                (None, false) => return Err(InflectError::NotPresent(verb.to_string())),
                (None, true) => {
                    if w.ends_with("ed") {
                        return Err(InflectError::NotPresent(verb.to_string()));
                    }
                    match (target, base_from_third(&w)) {
                        (Number::Plural, Some(base)) => base,
                        (Number::Plural, None) => w.clone(),
                        (Number::Singular, Some(_)) => w.clone(),
                        (Number::Singular, None) => third_singular(&w),
                    }
                }
            }
        }
    };
    Ok(match_case(verb, &out))
}

/// Converts a finite verb to the target tense, keeping agreement with a
/// subject of `number`.
pub fn inflect_tense(verb: &str, target: Tense, number: Number, lex: &VerbLexicon) -> Result<String, InflectError> {
    let w = verb.to_lowercase();
    let out = match (w.as_str(), target) {
        ("is" | "am", Tense::Past) => "was".to_string(),
        ("are", Tense::Past) => "were".to_string(),
        ("was" | "were", Tense::Present) => match number {
            Number::Singular => "is".to_string(),
            Number::Plural => "are".to_string(),
        },
        ("is" | "am" | "are", Tense::Present) | ("was" | "were", Tense::Past) => w.clone(),
        _ if w == "must" || w == "cannot" => return Err(InflectError::UnknownForm(verb.to_string(), "other-tense")),
        _ if MODAL_PAIRS.iter().any(|(p, q)| *p == w || *q == w) => {
            let (present, past) = MODAL_PAIRS.iter().find(|(p, q)| *p == w || *q == w).copied().unwrap();
            match target {
                Tense::Present => present.to_string(),
                Tense::Past => past.to_string(),
            }
        }
        _ => {
            let readings = lex.lookup(&w);
            let want = |f: VerbForm| readings.iter().find(|(_, rf)| *rf == f).map(|(e, _)| *e);
            match target {
                Tense::Past => {
                    if let Some(e) = want(VerbForm::Base).or_else(|| want(VerbForm::ThirdSingular)) {
                        e.past.clone()
                    } else if let Some(e) = want(VerbForm::Past) {
                        e.past.clone()
                    } else {
                        let base = base_from_third(&w).unwrap_or_else(|| w.clone());
                        past_regular(&base)
                    }
                }
                Tense::Present => match want(VerbForm::Past).or_else(|| {
                    want(VerbForm::Base).or_else(|| want(VerbForm::ThirdSingular))
                }) {
                    Some(e) => match number {
                        Number::Singular => e.third_singular.clone(),
                        Number::Plural => e.plural.clone(),
                    },
                    None => return Err(InflectError::UnknownForm(verb.to_string(), "present")),
                },
            }
        }
    };
    Ok(match_case(verb, &out))
}

/// Base form of a finite or base verb, for do-support ("developed" → "develop").
pub fn base_form(verb: &str, lex: &VerbLexicon) -> Result<String, InflectError> {
    let w = verb.to_lowercase();
    if let Some((entry, _)) = lex.lookup(&w).first() {
        return Ok(entry.base.clone());
    }
    if w.ends_with("ed") {
        return Err(InflectError::UnknownForm(verb.to_string(), "base"));
    }
    Ok(base_from_third(&w).unwrap_or(w))
}
