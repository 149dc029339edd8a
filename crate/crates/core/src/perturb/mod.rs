//! The sixteen perturbation methods.
//!
//! [`char_level`] and [`word_level`] hold deterministic apply functions that
//! take every random choice as a parameter; [`engine`] draws those choices
//! from a per-sample seeded RNG, enforces eligibility and the PPS budget, and
//! records provenance.

pub mod char_level;
pub mod engine;
pub mod rng;
pub mod word_level;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EditLevel;
use crate::linguistics::{ClauseError, InflectError};

pub use char_level::LccMode;
pub use engine::{
    perturb_corpus, perturb_sample, read_perturbed, write_perturbed, NotApplicable, PerturbOutcome, PerturbationSpec,
    PerturbedSample, Review, ReviewStatus,
};
pub use word_level::{ShuffleWindow, WordEdit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CharDelete,
    CharInsert,
    Lcc,
    Cmw,
    CharRepeat,
    CharReplace,
    CharSwap,
    Rwa,
    Ae,
    WordDelete,
    Negation,
    WordOrder,
    WordRepeat,
    Rws,
    Spv,
    VerbTense,
}

impl Method {
    pub const ALL: [Method; 16] = [
        Method::CharDelete,
        Method::CharInsert,
        Method::Lcc,
        Method::Cmw,
        Method::CharRepeat,
        Method::CharReplace,
        Method::CharSwap,
        Method::Rwa,
        Method::Ae,
        Method::WordDelete,
        Method::Negation,
        Method::WordOrder,
        Method::WordRepeat,
        Method::Rws,
        Method::Spv,
        Method::VerbTense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CharDelete => "char-delete",
            Method::CharInsert => "char-insert",
            Method::Lcc => "lcc",
            Method::Cmw => "cmw",
            Method::CharRepeat => "char-repeat",
            Method::CharReplace => "char-replace",
            Method::CharSwap => "char-swap",
            Method::Rwa => "rwa",
            Method::Ae => "ae",
            Method::WordDelete => "word-delete",
            Method::Negation => "negation",
            Method::WordOrder => "word-order",
            Method::WordRepeat => "word-repeat",
            Method::Rws => "rws",
            Method::Spv => "spv",
            Method::VerbTense => "verb-tense",
        }
    }

    pub fn level(self) -> EditLevel {
        if (self as usize) < 7 {
            EditLevel::Char
        } else {
            EditLevel::Word
        }
    }

    /// Methods whose output may no longer mean what the input meant; their
    /// samples need human review before scoring.
    pub fn is_meaning_risk(self) -> bool {
        matches!(self, Method::WordDelete | Method::Negation | Method::WordOrder | Method::Rws)
    }

    /// Methods applied at most once per text field (first clause only).
    pub fn is_clause_level(self) -> bool {
        matches!(self, Method::Negation | Method::Spv | Method::VerbTense)
    }

    pub fn of_level(level: EditLevel) -> impl Iterator<Item = Method> {
        Method::ALL.into_iter().filter(move |m| m.level() == level)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("ineligible target: {0}")]
    Ineligible(String),
    #[error("position {index} out of range (length {len})")]
    OutOfRange { index: usize, len: usize },
    #[error("{0:?} is not in the resource table")]
    NotInTable(String),
    #[error(transparent)]
    Clause(#[from] ClauseError),
}

impl From<InflectError> for ApplyError {
    fn from(e: InflectError) -> Self {
        ApplyError::Ineligible(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_table() {
        assert_eq!(Method::of_level(EditLevel::Char).count(), 7);
        assert_eq!(Method::of_level(EditLevel::Word).count(), 9);
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_value(m).unwrap(), m.name());
        }
        let risky: Vec<_> = Method::ALL.into_iter().filter(|m| m.is_meaning_risk()).map(Method::name).collect();
        assert_eq!(risky, ["word-delete", "negation", "word-order", "rws"]);
    }
}
