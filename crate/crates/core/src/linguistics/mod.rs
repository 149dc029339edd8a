//! Rule-based English analysis: POS tagging, subject/verb detection and verb
//! inflection, all driven by the bundled verb lexicon.

pub mod clause;
pub mod inflect;
pub mod morphology;
pub mod tagger;

pub use clause::{find_subject_verb, toggle_negation, ClauseAnalysis, ClauseError, ClauseRewrite, VerbFormClass};
pub use inflect::{base_form, inflect_number, inflect_tense, InflectError, Number, Tense};
pub use tagger::{pos_tag, PosTag};
