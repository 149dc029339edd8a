//! The nine word-level edits over token sequences. Every random choice is a
//! parameter; each function returns the new sequence with its structural op.

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenOp, TokenSeq};
use crate::linguistics::{
    find_subject_verb, inflect_number, inflect_tense, pos_tag, toggle_negation, ClauseAnalysis, ClauseRewrite,
    Number, Tense, VerbFormClass,
};
use crate::linguistics::morphology::match_case;
use crate::resources::{AbbreviationTable, SynonymTable, VerbLexicon};

use super::ApplyError;

/// A word-level rewrite: new sequence, structural op, and the touched text.
pub type WordEdit = ClauseRewrite;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleWindow {
    pub start: usize,
    /// Slot `j` of the window receives old slot `perm[j]`; the window length is `perm.len()`.
    pub perm: Vec<usize>,
}

impl ShuffleWindow {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

fn check_index(seq: &TokenSeq, idx: usize) -> Result<(), ApplyError> {
    if idx >= seq.len() {
        Err(ApplyError::OutOfRange { index: idx, len: seq.len() })
    } else {
        Ok(())
    }
}

fn check_word(seq: &TokenSeq, idx: usize) -> Result<(), ApplyError> {
    check_index(seq, idx)?;
    if seq.tokens[idx].is_word() {
        Ok(())
    } else {
        Err(ApplyError::Ineligible(format!("{:?} is not a word", seq.tokens[idx].text)))
    }
}

fn pick<T: Clone>(items: &[T], choice: usize) -> Result<T, ApplyError> {
    items.get(choice).cloned().ok_or(ApplyError::OutOfRange { index: choice, len: items.len() })
}

fn substitute(seq: &TokenSeq, idx: usize, text: String) -> WordEdit {
    let mut out = seq.clone();
    out.set_text(idx, text.clone());
    WordEdit { op: TokenOp::Substitute { index: idx }, index: idx, before: seq.tokens[idx].text.clone(), after: text, seq: out }
}

fn splice(seq: &TokenSeq, start: usize, removed: usize, words: Vec<String>) -> WordEdit {
    let mut out = seq.clone();
    out.splice(start, removed, &words);
    WordEdit {
        op: TokenOp::Splice { start, removed, inserted: words.len() },
        index: start,
        before: seq.span_text(start, start + removed),
        after: words.join(" "),
        seq: out,
    }
}

/// Replaces the phrase `start..start + len` with its `choice`-th abbreviation.
pub fn replace_with_abbreviation(
    seq: &TokenSeq,
    start: usize,
    len: usize,
    choice: usize,
    table: &AbbreviationTable,
) -> Result<WordEdit, ApplyError> {
    if len == 0 || start + len > seq.len() {
        return Err(ApplyError::OutOfRange { index: start + len, len: seq.len() });
    }
    let phrase = &seq.texts()[start..start + len];
    let abbrs = table
        .abbreviations_of(phrase)
        .ok_or_else(|| ApplyError::NotInTable(phrase.join(" ")))?;
    Ok(splice(seq, start, len, vec![pick(abbrs, choice)?]))
}

/// Replaces the abbreviation at `idx` with its `choice`-th expansion.
pub fn expand_abbreviation(seq: &TokenSeq, idx: usize, choice: usize, table: &AbbreviationTable) -> Result<WordEdit, ApplyError> {
    check_index(seq, idx)?;
    let pairs = table.expansions_of(&seq.tokens[idx].text);
    if pairs.is_empty() {
        return Err(ApplyError::NotInTable(seq.tokens[idx].text.clone()));
    }
    let pair = pick(&pairs, choice)?;
    Ok(splice(seq, idx, 1, pair.tokens.clone()))
}

pub fn word_delete(seq: &TokenSeq, idx: usize) -> Result<WordEdit, ApplyError> {
    check_word(seq, idx)?;
    if seq.word_count() < 2 {
        return Err(ApplyError::Ineligible("cannot delete the last remaining word".into()));
    }
    let mut out = seq.clone();
    out.remove(idx);
    Ok(WordEdit {
        op: TokenOp::Delete { index: idx },
        index: idx,
        before: seq.tokens[idx].text.clone(),
        after: String::new(),
        seq: out,
    })
}

/// Reorders the tokens of a window; the result must differ from the input.
pub fn shuffle_window(seq: &TokenSeq, window: &ShuffleWindow) -> Result<WordEdit, ApplyError> {
    let m = window.len();
    if seq.word_count() < 3 {
        return Err(ApplyError::Ineligible("word order needs at least three words".into()));
    }
    if m < 2 || m + 1 > seq.len() || window.start + m > seq.len() {
        return Err(ApplyError::OutOfRange { index: window.start + m, len: seq.len() });
    }
    let mut seen = vec![false; m];
    for &p in &window.perm {
        if p >= m || std::mem::replace(&mut seen[p], true) {
            return Err(ApplyError::Ineligible("window order is not a permutation".into()));
        }
    }
    let mut out = seq.clone();
    out.permute(window.start, &window.perm);
    if out.texts() == seq.texts() {
        return Err(ApplyError::Ineligible("reordering leaves the text unchanged".into()));
    }
    let end = window.start + m;
    Ok(WordEdit {
        op: TokenOp::Reorder { start: window.start, perm: window.perm.clone() },
        index: window.start,
        before: seq.span_text(window.start, end),
        after: out.span_text(window.start, end),
        seq: out,
    })
}

pub fn word_repeat(seq: &TokenSeq, idx: usize) -> Result<WordEdit, ApplyError> {
    check_word(seq, idx)?;
    let mut out = seq.clone();
    out.duplicate(idx);
    let text = &seq.tokens[idx].text;
    Ok(WordEdit {
        op: TokenOp::Duplicate { index: idx },
        index: idx,
        before: text.clone(),
        after: format!("{text} {text}"),
        seq: out,
    })
}

/// Replaces the word at `idx` with its `choice`-th synonym, keeping its casing.
pub fn replace_with_synonym(seq: &TokenSeq, idx: usize, choice: usize, table: &SynonymTable) -> Result<WordEdit, ApplyError> {
    check_word(seq, idx)?;
    let word = &seq.tokens[idx].text;
    let syns = table.lookup(word).ok_or_else(|| ApplyError::NotInTable(word.clone()))?;
    let syn = match_case(word, &pick(syns, choice)?);
    let words: Vec<String> = syn.split_whitespace().map(str::to_string).collect();
    Ok(if words.len() == 1 { substitute(seq, idx, syn) } else { splice(seq, idx, 1, words) })
}

/// First-clause analysis used by the three clause-level methods.
pub fn analyze(seq: &TokenSeq, lex: &VerbLexicon) -> Result<ClauseAnalysis, ApplyError> {
    Ok(find_subject_verb(seq, &pos_tag(seq, lex))?)
}

pub fn negation_perturb(seq: &TokenSeq, lex: &VerbLexicon) -> Result<WordEdit, ApplyError> {
    let a = analyze(seq, lex)?;
    Ok(toggle_negation(seq, &a, lex)?)
}

/// Flips the agreement of the finite verb of the first clause ("has" ↔ "have").
pub fn spv_perturb(seq: &TokenSeq, lex: &VerbLexicon) -> Result<WordEdit, ApplyError> {
    let a = analyze(seq, lex)?;
    let i = a.finite_index();
    let verb = &seq.tokens[i].text;
    let target = match (a.verb_form, verb.to_lowercase().as_str()) {
        (VerbFormClass::Present3sg, _) | (VerbFormClass::Past, "was") => Number::Plural,
        (VerbFormClass::PresentBase, _) | (VerbFormClass::Past, "were") => Number::Singular,
        (VerbFormClass::Past, _) => {
            return Err(ApplyError::Ineligible(format!("past form {verb:?} does not agree in number")))
        }
    };
    let new = inflect_number(verb, target, lex).map_err(|e| ApplyError::Ineligible(e.to_string()))?;
    if &new == verb {
        return Err(ApplyError::Ineligible(format!("{verb:?} has no other agreement form")));
    }
    Ok(substitute(seq, i, new))
}

/// Flips the tense of the finite verb of the first clause, keeping agreement
/// with the subject.
pub fn tense_perturb(seq: &TokenSeq, lex: &VerbLexicon) -> Result<WordEdit, ApplyError> {
    let a = analyze(seq, lex)?;
    let i = a.finite_index();
    let verb = &seq.tokens[i].text;
    let target = match a.verb_form {
        VerbFormClass::Past => Tense::Present,
        _ => Tense::Past,
    };
    let new = inflect_tense(verb, target, a.subject_number, lex).map_err(|e| ApplyError::Ineligible(e.to_string()))?;
    if &new == verb {
        return Err(ApplyError::Ineligible(format!("{verb:?} has no other tense form")));
    }
    Ok(substitute(seq, i, new))
}
