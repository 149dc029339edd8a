//! First-clause subject/verb analysis and negation toggling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::inflect::{base_form, inflect_tense, InflectError, Number, Tense};
use super::morphology::match_case;
use super::tagger::{PosTag, BE_FORMS, DO_FORMS, HAVE_FORMS, MODALS};
use crate::corpus::{TokenOp, TokenSeq};
use crate::resources::VerbLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerbFormClass {
    Present3sg,
    PresentBase,
    Past,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseAnalysis {
    pub subject_index: usize,
    pub subject_number: Number,
    /// Main (lexical) verb of the clause; the copula itself for "was agreeable".
    pub verb_index: usize,
    /// Form of the finite verb (the auxiliary when there is one).
    pub verb_form: VerbFormClass,
    pub aux_index: Option<usize>,
    pub negated: bool,
}

impl ClauseAnalysis {
    /// The token that carries tense and agreement.
    pub fn finite_index(&self) -> usize {
        self.aux_index.unwrap_or(self.verb_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("no finite verb")]
    NoFiniteVerb,
    #[error("no subject before the first finite verb")]
    NoSubject,
    #[error("contracted negation is not supported")]
    Contraction,
    #[error(transparent)]
    Inflect(#[from] InflectError),
}

fn lower(seq: &TokenSeq, i: usize) -> String {
    seq.tokens[i].text.to_lowercase()
}

fn is_finite(seq: &TokenSeq, tags: &[PosTag], i: usize) -> bool {
    let w = lower(seq, i);
    match tags[i] {
        PosTag::Verb3sg | PosTag::VerbPast => true,
        PosTag::Aux => !matches!(w.as_str(), "be" | "been" | "being"),
        PosTag::VerbBase => {
            let governor = (0..i).rev().find(|&p| tags[p] != PosTag::Adv);
            match governor {
                None => false,
                Some(p) => {
                    let g = lower(seq, p);
                    g != "to" && tags[p] != PosTag::Aux && tags[p] != PosTag::Prep
                }
            }
        }
        _ => false,
    }
}

fn form_class(word: &str, tag: PosTag) -> VerbFormClass {
    match word {
        "is" | "has" | "does" => VerbFormClass::Present3sg,
        "am" | "are" | "have" | "do" => VerbFormClass::PresentBase,
        "was" | "were" | "had" | "did" | "would" | "could" | "might" | "should" => VerbFormClass::Past,
        "will" | "can" | "may" | "shall" | "must" | "cannot" => VerbFormClass::PresentBase,
        _ => match tag {
            PosTag::Verb3sg => VerbFormClass::Present3sg,
            PosTag::VerbPast => VerbFormClass::Past,
            _ => VerbFormClass::PresentBase,
        },
    }
}

fn clause_boundary(tag: PosTag, word: &str) -> bool {
    tag == PosTag::Punct && matches!(word, "," | ";" | ":" | "." | "(" | ")")
        || tag == PosTag::Conj
        || matches!(tag, PosTag::Verb3sg | PosTag::VerbPast | PosTag::VerbBase | PosTag::Aux)
}

/// Head of the noun group before `before`, hopping back over prepositional
/// phrases ("the results of the tests show" → "results").
fn find_subject(seq: &TokenSeq, tags: &[PosTag], before: usize) -> Option<usize> {
    let mut head = (0..before).rev().find(|&i| tags[i].is_nominal())?;
    // nothing but adverbs, modifiers and nouns may sit between head and verb
    if (head + 1..before).any(|i| !matches!(tags[i], PosTag::Adv) && !tags[i].is_nominal()) {
        let blocked = (head + 1..before).any(|i| clause_boundary(tags[i], &lower(seq, i)));
        if blocked {
            return None;
        }
    }
    loop {
        let mut start = head;
        while start > 0 && matches!(tags[start - 1], PosTag::Det | PosTag::Adj | PosTag::Num | PosTag::NounSg | PosTag::NounPl) {
            start -= 1;
        }
        if start == 0 || tags[start - 1] != PosTag::Prep || lower(seq, start - 1) == "to" {
            return Some(head);
        }
        let mut p = start - 1;
        let earlier = loop {
            if p == 0 {
                break None;
            }
            p -= 1;
            if tags[p].is_nominal() {
                break Some(p);
            }
            if clause_boundary(tags[p], &lower(seq, p)) {
                break None;
            }
        };
        match earlier {
            Some(e) => head = e,
            None => return Some(head),
        }
    }
}

/// Subject, first finite verb, auxiliary and polarity of the first clause.
pub fn find_subject_verb(seq: &TokenSeq, tags: &[PosTag]) -> Result<ClauseAnalysis, ClauseError> {
    let finite = (0..seq.len())
        .find(|&i| is_finite(seq, tags, i))
        .ok_or(ClauseError::NoFiniteVerb)?;
    let subject_index = find_subject(seq, tags, finite).ok_or(ClauseError::NoSubject)?;
    let subject_number = if tags[subject_index].is_plural() { Number::Plural } else { Number::Singular };

    let fw = lower(seq, finite);
    if fw.ends_with("n't") || fw == "cannot" {
        return Err(ClauseError::Contraction);
    }
    let verb_form = form_class(&fw, tags[finite]);

    // tokens after the finite verb, skipping adverbs and "not"
    let mut negated = false;
    let mut next = finite + 1;
    while next < seq.len() && tags[next] == PosTag::Adv {
        if lower(seq, next) == "not" {
            negated = true;
        }
        next += 1;
    }
    let next_is = |pred: &dyn Fn(PosTag, &str) -> bool| next < seq.len() && pred(tags[next], &lower(seq, next));

    let is_aux_word = BE_FORMS.contains(&fw.as_str()) || MODALS.contains(&fw.as_str()) || DO_FORMS.contains(&fw.as_str());
    let have_aux = HAVE_FORMS.contains(&fw.as_str())
        && next_is(&|t, w| matches!(t, PosTag::VerbPart | PosTag::VerbPast) || w == "been" || w == "got");

    let (aux_index, verb_index) = if is_aux_word || have_aux {
        // main verb: first verb after the auxiliary chain, else the auxiliary itself (copula)
        let mut j = next;
        while j < seq.len()
            && (tags[j] == PosTag::Adv || (tags[j] == PosTag::Aux && matches!(lower(seq, j).as_str(), "be" | "been" | "being")))
        {
            if lower(seq, j) == "not" {
                negated = true;
            }
            j += 1;
        }
        let main = (j < seq.len()
            && matches!(tags[j], PosTag::VerbBase | PosTag::VerbPart | PosTag::VerbPast | PosTag::VerbGerund | PosTag::Verb3sg))
        .then_some(j);
        (Some(finite), main.unwrap_or(finite))
    } else {
        (None, finite)
    };

    Ok(ClauseAnalysis { subject_index, subject_number, verb_index, verb_form, aux_index, negated })
}

/// Result of a clause rewrite: the new sequence plus its structural edit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseRewrite {
    pub seq: TokenSeq,
    pub op: TokenOp,
    /// Index of the first token touched in the input sequence.
    pub index: usize,
    pub before: String,
    pub after: String,
}

/// Negates a positive first clause or removes the negation of a negative one.
pub fn toggle_negation(seq: &TokenSeq, analysis: &ClauseAnalysis, lex: &VerbLexicon) -> Result<ClauseRewrite, ClauseError> {
    let finite = analysis.finite_index();
    if !analysis.negated {
        return Ok(match analysis.aux_index {
            Some(aux) => {
                let mut out = seq.clone();
                out.splice(aux + 1, 0, &["not".to_string()]);
                ClauseRewrite {
                    op: TokenOp::Splice { start: aux + 1, removed: 0, inserted: 1 },
                    index: aux,
                    before: seq.tokens[aux].text.clone(),
                    after: format!("{} not", seq.tokens[aux].text),
                    seq: out,
                }
            }
            None => {
                let verb = &seq.tokens[finite].text;
                let support = match analysis.verb_form {
                    VerbFormClass::Past => "did",
                    VerbFormClass::Present3sg => "does",
                    VerbFormClass::PresentBase => "do",
                };
                let base = base_form(verb, lex)?;
                let words = vec![match_case(verb, support), "not".to_string(), base];
                let after = words.join(" ");
                let mut out = seq.clone();
                out.splice(finite, 1, &words);
                ClauseRewrite {
                    op: TokenOp::Splice { start: finite, removed: 1, inserted: 3 },
                    index: finite,
                    before: verb.clone(),
                    after,
                    seq: out,
                }
            }
        });
    }

    let not_index = (finite + 1..seq.len())
        .take_while(|&i| i <= analysis.verb_index.max(finite + 1))
        .find(|&i| lower(seq, i) == "not")
        .ok_or(ClauseError::NoFiniteVerb)?;
    let aux_word = lower(seq, finite);
    let collapsible = DO_FORMS.contains(&aux_word.as_str())
        && not_index == finite + 1
        && analysis.verb_index == not_index + 1;
    if collapsible {
        let aux_text = &seq.tokens[finite].text;
        let main = &seq.tokens[analysis.verb_index].text;
        let restored = match aux_word.as_str() {
            "did" => inflect_tense(main, Tense::Past, analysis.subject_number, lex)?,
            "does" => inflect_tense(main, Tense::Present, Number::Singular, lex)?,
            _ => inflect_tense(main, Tense::Present, Number::Plural, lex)?,
        };
        let restored = match_case(aux_text, &restored);
        let mut out = seq.clone();
        out.splice(finite, 3, std::slice::from_ref(&restored));
        Ok(ClauseRewrite {
            op: TokenOp::Splice { start: finite, removed: 3, inserted: 1 },
            index: finite,
            before: seq.span_text(finite, finite + 3),
            after: restored,
            seq: out,
        })
    } else {
        let mut out = seq.clone();
        out.remove(not_index);
        Ok(ClauseRewrite {
            op: TokenOp::Delete { index: not_index },
            index: not_index,
            before: "not".to_string(),
            after: String::new(),
            seq: out,
        })
    }
}
