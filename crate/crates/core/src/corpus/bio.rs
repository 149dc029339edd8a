use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::edit::{Edit, TokenOp};

/// One BIO tag: `O`, `B-type` or `I-type`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BioTag {
    O,
    B(String),
    I(String),
}

impl BioTag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            BioTag::O => None,
            BioTag::B(t) | BioTag::I(t) => Some(t),
        }
    }

    fn begin(ty: &str) -> Self {
        BioTag::B(ty.to_string())
    }

    fn inside(ty: &str) -> Self {
        BioTag::I(ty.to_string())
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(t) => write!(f, "B-{t}"),
            BioTag::I(t) => write!(f, "I-{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid BIO tag {0:?}")]
pub struct ParseBioError(pub String);

impl FromStr for BioTag {
    type Err = ParseBioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        match s.split_once('-') {
            Some(("B", ty)) if !ty.is_empty() => Ok(BioTag::B(ty.to_string())),
            Some(("I", ty)) if !ty.is_empty() => Ok(BioTag::I(ty.to_string())),
            _ => Err(ParseBioError(s.to_string())),
        }
    }
}

impl Serialize for BioTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position of the first `I-X` that does not continue an entity of type X.
pub fn first_violation(labels: &[BioTag]) -> Option<usize> {
    let mut prev: Option<&str> = None;
    for (i, tag) in labels.iter().enumerate() {
        if let BioTag::I(ty) = tag {
            if prev != Some(ty.as_str()) {
                return Some(i);
            }
        }
        prev = tag.entity_type();
    }
    None
}

pub fn is_well_formed(labels: &[BioTag]) -> bool {
    first_violation(labels).is_none()
}

/// Promotes every dangling `I-X` to `B-X`.
pub fn repair(labels: &mut [BioTag]) {
    let mut prev: Option<String> = None;
    for tag in labels.iter_mut() {
        if let BioTag::I(ty) = tag {
            if prev.as_deref() != Some(ty.as_str()) {
                *tag = BioTag::B(ty.clone());
            }
        }
        prev = tag.entity_type().map(str::to_string);
    }
}

/// Decoded entity mention: token span `[start, end)` and type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub ty: String,
}

/// Decodes well-formed BIO into entity spans.
pub fn decode(labels: &[BioTag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, tag) in labels.iter().enumerate() {
        match tag {
            BioTag::B(ty) => {
                spans.extend(open.take());
                open = Some(Span { start: i, end: i + 1, ty: ty.clone() });
            }
            BioTag::I(ty) => match open.as_mut() {
                Some(span) if &span.ty == ty => span.end = i + 1,
                _ => {
                    spans.extend(open.take());
                    open = Some(Span { start: i, end: i + 1, ty: ty.clone() });
                }
            },
            BioTag::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("edit references token {index} but the sequence has {len} tokens")]
    OutOfRange { index: usize, len: usize },
    #[error("labels are not well-formed BIO at position {0}")]
    Malformed(usize),
}

/// Replays token-count-changing edits over a label sequence so that labels
/// stay attached to their tokens. The result is always well-formed BIO.
pub fn align_ner_labels(labels: &[BioTag], edits: &[Edit]) -> Result<Vec<BioTag>, AlignError> {
    if let Some(i) = first_violation(labels) {
        return Err(AlignError::Malformed(i));
    }
    let mut out = labels.to_vec();
    for edit in edits {
        apply_op(&mut out, &edit.op)?;
    }
    Ok(out)
}

/// Applies one structural token operation to labels.
pub fn apply_op(labels: &mut Vec<BioTag>, op: &TokenOp) -> Result<(), AlignError> {
    let len = labels.len();
    let check = |index: usize, width: usize| {
        if index + width > len || (width == 0 && index > len) {
            Err(AlignError::OutOfRange { index: index + width.saturating_sub(1), len })
        } else {
            Ok(())
        }
    };
    match op {
        TokenOp::Substitute { index } => check(*index, 1)?,
        TokenOp::Delete { index } => {
            check(*index, 1)?;
            labels.remove(*index);
        }
        TokenOp::Duplicate { index } => {
            check(*index, 1)?;
            let dup = match &labels[*index] {
                BioTag::O => BioTag::O,
                BioTag::B(t) | BioTag::I(t) => BioTag::inside(t),
            };
            labels.insert(index + 1, dup);
        }
        TokenOp::Reorder { start, perm } => {
            check(*start, perm.len())?;
            let old: Vec<BioTag> = labels[*start..start + perm.len()].to_vec();
            let before_ty = start
                .checked_sub(1)
                .and_then(|p| labels[p].entity_type().map(str::to_string));
            let mut prev_ty: Option<String> = None;
            for (j, &p) in perm.iter().enumerate() {
                let moved = &old[p];
                let new = match moved.entity_type() {
                    None => BioTag::O,
                    Some(ty) => {
                        let continues = if j == 0 {
                            matches!(moved, BioTag::I(_)) && before_ty.as_deref() == Some(ty)
                        } else {
                            prev_ty.as_deref() == Some(ty)
                        };
                        if continues { BioTag::inside(ty) } else { BioTag::begin(ty) }
                    }
                };
                prev_ty = new.entity_type().map(str::to_string);
                labels[start + j] = new;
            }
        }
        TokenOp::Splice { start, removed, inserted } => {
            check(*start, *removed)?;
            let span = &labels[*start..start + removed];
            let new: Vec<BioTag> = if *removed > 0 {
                let first = span[0].entity_type();
                let uniform = first.filter(|ty| span.iter().all(|t| t.entity_type() == Some(ty)));
                // a span that continued an entity keeps continuing it
                let continues = matches!(span[0], BioTag::I(_));
                match uniform {
                    Some(ty) => (0..*inserted)
                        .map(|k| if k == 0 && !continues { BioTag::begin(ty) } else { BioTag::inside(ty) })
                        .collect(),
                    None => vec![BioTag::O; *inserted],
                }
            } else {
                // pure insertion: stays inside an entity only if it splits one
                let inside = match (start.checked_sub(1).map(|p| &labels[p]), labels.get(*start)) {
                    (Some(prev), Some(BioTag::I(ty))) if prev.entity_type() == Some(ty) => Some(ty.clone()),
                    _ => None,
                };
                match inside {
                    Some(ty) => vec![BioTag::I(ty); *inserted],
                    None => vec![BioTag::O; *inserted],
                }
            };
            labels.splice(*start..start + removed, new);
        }
    }
    repair(labels);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::edit::{EditLevel, Location};

    fn tags(s: &str) -> Vec<BioTag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    fn edit(op: TokenOp) -> Edit {
        Edit {
            level: EditLevel::Word,
            method: "word-delete".into(),
            field: "tokens".into(),
            location: Location { token: 0, char: None },
            before: "x".into(),
            after: String::new(),
            op,
        }
    }

    #[test]
    fn delete_promotes_following_inside() {
        let out = align_ner_labels(&tags("B-problem I-problem O"), &[edit(TokenOp::Delete { index: 0 })]).unwrap();
        assert_eq!(out, tags("B-problem O"));
    }

    #[test]
    fn repeat_duplicates_as_inside() {
        let out = align_ner_labels(&tags("O B-test O"), &[edit(TokenOp::Duplicate { index: 1 })]).unwrap();
        assert_eq!(out, tags("O B-test I-test O"));
    }

    #[test]
    fn swap_inside_window_repairs_prefixes() {
        let op = TokenOp::Reorder { start: 0, perm: vec![1, 0] };
        let out = align_ner_labels(&tags("B-problem I-problem"), &[edit(op)]).unwrap();
        assert_eq!(out, tags("B-problem I-problem"));
    }

    #[test]
    fn contraction_and_expansion() {
        let contract = TokenOp::Splice { start: 1, removed: 3, inserted: 1 };
        let out = align_ner_labels(&tags("O B-problem I-problem I-problem O"), &[edit(contract.clone())]).unwrap();
        assert_eq!(out, tags("O B-problem O"));
        let mixed = align_ner_labels(&tags("O B-problem I-problem B-test O"), &[edit(contract)]).unwrap();
        assert_eq!(mixed, tags("O O O"));
        let expand = TokenOp::Splice { start: 1, removed: 1, inserted: 3 };
        let out = align_ner_labels(&tags("O B-problem O"), &[edit(expand)]).unwrap();
        assert_eq!(out, tags("O B-problem I-problem I-problem O"));
    }

    #[test]
    fn out_of_range_edit_is_rejected() {
        let err = align_ner_labels(&tags("O O"), &[edit(TokenOp::Delete { index: 5 })]).unwrap_err();
        assert!(matches!(err, AlignError::OutOfRange { .. }));
    }

    #[test]
    fn every_permutation_of_four_token_windows_stays_well_formed() {
        let alphabet = ["O", "B-a", "I-a", "B-b", "I-b"];
        let perms = permutations(4);
        // brute force: every well-formed 5-label context, window at 0 and 1
        for code in 0..alphabet.len().pow(5) {
            let mut c = code;
            let labels: Vec<BioTag> = (0..5)
                .map(|_| {
                    let t = alphabet[c % alphabet.len()];
                    c /= alphabet.len();
                    t.parse().unwrap()
                })
                .collect();
            if !is_well_formed(&labels) {
                continue;
            }
            for start in 0..=1 {
                for perm in &perms {
                    let mut out = labels.clone();
                    apply_op(&mut out, &TokenOp::Reorder { start, perm: perm.clone() }).unwrap();
                    assert!(is_well_formed(&out), "{labels:?} {perm:?} -> {out:?}");
                    let types_in: Vec<_> = perm.iter().map(|&p| labels[start + p].entity_type()).collect();
                    let types_out: Vec<_> = out[start..start + 4].iter().map(|t| t.entity_type()).collect();
                    assert_eq!(types_in, types_out);
                }
            }
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn decode_spans() {
        let spans = decode(&tags("B-a I-a O B-b B-b I-b"));
        assert_eq!(spans.len(), 3);
        assert_eq!((spans[0].start, spans[0].end), (0, 2));
        assert_eq!((spans[2].start, spans[2].end), (4, 6));
    }
}
