use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditLevel {
    Char,
    Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    /// Token index in the pre-edit sequence.
    pub token: usize,
    /// Character index inside the token, for character-level edits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char: Option<usize>,
}

/// Structural effect of an edit on the token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TokenOp {
    /// Token text changed, count unchanged.
    Substitute { index: usize },
    Delete { index: usize },
    /// A copy of the token was inserted right after it.
    Duplicate { index: usize },
    /// Window `start..start + perm.len()`; slot `j` now holds old slot `perm[j]`.
    Reorder { start: usize, perm: Vec<usize> },
    /// `removed` tokens at `start` were replaced by `inserted` new ones.
    Splice { start: usize, removed: usize, inserted: usize },
}

/// Provenance record of one applied perturbation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub level: EditLevel,
    pub method: String,
    /// Sample field that was touched ("tokens", "text", "premise", ...).
    pub field: String,
    pub location: Location,
    pub before: String,
    pub after: String,
    pub op: TokenOp,
}

impl TokenOp {
    /// Change in token count.
    pub fn delta(&self) -> isize {
        match self {
            TokenOp::Substitute { .. } | TokenOp::Reorder { .. } => 0,
            TokenOp::Delete { .. } => -1,
            TokenOp::Duplicate { .. } => 1,
            TokenOp::Splice { removed, inserted, .. } => *inserted as isize - *removed as isize,
        }
    }

    /// Maps every post-edit token position to the pre-edit position it came
    /// from; new tokens map to the first token they replaced (or `None` for
    /// pure insertions).
    pub fn origins(&self, len_before: usize) -> Vec<Option<usize>> {
        let ident = |r: std::ops::Range<usize>| r.map(Some).collect::<Vec<_>>();
        match self {
            TokenOp::Substitute { .. } => ident(0..len_before),
            TokenOp::Delete { index } => {
                let mut v = ident(0..len_before);
                v.remove(*index);
                v
            }
            TokenOp::Duplicate { index } => {
                let mut v = ident(0..len_before);
                v.insert(index + 1, Some(*index));
                v
            }
            TokenOp::Reorder { start, perm } => {
                let mut v = ident(0..len_before);
                for (j, &p) in perm.iter().enumerate() {
                    v[start + j] = Some(start + p);
                }
                v
            }
            TokenOp::Splice { start, removed, inserted } => {
                let mut v = ident(0..len_before);
                let fill = if *removed > 0 { Some(*start) } else { None };
                v.splice(*start..start + removed, std::iter::repeat_n(fill, *inserted));
                v
            }
        }
    }
}
