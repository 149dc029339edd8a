//! The seven character-level edits. Every random choice is a parameter.

use crate::linguistics::morphology::match_case;
use crate::resources::{KeyboardMap, MisspellingTable};

use super::ApplyError;

fn chars(word: &str) -> Vec<char> {
    word.chars().collect()
}

fn interior(idx: usize, lo: usize, hi: usize, len: usize) -> Result<(), ApplyError> {
    if idx < lo || idx > hi {
        Err(ApplyError::OutOfRange { index: idx, len })
    } else {
        Ok(())
    }
}

/// Removes the character at `idx`; first and last characters are kept.
pub fn char_delete(word: &str, idx: usize) -> Result<String, ApplyError> {
    let mut c = chars(word);
    if c.len() < 3 {
        return Err(ApplyError::Ineligible(format!("{word:?} is shorter than three characters")));
    }
    interior(idx, 1, c.len() - 2, c.len())?;
    c.remove(idx);
    Ok(c.into_iter().collect())
}

/// Inserts `ch` before position `idx`, never at either end.
pub fn char_insert(word: &str, idx: usize, ch: char) -> Result<String, ApplyError> {
    let mut c = chars(word);
    if c.len() < 2 {
        return Err(ApplyError::Ineligible(format!("{word:?} has no interior position")));
    }
    if !ch.is_alphabetic() {
        return Err(ApplyError::Ineligible(format!("{ch:?} is not a letter")));
    }
    interior(idx, 1, c.len() - 1, c.len())?;
    c.insert(idx, ch);
    Ok(c.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LccMode {
    First,
    All,
}

fn toggle_case(c: char) -> String {
    if c.is_uppercase() {
        c.to_lowercase().collect()
    } else {
        c.to_uppercase().collect()
    }
}

fn cased(c: char) -> bool {
    c.is_uppercase() || c.is_lowercase()
}

/// Toggles the case of the first letter, or of every letter.
pub fn letter_case_change(word: &str, mode: LccMode) -> Result<String, ApplyError> {
    let first = word
        .char_indices()
        .find(|(_, c)| cased(*c))
        .ok_or_else(|| ApplyError::Ineligible(format!("{word:?} has no cased letter")))?
        .0;
    Ok(match mode {
        LccMode::First => {
            let c = word[first..].chars().next().expect("found above");
            format!("{}{}{}", &word[..first], toggle_case(c), &word[first + c.len_utf8()..])
        }
        LccMode::All => word.chars().map(|c| if cased(c) { toggle_case(c) } else { c.to_string() }).collect(),
    })
}

/// Replaces the word with its `choice`-th listed misspelling, keeping the
/// capitalization pattern of the input.
pub fn misspell(word: &str, choice: usize, table: &MisspellingTable) -> Result<String, ApplyError> {
    let variants = table.lookup(word).ok_or_else(|| ApplyError::NotInTable(word.to_string()))?;
    let v = variants.get(choice).ok_or(ApplyError::OutOfRange { index: choice, len: variants.len() })?;
    Ok(match_case(word, v))
}

/// Doubles the character at `idx`.
pub fn char_repeat(word: &str, idx: usize) -> Result<String, ApplyError> {
    let mut c = chars(word);
    if c.len() < 2 {
        return Err(ApplyError::Ineligible(format!("{word:?} is shorter than two characters")));
    }
    interior(idx, 0, c.len() - 1, c.len())?;
    c.insert(idx, c[idx]);
    Ok(c.into_iter().collect())
}

/// Replaces the letter at `idx` with `neighbor`, which must be adjacent to
/// it on the keyboard.
pub fn char_replace(word: &str, idx: usize, neighbor: char, map: &KeyboardMap) -> Result<String, ApplyError> {
    let mut c = chars(word);
    if idx >= c.len() {
        return Err(ApplyError::OutOfRange { index: idx, len: c.len() });
    }
    let allowed = map.neighbors(c[idx]).map_err(|_| ApplyError::Ineligible(format!("{:?} is not a letter", c[idx])))?;
    if !allowed.contains(&neighbor) {
        return Err(ApplyError::Ineligible(format!("{neighbor:?} is not adjacent to {:?}", c[idx])));
    }
    c[idx] = neighbor;
    Ok(c.into_iter().collect())
}

/// Swaps the characters at `idx` and `idx + 1`; both must be interior and
/// different.
pub fn char_swap(word: &str, idx: usize) -> Result<String, ApplyError> {
    let mut c = chars(word);
    if c.len() < 4 {
        return Err(ApplyError::Ineligible(format!("{word:?} has no interior pair")));
    }
    interior(idx, 1, c.len() - 3, c.len())?;
    if c[idx] == c[idx + 1] {
        return Err(ApplyError::Ineligible(format!("swapping {:?} with itself", c[idx])));
    }
    c.swap(idx, idx + 1);
    Ok(c.into_iter().collect())
}

/// Interior positions of `word` where [`char_swap`] changes the text.
pub fn swap_positions(word: &str) -> Vec<usize> {
    let c = chars(word);
    if c.len() < 4 {
        return Vec::new();
    }
    (1..=c.len() - 3).filter(|&i| c[i] != c[i + 1]).collect()
}
