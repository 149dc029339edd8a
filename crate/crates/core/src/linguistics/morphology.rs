//! English verb suffix rules used for regular verbs and unknown words.

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn consonant_y(word: &str) -> bool {
    let mut rev = word.chars().rev();
    matches!((rev.next(), rev.next()), (Some('y'), Some(c)) if !is_vowel(c))
}

fn sibilant(word: &str) -> bool {
    ["s", "x", "z", "ch", "sh"].iter().any(|s| word.ends_with(s))
}

/// Third-person singular present: -es after sibilants, consonant+y → -ies, else -s.
pub fn third_singular(base: &str) -> String {
    if sibilant(base) {
        format!("{base}es")
    } else if consonant_y(base) {
        format!("{}ies", &base[..base.len() - 1])
    } else {
        format!("{base}s")
    }
}

/// Regular past: -d after e, consonant+y → -ied, else -ed.
pub fn past_regular(base: &str) -> String {
    if base.ends_with('e') {
        format!("{base}d")
    } else if consonant_y(base) {
        format!("{}ied", &base[..base.len() - 1])
    } else {
        format!("{base}ed")
    }
}

/// Inverse of [`third_singular`]; `None` if the word has no -s ending.
pub fn base_from_third(word: &str) -> Option<String> {
    if let Some(stem) = word.strip_suffix("ies") {
        if !stem.is_empty() {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        // "infuses", "catheterizes": a single s/z after a vowel belongs to a silent-e base
        let mut rev = stem.chars().rev();
        if let (Some('s' | 'z'), Some(prev)) = (rev.next(), rev.next()) {
            if is_vowel(prev) {
                return Some(format!("{stem}e"));
            }
        }
        if sibilant(stem) {
            return Some(stem.to_string());
        }
    }
    match word.strip_suffix('s') {
        Some(stem) if !stem.is_empty() && !stem.ends_with('s') => Some(stem.to_string()),
        _ => None,
    }
}

/// Re-applies the casing pattern of `model` to `word`: all-caps stays
/// all-caps, a capitalized first letter stays capitalized.
pub fn match_case(model: &str, word: &str) -> String {
    let letters: Vec<char> = model.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return word.to_uppercase();
    }
    match model.chars().next() {
        Some(c) if c.is_uppercase() => {
            let mut chars = word.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => word.to_string(),
    }
}
