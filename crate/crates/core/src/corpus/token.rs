//! Whitespace-preserving tokenizer.
//!
//! A [`TokenSeq`] keeps the whitespace that follows every token verbatim, so
//! any edit to one token leaves the rest of the text byte-for-byte intact and
//! `detokenize(tokenize(t)) == t` holds for every input.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offset of the first byte of `text` in the detokenized string.
    pub start: usize,
    /// Byte offset one past the last byte of `text`.
    pub end: usize,
    pub kind: TokenKind,
    /// Word token that starts with a digit ("70s", "2nd").
    pub number_led: bool,
    /// Whitespace between this token and the next one (or end of text).
    pub trailing: String,
}

impl Token {
    pub fn new(text: impl Into<String>, trailing: impl Into<String>) -> Self {
        let text = text.into();
        let (kind, number_led) = classify(&text);
        Token {
            end: text.len(),
            text,
            start: 0,
            kind,
            number_led,
            trailing: trailing.into(),
        }
    }

    /// Word token with at least one letter: the unit every perturbation targets.
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word && self.text.chars().any(char::is_alphabetic)
    }

    /// Eligible for character-level edits: a word that is not number-led.
    pub fn is_char_target(&self) -> bool {
        self.is_word() && !self.number_led
    }
}

/// Kind of a token by its characters.
pub fn classify(text: &str) -> (TokenKind, bool) {
    let has_letter = text.chars().any(char::is_alphabetic);
    let has_digit = text.chars().any(|c| c.is_ascii_digit());
    if has_letter {
        let led = text.chars().next().is_some_and(|c| c.is_ascii_digit());
        (TokenKind::Word, led)
    } else if has_digit {
        (TokenKind::Number, false)
    } else if text.chars().all(is_punct) {
        (TokenKind::Punctuation, false)
    } else {
        (TokenKind::Word, false)
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    /// Whitespace before the first token.
    pub leading: String,
    pub tokens: Vec<Token>,
}

impl TokenSeq {
    /// Builds a sequence from pre-split tokens joined by single spaces (NER input).
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        let n = words.len();
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token::new(w.as_ref(), if i + 1 < n { " " } else { "" }))
            .collect();
        let mut seq = TokenSeq {
            leading: String::new(),
            tokens,
        };
        seq.reindex();
        seq
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word()).count()
    }

    /// Recomputes offsets and kinds after tokens were edited.
    pub fn reindex(&mut self) {
        let mut pos = self.leading.len();
        for tok in &mut self.tokens {
            let (kind, led) = classify(&tok.text);
            tok.kind = kind;
            tok.number_led = led;
            tok.start = pos;
            tok.end = pos + tok.text.len();
            pos = tok.end + tok.trailing.len();
        }
    }

    /// Replaces the text of one token in place.
    pub fn set_text(&mut self, index: usize, text: impl Into<String>) {
        self.tokens[index].text = text.into();
        self.reindex();
    }

    /// Removes one token. The whitespace that separated it from its neighbours
    /// collapses to a single gap: if the removed token was glued to the next
    /// one ("pain."), the previous token takes the empty gap instead.
    pub fn remove(&mut self, index: usize) {
        let removed = self.tokens.remove(index);
        if index > 0 && removed.trailing.is_empty() {
            self.tokens[index - 1].trailing.clear();
        } else if index > 0 && index == self.tokens.len() {
            self.tokens[index - 1].trailing = removed.trailing;
        }
        self.reindex();
    }

    /// Inserts a copy of token `index` right after it, separated by one space.
    pub fn duplicate(&mut self, index: usize) {
        let old_gap = std::mem::replace(&mut self.tokens[index].trailing, " ".to_string());
        let mut copy = self.tokens[index].clone();
        copy.trailing = old_gap;
        self.tokens.insert(index + 1, copy);
        self.reindex();
    }

    /// Replaces `len` tokens starting at `start` with `words`. Inner gaps of
    /// the new tokens are single spaces; the last new token inherits the gap
    /// that followed the replaced span. With `len == 0` the new tokens are
    /// inserted before `start`, separated from it by a space.
    pub fn splice(&mut self, start: usize, len: usize, words: &[String]) {
        let tail_gap = if len > 0 {
            self.tokens[start + len - 1].trailing.clone()
        } else {
            " ".to_string()
        };
        let n = words.len();
        let new: Vec<Token> = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token::new(w.as_str(), if i + 1 < n { " ".to_string() } else { tail_gap.clone() }))
            .collect();
        if len == 0 && start > 0 && start == self.tokens.len() {
            // appending at the end: the previous token needs a separator
            let prev_gap = std::mem::replace(&mut self.tokens[start - 1].trailing, " ".to_string());
            let mut new = new;
            if let Some(last) = new.last_mut() {
                last.trailing = prev_gap;
            }
            self.tokens.extend(new);
        } else {
            self.tokens.splice(start..start + len, new);
        }
        self.reindex();
    }

    /// Reorders the texts of tokens `start..start + perm.len()`; slot
    /// whitespace stays where it was. `perm[j]` names the old position whose
    /// text lands in slot `j`.
    pub fn permute(&mut self, start: usize, perm: &[usize]) {
        let texts: Vec<String> = perm
            .iter()
            .map(|&p| self.tokens[start + p].text.clone())
            .collect();
        for (j, text) in texts.into_iter().enumerate() {
            self.tokens[start + j].text = text;
        }
        self.reindex();
    }

    /// Text of tokens `start..end` including the inner whitespace.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens[start..end].iter().enumerate() {
            out.push_str(&tok.text);
            if start + i + 1 < end {
                out.push_str(&tok.trailing);
            }
        }
        out
    }
}

/// Splits on whitespace, then peels leading and trailing punctuation off each
/// chunk into one-character tokens. Interior hyphens and apostrophes stay
/// inside the word ("work-up", "patient's").
pub fn tokenize(text: &str) -> TokenSeq {
    let mut seq = TokenSeq::default();
    let bytes_ws_end = text
        .char_indices()
        .find(|(_, c)| !c.is_whitespace())
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    seq.leading = text[..bytes_ws_end].to_string();

    let mut pos = bytes_ws_end;
    while pos < text.len() {
        let rest = &text[pos..];
        let chunk_len = rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace())
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let chunk = &rest[..chunk_len];
        let after = &rest[chunk_len..];
        let ws_len = after
            .char_indices()
            .find(|(_, c)| !c.is_whitespace())
            .map(|(i, _)| i)
            .unwrap_or(after.len());
        let ws = &after[..ws_len];

        let pieces = split_chunk(chunk);
        let last = pieces.len() - 1;
        for (i, piece) in pieces.into_iter().enumerate() {
            seq.tokens
                .push(Token::new(piece, if i == last { ws } else { "" }));
        }
        pos += chunk_len + ws_len;
    }
    seq.reindex();
    seq
}

fn split_chunk(chunk: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut lo = 0;
    let mut hi = chars.len();
    while lo < hi && is_punct(chars[lo].1) {
        lo += 1;
    }
    while hi > lo && is_punct(chars[hi - 1].1) {
        hi -= 1;
    }
    let byte = |i: usize| if i < chars.len() { chars[i].0 } else { chunk.len() };
    let mut out = Vec::new();
    for i in 0..lo {
        out.push(&chunk[byte(i)..byte(i + 1)]);
    }
    if lo < hi {
        out.push(&chunk[byte(lo)..byte(hi)]);
    }
    for i in hi.max(lo)..chars.len() {
        out.push(&chunk[byte(i)..byte(i + 1)]);
    }
    out
}

pub fn detokenize(seq: &TokenSeq) -> String {
    let mut out = seq.leading.clone();
    for tok in &seq.tokens {
        out.push_str(&tok.text);
        out.push_str(&tok.trailing);
    }
    out
}
