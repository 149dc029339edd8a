//! Lexical resources: misspellings, abbreviations, synonyms, keyboard
//! adjacency and the verb lexicon.
//!
//! Every resource is a TSV file with one mapping per line; lines starting
//! with `#` and blank lines are ignored. Tables are immutable once loaded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::tokenize;
use crate::linguistics::morphology::{past_regular, third_singular};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceKind {
    Misspelling,
    Abbreviation,
    Synonym,
    Keyboard,
    Verb,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] = [
        ResourceKind::Misspelling,
        ResourceKind::Abbreviation,
        ResourceKind::Synonym,
        ResourceKind::Keyboard,
        ResourceKind::Verb,
    ];

    /// File name inside a resource directory.
    pub fn file_name(self) -> &'static str {
        match self {
            ResourceKind::Misspelling => "misspellings.tsv",
            ResourceKind::Abbreviation => "abbreviations.tsv",
            ResourceKind::Synonym => "synonyms.tsv",
            ResourceKind::Keyboard => "keyboard.tsv",
            ResourceKind::Verb => "verbs.tsv",
        }
    }

    fn columns(self) -> usize {
        match self {
            ResourceKind::Verb => 5,
            _ => 2,
        }
    }

    fn bundled(self) -> &'static str {
        match self {
            ResourceKind::Misspelling => include_str!("../resources/misspellings.tsv"),
            ResourceKind::Abbreviation => include_str!("../resources/abbreviations.tsv"),
            ResourceKind::Synonym => include_str!("../resources/synonyms.tsv"),
            ResourceKind::Keyboard => include_str!("../resources/keyboard.tsv"),
            ResourceKind::Verb => include_str!("../resources/verbs.tsv"),
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::Misspelling => "misspelling",
            ResourceKind::Abbreviation => "abbreviation",
            ResourceKind::Synonym => "synonym",
            ResourceKind::Keyboard => "keyboard",
            ResourceKind::Verb => "verb",
        })
    }
}

impl FromStr for ResourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResourceKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown resource kind {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{kind} line {line}: expected {expected} tab-separated columns, found {found}")]
    Columns { kind: ResourceKind, line: usize, expected: usize, found: usize },
    #[error("{kind} line {line}: {key:?} maps to itself")]
    SelfMapping { kind: ResourceKind, line: usize, key: String },
    #[error("{kind} line {line}: {message}")]
    Invalid { kind: ResourceKind, line: usize, message: String },
    #[error("{kind} table is empty")]
    Empty { kind: ResourceKind },
    #[error("keyboard adjacency is not symmetric: {a:?} lists {b:?} but not the reverse")]
    Asymmetric { a: char, b: char },
    #[error("{0:?} is not an ASCII letter")]
    NotALetter(char),
}

struct Row {
    line: usize,
    cols: Vec<String>,
}

fn parse_rows(kind: ResourceKind, text: &str) -> Result<Vec<Row>, ResourceError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_string()).collect();
        if cols.len() != kind.columns() || cols.iter().any(String::is_empty) {
            return Err(ResourceError::Columns {
                kind,
                line: i + 1,
                expected: kind.columns(),
                found: cols.iter().filter(|c| !c.is_empty()).count(),
            });
        }
        rows.push(Row { line: i + 1, cols });
    }
    if rows.is_empty() {
        return Err(ResourceError::Empty { kind });
    }
    Ok(rows)
}

/// `key -> variants` table with lowercase keys and deduplicated lists.
fn word_map(kind: ResourceKind, text: &str) -> Result<BTreeMap<String, Vec<String>>, ResourceError> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in parse_rows(kind, text)? {
        let key = row.cols[0].to_lowercase();
        let value = row.cols[1].clone();
        if value.to_lowercase() == key {
            return Err(ResourceError::SelfMapping { kind, line: row.line, key });
        }
        let list = map.entry(key).or_default();
        if !list.contains(&value) {
            list.push(value);
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisspellingTable {
    map: BTreeMap<String, Vec<String>>,
}

impl MisspellingTable {
    pub fn parse(text: &str) -> Result<Self, ResourceError> {
        Ok(MisspellingTable { map: word_map(ResourceKind::Misspelling, text)? })
    }

    /// Variants for `word`, matched case-insensitively.
    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.map.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymTable {
    map: BTreeMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn parse(text: &str) -> Result<Self, ResourceError> {
        Ok(SynonymTable { map: word_map(ResourceKind::Synonym, text)? })
    }

    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.map.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationPair {
    /// Expansion phrase as written in the table.
    pub phrase: String,
    /// Tokens of the phrase.
    pub tokens: Vec<String>,
    pub abbreviation: String,
}

/// Phrase/abbreviation pairs indexed in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationTable {
    pairs: Vec<AbbreviationPair>,
    /// lowercase token sequence -> abbreviations
    forward: HashMap<Vec<String>, Vec<String>>,
    /// exact abbreviation -> pair indices
    backward: HashMap<String, Vec<usize>>,
    max_phrase_len: usize,
}

impl AbbreviationTable {
    pub fn parse(text: &str) -> Result<Self, ResourceError> {
        let kind = ResourceKind::Abbreviation;
        let mut pairs: Vec<AbbreviationPair> = Vec::new();
        for row in parse_rows(kind, text)? {
            let phrase = row.cols[0].clone();
            let abbreviation = row.cols[1].clone();
            if phrase.to_lowercase() == abbreviation.to_lowercase() {
                return Err(ResourceError::SelfMapping { kind, line: row.line, key: phrase });
            }
            let tokens = tokenize(&phrase).texts();
            if tokens.is_empty() || tokenize(&abbreviation).len() != 1 {
                return Err(ResourceError::Invalid {
                    kind,
                    line: row.line,
                    message: "abbreviation must be a single token and the phrase non-empty".into(),
                });
            }
            if !pairs.iter().any(|p| p.phrase == phrase && p.abbreviation == abbreviation) {
                pairs.push(AbbreviationPair { phrase, tokens, abbreviation });
            }
        }
        let mut forward: HashMap<Vec<String>, Vec<String>> = HashMap::new();
        let mut backward: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, p) in pairs.iter().enumerate() {
            let key: Vec<String> = p.tokens.iter().map(|t| t.to_lowercase()).collect();
            let list = forward.entry(key).or_default();
            if !list.contains(&p.abbreviation) {
                list.push(p.abbreviation.clone());
            }
            backward.entry(p.abbreviation.clone()).or_default().push(i);
        }
        let max_phrase_len = pairs.iter().map(|p| p.tokens.len()).max().unwrap_or(0);
        Ok(AbbreviationTable { pairs, forward, backward, max_phrase_len })
    }

    /// Abbreviations of an expansion given as tokens (case-insensitive).
    pub fn abbreviations_of<S: AsRef<str>>(&self, tokens: &[S]) -> Option<&[String]> {
        let key: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        self.forward.get(&key).map(Vec::as_slice)
    }

    /// Abbreviation of a whitespace-written phrase, e.g. "shortness of breath".
    pub fn forward(&self, phrase: &str) -> Option<&[String]> {
        self.abbreviations_of(&tokenize(phrase).texts())
    }

    /// Expansions of an abbreviation (case-sensitive).
    pub fn expansions_of(&self, abbreviation: &str) -> Vec<&AbbreviationPair> {
        self.backward
            .get(abbreviation)
            .map(|ix| ix.iter().map(|&i| &self.pairs[i]).collect())
            .unwrap_or_default()
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    pub fn pairs(&self) -> &[AbbreviationPair] {
        &self.pairs
    }
}

/// Physical key adjacency. Digits may appear as keys and neighbours; only
/// letters are ever returned by [`KeyboardMap::neighbors`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardMap {
    adj: BTreeMap<char, Vec<char>>,
}

impl KeyboardMap {
    pub fn parse(text: &str) -> Result<Self, ResourceError> {
        let kind = ResourceKind::Keyboard;
        let mut adj: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for row in parse_rows(kind, text)? {
            let mut key_chars = row.cols[0].chars();
            let key = match (key_chars.next(), key_chars.next()) {
                (Some(c), None) => c.to_ascii_lowercase(),
                _ => {
                    return Err(ResourceError::Invalid {
                        kind,
                        line: row.line,
                        message: "key must be a single character".into(),
                    })
                }
            };
            let list = adj.entry(key).or_default();
            for n in row.cols[1].split_whitespace() {
                let mut cs = n.chars();
                let c = match (cs.next(), cs.next()) {
                    (Some(c), None) => c.to_ascii_lowercase(),
                    _ => {
                        return Err(ResourceError::Invalid {
                            kind,
                            line: row.line,
                            message: format!("neighbour {n:?} is not a single character"),
                        })
                    }
                };
                if c == key {
                    return Err(ResourceError::SelfMapping { kind, line: row.line, key: key.to_string() });
                }
                if !list.contains(&c) {
                    list.push(c);
                }
            }
        }
        let map = KeyboardMap { adj };
        map.check_symmetric()?;
        for letter in 'a'..='z' {
            if let Some(list) = map.adj.get(&letter) {
                if list.iter().filter(|c| c.is_ascii_lowercase()).count() < 2 {
                    return Err(ResourceError::Invalid {
                        kind,
                        line: 0,
                        message: format!("{letter:?} has fewer than two letter neighbours"),
                    });
                }
            }
        }
        Ok(map)
    }

    /// Symmetry among the keys that have their own row.
    fn check_symmetric(&self) -> Result<(), ResourceError> {
        for (&a, list) in &self.adj {
            for &b in list {
                if self.adj.get(&b).is_some_and(|back| !back.contains(&a)) {
                    return Err(ResourceError::Asymmetric { a, b });
                }
            }
        }
        Ok(())
    }

    /// Adjacent letters of `ch`, in the case of `ch`.
    pub fn neighbors(&self, ch: char) -> Result<Vec<char>, ResourceError> {
        if !ch.is_ascii_alphabetic() {
            return Err(ResourceError::NotALetter(ch));
        }
        let upper = ch.is_ascii_uppercase();
        let list = self.adj.get(&ch.to_ascii_lowercase()).map(Vec::as_slice).unwrap_or(&[]);
        Ok(list
            .iter()
            .filter(|c| c.is_ascii_lowercase())
            .map(|&c| if upper { c.to_ascii_uppercase() } else { c })
            .collect())
    }

    pub fn keys(&self) -> impl Iterator<Item = char> + '_ {
        self.adj.keys().copied()
    }
}

/// Convenience wrapper over [`KeyboardMap::neighbors`].
pub fn keyboard_neighbors(ch: char, map: &KeyboardMap) -> Result<BTreeSet<char>, ResourceError> {
    Ok(map.neighbors(ch)?.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbEntry {
    pub base: String,
    pub third_singular: String,
    pub plural: String,
    pub past: String,
    pub irregular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerbForm {
    Base,
    ThirdSingular,
    Past,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon {
    entries: Vec<VerbEntry>,
    index: HashMap<String, Vec<(usize, VerbForm)>>,
}

impl VerbLexicon {
    pub fn parse(text: &str) -> Result<Self, ResourceError> {
        let kind = ResourceKind::Verb;
        let mut entries: Vec<VerbEntry> = Vec::new();
        for row in parse_rows(kind, text)? {
            let c = &row.cols;
            let irregular = match c[4].as_str() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(ResourceError::Invalid {
                        kind,
                        line: row.line,
                        message: format!("irregular flag must be 0 or 1, found {other:?}"),
                    })
                }
            };
            let entry = VerbEntry {
                base: c[0].to_lowercase(),
                third_singular: c[1].to_lowercase(),
                plural: c[2].to_lowercase(),
                past: c[3].to_lowercase(),
                irregular,
            };
            if !irregular
                && (entry.third_singular != third_singular(&entry.base)
                    || entry.past != past_regular(&entry.base)
                    || entry.plural != entry.base)
            {
                return Err(ResourceError::Invalid {
                    kind,
                    line: row.line,
                    message: format!("{:?} is flagged regular but its forms do not follow the suffix rules", entry.base),
                });
            }
            if entries.iter().any(|e| e.base == entry.base) {
                continue;
            }
            entries.push(entry);
        }
        let mut index: HashMap<String, Vec<(usize, VerbForm)>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            for (form, f) in [
                (&e.base, VerbForm::Base),
                (&e.plural, VerbForm::Base),
                (&e.third_singular, VerbForm::ThirdSingular),
                (&e.past, VerbForm::Past),
            ] {
                let list = index.entry(form.clone()).or_default();
                if !list.contains(&(i, f)) {
                    list.push((i, f));
                }
            }
        }
        Ok(VerbLexicon { entries, index })
    }

    /// All readings of a surface form (case-insensitive).
    pub fn lookup(&self, word: &str) -> Vec<(&VerbEntry, VerbForm)> {
        self.index
            .get(&word.to_lowercase())
            .map(|v| v.iter().map(|&(i, f)| (&self.entries[i], f)).collect())
            .unwrap_or_default()
    }

    pub fn entry(&self, base: &str) -> Option<&VerbEntry> {
        self.entries.iter().find(|e| e.base == base)
    }

    pub fn entries(&self) -> &[VerbEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One loaded table of any kind.
#[derive(Debug, Clone)]
pub enum Table {
    Misspelling(MisspellingTable),
    Abbreviation(AbbreviationTable),
    Synonym(SynonymTable),
    Keyboard(KeyboardMap),
    Verb(VerbLexicon),
}

pub fn parse_resource(kind: ResourceKind, text: &str) -> Result<Table, ResourceError> {
    Ok(match kind {
        ResourceKind::Misspelling => Table::Misspelling(MisspellingTable::parse(text)?),
        ResourceKind::Abbreviation => Table::Abbreviation(AbbreviationTable::parse(text)?),
        ResourceKind::Synonym => Table::Synonym(SynonymTable::parse(text)?),
        ResourceKind::Keyboard => Table::Keyboard(KeyboardMap::parse(text)?),
        ResourceKind::Verb => Table::Verb(VerbLexicon::parse(text)?),
    })
}

pub fn load_resource(kind: ResourceKind, path: &Path) -> Result<Table, ResourceError> {
    let text = fs::read_to_string(path).map_err(|source| ResourceError::Io { path: path.into(), source })?;
    parse_resource(kind, &text)
}

/// The full set of tables a perturbation run needs.
#[derive(Debug, Clone)]
pub struct Resources {
    pub misspellings: MisspellingTable,
    pub abbreviations: AbbreviationTable,
    pub synonyms: SynonymTable,
    pub keyboard: KeyboardMap,
    pub verbs: VerbLexicon,
    /// SHA-256 of every file's bytes, keyed by file name.
    pub digests: BTreeMap<String, String>,
}

impl Resources {
    fn from_texts(get: impl Fn(ResourceKind) -> Result<String, ResourceError>) -> Result<Self, ResourceError> {
        let mut digests = BTreeMap::new();
        let mut text = |kind: ResourceKind| -> Result<String, ResourceError> {
            let t = get(kind)?;
            digests.insert(kind.file_name().to_string(), hex::encode(Sha256::digest(t.as_bytes())));
            Ok(t)
        };
        let misspellings = MisspellingTable::parse(&text(ResourceKind::Misspelling)?)?;
        let abbreviations = AbbreviationTable::parse(&text(ResourceKind::Abbreviation)?)?;
        let synonyms = SynonymTable::parse(&text(ResourceKind::Synonym)?)?;
        let keyboard = KeyboardMap::parse(&text(ResourceKind::Keyboard)?)?;
        let verbs = VerbLexicon::parse(&text(ResourceKind::Verb)?)?;
        Ok(Resources { misspellings, abbreviations, synonyms, keyboard, verbs, digests })
    }

    /// Starter tables compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_texts(|k| Ok(k.bundled().to_string())).expect("bundled resources are valid")
    }

    /// Loads the five standard file names from `dir`; files that are missing
    /// fall back to the bundled table.
    pub fn load_dir(dir: &Path) -> Result<Self, ResourceError> {
        if !dir.is_dir() {
            return Err(ResourceError::Io {
                path: dir.into(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "resource directory not found"),
            });
        }
        Self::from_texts(|k| {
            let path = dir.join(k.file_name());
            if path.exists() {
                fs::read_to_string(&path).map_err(|source| ResourceError::Io { path, source })
            } else {
                Ok(k.bundled().to_string())
            }
        })
    }

    /// Writes the bundled tables into `dir` for editing.
    pub fn export_bundled(dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for kind in ResourceKind::ALL {
            fs::write(dir.join(kind.file_name()), kind.bundled())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misspelling_lookup() {
        let t = MisspellingTable::parse("pacemaker\tpacemkaer\n").unwrap();
        assert!(t.lookup("pacemaker").unwrap().contains(&"pacemkaer".to_string()));
        assert!(t.lookup("Pacemaker").is_some());
    }

    #[test]
    fn abbreviation_both_directions() {
        let t = AbbreviationTable::parse("shortness of breath\tSOB\n").unwrap();
        assert_eq!(t.forward("shortness of breath").unwrap(), ["SOB"]);
        assert_eq!(t.forward("Shortness of Breath").unwrap(), ["SOB"]);
        assert_eq!(t.expansions_of("SOB")[0].phrase, "shortness of breath");
        assert!(t.expansions_of("sob").is_empty());
    }

    #[test]
    fn keyboard_row_with_digits() {
        let t = KeyboardMap::parse("i\tu o j k 8 9\n").unwrap();
        assert!(t.neighbors('i').unwrap().contains(&'o'));
        assert_eq!(t.neighbors('I').unwrap(), ['U', 'O', 'J', 'K']);
        assert!(matches!(t.neighbors('3'), Err(ResourceError::NotALetter('3'))));
    }

    #[test]
    fn schema_and_invariant_violations() {
        assert!(matches!(
            MisspellingTable::parse("a\tb\tc\n"),
            Err(ResourceError::Columns { line: 1, expected: 2, found: 3, .. })
        ));
        assert!(matches!(SynonymTable::parse("pain\tPain\n"), Err(ResourceError::SelfMapping { .. })));
        assert!(matches!(SynonymTable::parse("# only a comment\n\n"), Err(ResourceError::Empty { .. })));
        assert!(matches!(KeyboardMap::parse("a\ts q\ns\tq\nq\ta s\n"), Err(ResourceError::Asymmetric { .. })));
        assert!(VerbLexicon::parse("watch\twatchs\twatch\twatched\t0\n").is_err());
    }

    #[test]
    fn duplicate_keys_merge() {
        let t = MisspellingTable::parse("receive\trecieve\nreceive\treceeve\nreceive\trecieve\n").unwrap();
        assert_eq!(t.lookup("receive").unwrap(), ["recieve", "receeve"]);
    }

    #[test]
    fn bundled_keyboard_is_symmetric_and_covers_letters() {
        let r = Resources::bundled();
        for a in 'a'..='z' {
            let na = keyboard_neighbors(a, &r.keyboard).unwrap();
            assert!(na.len() >= 2, "{a}");
            assert!(!na.contains(&a));
            for b in 'a'..='z' {
                let nb = keyboard_neighbors(b, &r.keyboard).unwrap();
                assert_eq!(na.contains(&b), nb.contains(&a), "{a} {b}");
            }
        }
        assert!(keyboard_neighbors('i', &r.keyboard).unwrap().is_superset(&['o', 'u'].into()));
    }

    #[test]
    fn bundled_tables_never_map_to_themselves() {
        let r = Resources::bundled();
        for (k, vs) in r.misspellings.iter().chain(r.synonyms.iter()) {
            assert!(vs.iter().all(|v| v.to_lowercase() != *k), "{k}");
        }
        for p in r.abbreviations.pairs() {
            assert_ne!(p.phrase.to_lowercase(), p.abbreviation.to_lowercase());
        }
        assert!(r.verbs.len() >= 300);
        assert_eq!(r.digests.len(), 5);
    }
}
