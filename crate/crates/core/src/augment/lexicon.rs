//! Word lists driving the rule-based transformations.
//!
//! A lexicon directory holds four TSV files:
//!
//! | file                | row format                              |
//! |---------------------|-----------------------------------------|
//! | `antonyms.tsv`      | `word<TAB>antonym[,antonym...]`         |
//! | `negations.tsv`     | `pattern<TAB>replacement[,replacement...]` |
//! | `strengtheners.tsv` | `weak<TAB>strong`                       |
//! | `entities.tsv`      | `CLASS<TAB>surface`                     |
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::tokenize::tokenize;
use super::{AugmentError, EntityClass};

/// A lowercase token sequence with its replacement text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PhraseRule {
    pub pattern: Vec<String>,
    pub replacement: String,
}

impl PhraseRule {
    fn new(pattern: &str, replacement: &str) -> Self {
        Self {
            pattern: lower_tokens(pattern),
            replacement: replacement.to_owned(),
        }
    }
}

pub(crate) fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| t.text.to_lowercase()).collect()
}

/// Surface forms indexed by their token sequence.
#[derive(Debug, Clone, Default)]
pub(crate) struct Gazetteer {
    pub entries: HashMap<Vec<String>, Vec<(String, EntityClass)>>,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    antonyms: BTreeMap<String, Vec<String>>,
    negation_pairs: Vec<(String, String)>,
    strengtheners: BTreeMap<String, String>,
    entity_pool: BTreeMap<EntityClass, Vec<String>>,
    pub(crate) antonym_rules: Vec<PhraseRule>,
    pub(crate) negation_rules: Vec<PhraseRule>,
    pub(crate) strengthener_rules: Vec<PhraseRule>,
    pub(crate) gazetteer: Gazetteer,
}

const BUILTIN_ANTONYMS: &str = include_str!("../../data/lexicons/antonyms.tsv");
const BUILTIN_NEGATIONS: &str = include_str!("../../data/lexicons/negations.tsv");
const BUILTIN_STRENGTHENERS: &str = include_str!("../../data/lexicons/strengtheners.tsv");
const BUILTIN_ENTITIES: &str = include_str!("../../data/lexicons/entities.tsv");

impl Lexicons {
    pub fn new(
        antonyms: BTreeMap<String, Vec<String>>,
        negation_pairs: Vec<(String, String)>,
        strengtheners: BTreeMap<String, String>,
        entity_pool: BTreeMap<EntityClass, Vec<String>>,
    ) -> Result<Self, AugmentError> {
        let invalid = |m: String| Err(AugmentError::InvalidLexicon(m));
        let mut antonym_rules = Vec::new();
        for (word, alts) in &antonyms {
            if lower_tokens(word).len() != 1 {
                return invalid(format!("antonym key {word:?} must be a single word"));
            }
            for alt in alts {
                if alt.to_lowercase() == word.to_lowercase() {
                    return invalid(format!("antonym {word:?} maps to itself"));
                }
                antonym_rules.push(PhraseRule::new(word, alt));
            }
        }
        let mut negation_rules = Vec::new();
        for (pattern, replacement) in &negation_pairs {
            if lower_tokens(pattern).is_empty() || lower_tokens(pattern) == lower_tokens(replacement) {
                return invalid(format!("negation pair {pattern:?} -> {replacement:?} is a no-op"));
            }
            negation_rules.push(PhraseRule::new(pattern, replacement));
        }
        let mut strengthener_rules = Vec::new();
        let weak_forms: Vec<Vec<String>> = strengtheners.keys().map(|k| lower_tokens(k)).collect();
        for (weak, strong) in &strengtheners {
            if lower_tokens(weak).is_empty() {
                return invalid("empty strengthener key".into());
            }
            if weak_forms.contains(&lower_tokens(strong)) {
                return invalid(format!(
                    "strengthener {weak:?} -> {strong:?} targets another weak form"
                ));
            }
            strengthener_rules.push(PhraseRule::new(weak, strong));
        }

        let mut pool: BTreeMap<EntityClass, Vec<String>> = BTreeMap::new();
        let mut gazetteer = Gazetteer::default();
        for (&class, surfaces) in &entity_pool {
            let list = pool.entry(class).or_default();
            for s in surfaces {
                if s.trim().is_empty() {
                    return invalid(format!("empty {class} entity"));
                }
                if list.contains(s) {
                    continue;
                }
                list.push(s.clone());
                let key: Vec<String> = tokenize(s).iter().map(|t| t.text.to_owned()).collect();
                gazetteer.max_tokens = gazetteer.max_tokens.max(key.len());
                let slot = gazetteer.entries.entry(key).or_default();
                if !slot.iter().any(|(surface, _)| surface == s) {
                    slot.push((s.clone(), class));
                }
            }
        }
        pool.retain(|_, v| !v.is_empty());
        if !pool.is_empty() && !pool.contains_key(&EntityClass::Other) {
            return invalid("entity pool has no OTHER entries for capitalized-span detections".into());
        }

        Ok(Self {
            antonyms,
            negation_pairs,
            strengtheners,
            entity_pool: pool,
            antonym_rules,
            negation_rules,
            strengthener_rules,
            gazetteer,
        })
    }

    /// The curated lists shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_sources(
            BUILTIN_ANTONYMS,
            BUILTIN_NEGATIONS,
            BUILTIN_STRENGTHENERS,
            BUILTIN_ENTITIES,
        )
        .expect("builtin lexicons are valid")
    }

    /// Reads `antonyms.tsv`, `negations.tsv`, `strengtheners.tsv` and
    /// `entities.tsv` from `dir`. All four must exist; any may be empty.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, AugmentError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| AugmentError::Io { path, source })
        };
        Self::from_sources(
            &read("antonyms.tsv")?,
            &read("negations.tsv")?,
            &read("strengtheners.tsv")?,
            &read("entities.tsv")?,
        )
    }

    pub fn from_sources(
        antonyms: &str,
        negations: &str,
        strengtheners: &str,
        entities: &str,
    ) -> Result<Self, AugmentError> {
        let mut antonym_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (line, key, values) in rows("antonyms.tsv", antonyms)? {
            let entry = antonym_map.entry(key.to_lowercase()).or_default();
            for v in split_list("antonyms.tsv", line, values)? {
                if !entry.contains(&v) {
                    entry.push(v);
                }
            }
        }
        let mut negation_pairs = Vec::new();
        for (line, key, values) in rows("negations.tsv", negations)? {
            for v in split_list("negations.tsv", line, values)? {
                negation_pairs.push((key.to_owned(), v));
            }
        }
        let mut strengthener_map = BTreeMap::new();
        for (line, key, values) in rows("strengtheners.tsv", strengtheners)? {
            let mut list = split_list("strengtheners.tsv", line, values)?;
            if list.len() != 1 {
                return Err(lexicon_error("strengtheners.tsv", line, "expected one replacement"));
            }
            if strengthener_map
                .insert(key.to_lowercase(), list.remove(0))
                .is_some()
            {
                return Err(lexicon_error("strengtheners.tsv", line, "duplicate key"));
            }
        }
        let mut pool: BTreeMap<EntityClass, Vec<String>> = BTreeMap::new();
        for (line, class, surface) in rows("entities.tsv", entities)? {
            let class: EntityClass = class
                .parse()
                .map_err(|m: String| lexicon_error("entities.tsv", line, &m))?;
            if surface.trim().is_empty() {
                return Err(lexicon_error("entities.tsv", line, "empty surface"));
            }
            pool.entry(class).or_default().push(surface.to_owned());
        }
        Self::new(antonym_map, negation_pairs, strengthener_map, pool)
    }

    pub fn antonyms(&self) -> &BTreeMap<String, Vec<String>> {
        &self.antonyms
    }

    pub fn negation_pairs(&self) -> &[(String, String)] {
        &self.negation_pairs
    }

    pub fn strengtheners(&self) -> &BTreeMap<String, String> {
        &self.strengtheners
    }

    pub fn entity_pool(&self) -> &BTreeMap<EntityClass, Vec<String>> {
        &self.entity_pool
    }

    pub fn entities(&self, class: EntityClass) -> &[String] {
        self.entity_pool.get(&class).map_or(&[], Vec::as_slice)
    }
}

fn lexicon_error(file: &str, line: usize, message: &str) -> AugmentError {
    AugmentError::Lexicon {
        file: file.to_owned(),
        line,
        message: message.to_owned(),
    }
}

fn rows<'a>(file: &str, text: &'a str) -> Result<Vec<(usize, &'a str, &'a str)>, AugmentError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let Some((key, value)) = raw.split_once('\t') else {
            return Err(lexicon_error(file, line, "expected two tab-separated columns"));
        };
        if value.contains('\t') {
            return Err(lexicon_error(file, line, "too many columns"));
        }
        if key.trim().is_empty() {
            return Err(lexicon_error(file, line, "empty key"));
        }
        out.push((line, key.trim(), value.trim()));
    }
    Ok(out)
}

fn split_list(file: &str, line: usize, values: &str) -> Result<Vec<String>, AugmentError> {
    let list: Vec<String> = values.split(',').map(|v| v.trim().to_owned()).collect();
    if list.iter().any(String::is_empty) {
        return Err(lexicon_error(file, line, "empty replacement"));
    }
    Ok(list)
}
