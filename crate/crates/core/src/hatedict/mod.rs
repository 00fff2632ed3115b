//! Hate-term lexicon loading and fuzzy token scoring.

mod hatebase;
mod similarity;

use std::collections::HashMap;
use std::io::Read;
use std::sync::RwLock;

use serde::Deserialize;

use crate::error::{Error, Result};

pub use hatebase::{ingest_hatebase_json, IngestReport, NullOffensiveness, DEFAULT_NULL_OFFENSIVENESS};
pub use similarity::{longest_block, matched_chars, matching_blocks, ratio, similarity, Block};

/// Similarity cutoff at which a token counts as a lexicon match.
pub const DEFAULT_CUTOFF: f64 = 0.85;

/// Scores of unambiguous terms are doubled, so a token never scores above this.
pub const MAX_TOKEN_SCORE: f64 = 200.0;

/// Header line of the dictionary CSV format.
pub const DICTIONARY_HEADER: &str = "term,offensiveness,unambiguous";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HateTerm {
    term: String,
    offensiveness: u8,
    unambiguous: bool,
}

impl HateTerm {
    /// Builds a term, lowercasing it. Fails on empty or multi-word terms and
    /// on offensiveness above 100.
    pub fn new(term: &str, offensiveness: u8, unambiguous: bool) -> std::result::Result<Self, String> {
        let term = term.trim().to_lowercase();
        if term.is_empty() {
            return Err("empty term".into());
        }
        if term.chars().any(char::is_whitespace) {
            return Err(format!("term {term:?} contains whitespace"));
        }
        if offensiveness > 100 {
            return Err(format!("offensiveness {offensiveness} outside [0,100]"));
        }
        Ok(HateTerm {
            term,
            offensiveness,
            unambiguous,
        })
    }

    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn offensiveness(&self) -> u8 {
        self.offensiveness
    }

    pub fn unambiguous(&self) -> bool {
        self.unambiguous
    }

    /// Offensiveness, doubled for unambiguous terms.
    pub fn effective_score(&self) -> f64 {
        let base = f64::from(self.offensiveness);
        if self.unambiguous {
            2.0 * base
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HateDictionary {
    entries: Vec<HateTerm>,
    dropped_multiword_count: usize,
}

#[derive(Deserialize)]
struct DictionaryRow {
    term: Option<String>,
    offensiveness: Option<String>,
    unambiguous: Option<String>,
}

impl HateDictionary {
    /// Builds a dictionary from terms; later duplicates replace earlier ones.
    pub fn from_terms(terms: impl IntoIterator<Item = HateTerm>) -> Self {
        let mut dict = HateDictionary::default();
        let mut index = HashMap::new();
        for t in terms {
            dict.insert(&mut index, t);
        }
        dict
    }

    fn insert(&mut self, index: &mut HashMap<String, usize>, term: HateTerm) {
        match index.get(&term.term) {
            Some(&slot) => self.entries[slot] = term,
            None => {
                index.insert(term.term.clone(), self.entries.len());
                self.entries.push(term);
            }
        }
    }

    /// Reads the `term,offensiveness,unambiguous` CSV format.
    ///
    /// Multi-word rows are skipped and counted; a term seen twice keeps the
    /// values of its last occurrence.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(source);
        let headers = reader.headers()?.clone();
        let expected = ["term", "offensiveness", "unambiguous"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
            return Err(Error::Dictionary {
                line: 1,
                reason: format!("expected header `{DICTIONARY_HEADER}`"),
            });
        }

        let mut dict = HateDictionary::default();
        let mut index = HashMap::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |reason: String| Error::Dictionary { line, reason };
            if record.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", record.len())));
            }
            let row: DictionaryRow = record.deserialize(Some(&headers)).map_err(|e| bad(e.to_string()))?;
            let term = row.term.unwrap_or_default();
            let offensiveness = row.offensiveness.unwrap_or_default();
            let offensiveness: u8 = match offensiveness.parse::<i64>() {
                Ok(v) if (0..=100).contains(&v) => v as u8,
                Ok(v) => return Err(bad(format!("offensiveness {v} outside [0,100]"))),
                Err(_) => return Err(bad(format!("offensiveness {offensiveness:?} is not an integer"))),
            };
            let unambiguous = row.unambiguous.unwrap_or_default();
            let unambiguous = match unambiguous.to_ascii_lowercase().as_str() {
                "true" => true,
                "false" => false,
                _ => return Err(bad(format!("unambiguous flag {unambiguous:?} is not true/false"))),
            };
            if term.split_whitespace().count() > 1 {
                dict.dropped_multiword_count += 1;
                continue;
            }
            let term = HateTerm::new(&term, offensiveness, unambiguous).map_err(bad)?;
            dict.insert(&mut index, term);
        }
        Ok(dict)
    }

    pub fn entries(&self) -> &[HateTerm] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dropped_multiword_count(&self) -> usize {
        self.dropped_multiword_count
    }

    /// Entries whose similarity with `token` reaches `cutoff`.
    pub fn matches<'a>(&'a self, token: &'a str, cutoff: f64) -> impl Iterator<Item = &'a HateTerm> + 'a {
        let token: Vec<char> = token.chars().collect();
        self.entries.iter().filter(move |e| {
            let term: Vec<char> = e.term.chars().collect();
            ratio(&token, &term) >= cutoff
        })
    }
}

/// Mean effective score over all entries matching `token` at `cutoff`, or 0.0.
pub fn token_score(token: &str, dict: &HateDictionary, cutoff: f64) -> f64 {
    let (sum, n) = dict
        .matches(token, cutoff)
        .fold((0.0, 0usize), |(s, n), t| (s + t.effective_score(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Memoizing wrapper around [`token_score`] for a fixed dictionary and cutoff.
///
/// The cache sits behind an `RwLock`, so one scorer can be shared by
/// concurrent vectorisation workers.
#[derive(Debug)]
pub struct TokenScorer<'d> {
    dict: &'d HateDictionary,
    cutoff: f64,
    cache: RwLock<HashMap<String, f64>>,
}

impl<'d> TokenScorer<'d> {
    pub fn new(dict: &'d HateDictionary) -> Self {
        Self::with_cutoff(dict, DEFAULT_CUTOFF)
    }

    pub fn with_cutoff(dict: &'d HateDictionary, cutoff: f64) -> Self {
        TokenScorer {
            dict,
            cutoff,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn dictionary(&self) -> &HateDictionary {
        self.dict
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn score(&self, token: &str) -> f64 {
        if let Some(&s) = self.cache.read().expect("scorer cache poisoned").get(token) {
            return s;
        }
        let s = token_score(token, self.dict, self.cutoff);
        self.cache
            .write()
            .expect("scorer cache poisoned")
            .insert(token.to_string(), s);
        s
    }

    pub fn cached_tokens(&self) -> usize {
        self.cache.read().expect("scorer cache poisoned").len()
    }
}
