//! Subword token scalars: the single-channel embedding track.
//!
//! The default provider runs greedy longest-match-first WordPiece over an
//! uncased vocab file and emits each piece's id as a real number. Externally
//! computed per-token scalars can be injected through [`PrecomputedSequences`].

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD: &str = "[PAD]";
pub const SPECIAL_TOKENS: [&str; 4] = [PAD, UNK, CLS, SEP];
pub const CONTINUATION_PREFIX: &str = "##";

/// Words longer than this (in chars) map straight to `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    unk: u32,
}

impl Vocab {
    /// One token per line; the zero-based line index is the id.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in BufReader::new(source).lines() {
            let line = line?;
            tokens.push(line.trim_end_matches('\r').to_string());
        }
        Self::from_tokens(tokens)
    }

    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if let Some(first) = ids.insert(tok.clone(), i as u32) {
                return Err(Error::DuplicateVocabToken {
                    token: tok.clone(),
                    line: i + 1,
                    first: first as usize + 1,
                });
            }
        }
        for special in SPECIAL_TOKENS {
            if !ids.contains_key(special) {
                return Err(Error::MissingSpecialToken(special));
            }
        }
        let unk = ids[UNK];
        Ok(Vocab { tokens, ids, unk })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn is_special(&self, id: u32) -> bool {
        self.token(id).is_some_and(|t| SPECIAL_TOKENS.contains(&t))
    }
}

/// Splits a whitespace word into runs of non-punctuation characters and
/// single punctuation characters, as uncased BERT pre-tokenization does.
fn pre_split(word: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in word.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else {
            if let Some(s) = start.take() {
                out.push(&word[s..i]);
            }
            out.push(&word[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&word[s..]);
    }
    out
}

fn wordpiece_word(word: &str, vocab: &Vocab, out: &mut Vec<u32>) {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    if chars.len() > MAX_WORD_CHARS {
        out.push(vocab.unk);
        return;
    }
    let byte_at = |ci: usize| chars.get(ci).map_or(word.len(), |&(b, _)| b);
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < chars.len() {
        let mut found = None;
        let mut end = chars.len();
        while end > start {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            candidate.push_str(&word[byte_at(start)..byte_at(end)]);
            if let Some(id) = vocab.id(&candidate) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        match found {
            Some(id) => {
                pieces.push(id);
                start = end;
            }
            None => {
                out.push(vocab.unk);
                return;
            }
        }
    }
    out.extend(pieces);
}

/// Token ids of the greedy longest-match-first segmentation of `text`.
pub fn wordpiece_ids(text: &str, vocab: &Vocab) -> Vec<u32> {
    let mut ids = Vec::new();
    for word in text.split_whitespace() {
        for part in pre_split(word) {
            wordpiece_word(part, vocab, &mut ids);
        }
    }
    ids
}

/// Subword tokens of `text`; unmatched words become `[UNK]`.
pub fn wordpiece_tokenize(text: &str, vocab: &Vocab) -> Vec<String> {
    wordpiece_ids(text, vocab)
        .into_iter()
        .map(|id| vocab.tokens[id as usize].clone())
        .collect()
}

/// One real value per subword token of a cleaned tweet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarSequence(pub Vec<f32>);

impl ScalarSequence {
    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f32>> for ScalarSequence {
    fn from(v: Vec<f32>) -> Self {
        ScalarSequence(v)
    }
}

/// How token ids are turned into scalars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarScale {
    /// The id itself.
    #[default]
    Raw,
    /// `id / (vocab_size - 1)`, in [0, 1].
    Unit,
}

/// Token ids of `text` as reals; no `[CLS]`/`[SEP]` are added.
pub fn encode_scalars(text: &str, vocab: &Vocab) -> ScalarSequence {
    encode_scalars_scaled(text, vocab, ScalarScale::Raw)
}

pub fn encode_scalars_scaled(text: &str, vocab: &Vocab, scale: ScalarScale) -> ScalarSequence {
    let denom = (vocab.len().max(2) - 1) as f32;
    wordpiece_ids(text, vocab)
        .into_iter()
        .map(|id| match scale {
            ScalarScale::Raw => id as f32,
            ScalarScale::Unit => id as f32 / denom,
        })
        .collect::<Vec<_>>()
        .into()
}

/// Source of the per-tweet scalar sequence.
pub trait ScalarProvider {
    fn scalars(&self, tweet_id: &str, clean_text: &str) -> Result<ScalarSequence>;
}

/// Default provider: WordPiece over a vocab file.
#[derive(Debug, Clone)]
pub struct VocabEncoder {
    pub vocab: Vocab,
    pub scale: ScalarScale,
}

impl VocabEncoder {
    pub fn new(vocab: Vocab) -> Self {
        VocabEncoder {
            vocab,
            scale: ScalarScale::Raw,
        }
    }
}

impl ScalarProvider for VocabEncoder {
    fn scalars(&self, _tweet_id: &str, clean_text: &str) -> Result<ScalarSequence> {
        Ok(encode_scalars_scaled(clean_text, &self.vocab, self.scale))
    }
}

/// Sequences computed elsewhere, keyed by tweet id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrecomputedSequences(pub HashMap<String, ScalarSequence>);

impl PrecomputedSequences {
    /// Parses lines of the form `tweet_id<TAB>v1,v2,…,vk`.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Precomputed { line: lineno, reason };
            let (id, payload) = line
                .split_once('\t')
                .ok_or_else(|| bad("missing tab separator".into()))?;
            let values = payload
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| match v.parse::<f32>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(bad(format!("non-numeric scalar {v:?}"))),
                })
                .collect::<Result<Vec<f32>>>()?;
            if map.insert(id.to_string(), ScalarSequence(values)).is_some() {
                return Err(bad(format!("duplicate tweet id {id:?}")));
            }
        }
        Ok(PrecomputedSequences(map))
    }

    pub fn get(&self, tweet_id: &str) -> Option<&ScalarSequence> {
        self.0.get(tweet_id)
    }
}

impl ScalarProvider for PrecomputedSequences {
    fn scalars(&self, tweet_id: &str, _clean_text: &str) -> Result<ScalarSequence> {
        self.get(tweet_id).cloned().ok_or_else(|| Error::Precomputed {
            line: 0,
            reason: format!("no sequence for tweet id {tweet_id:?}"),
        })
    }
}
