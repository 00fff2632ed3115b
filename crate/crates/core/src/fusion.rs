//! Assembly of fixed-size model inputs from the embedding track and the
//! dictionary-score track.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hatedict::TokenScorer;
use crate::textprep::{clean_tweet, simple_tokenize};
use crate::tokenscalar::{encode_scalars, ScalarProvider, ScalarSequence, Vocab};

/// Column count of every model input.
pub const MAX_LEN: usize = 120;

/// A 1×120 (embedding only) or 2×120 (embedding + dictionary) input, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetMatrix {
    rows: usize,
    values: Vec<f32>,
}

impl TweetMatrix {
    pub fn zeros(rows: usize) -> Self {
        assert!(rows == 1 || rows == 2, "a tweet matrix has 1 or 2 rows");
        TweetMatrix {
            rows,
            values: vec![0.0; rows * MAX_LEN],
        }
    }

    fn from_rows(rows: &[Vec<f32>]) -> Self {
        let mut m = TweetMatrix::zeros(rows.len());
        for (r, row) in rows.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&pad_or_truncate(row, MAX_LEN));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        MAX_LEN
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * MAX_LEN..(r + 1) * MAX_LEN]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.values[r * MAX_LEN..(r + 1) * MAX_LEN]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Dump record: one row-count byte, then the values as little-endian f32.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&[self.rows as u8])?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads one dump record; `Ok(None)` at a clean end of stream.
    pub fn read_from<R: Read>(mut input: R) -> Result<Option<Self>> {
        let mut head = [0u8; 1];
        match input.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let rows = head[0] as usize;
        if rows != 1 && rows != 2 {
            return Err(Error::Config(format!("matrix dump: bad row count {rows}")));
        }
        let mut buf = vec![0u8; rows * MAX_LEN * 4];
        input.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Some(TweetMatrix { rows, values }))
    }
}

/// Per-token dictionary scores.
pub fn dict_vector<S: AsRef<str>>(tokens: &[S], scorer: &TokenScorer<'_>) -> Vec<f64> {
    tokens.iter().map(|t| scorer.score(t.as_ref())).collect()
}

/// Resamples `v` to length `n` by linear interpolation, mapping output index
/// `i` to source position `i·(m−1)/(n−1)` so both endpoints line up.
pub fn stretch_linear(v: &[f64], n: usize) -> Vec<f64> {
    let m = v.len();
    match (m, n) {
        (_, 0) => Vec::new(),
        (0, _) => vec![0.0; n],
        (1, _) | (_, 1) => vec![v[0]; n],
        _ => (0..n)
            .map(|i| {
                // exact source position lo + r/den
                let (num, den) = (i * (m - 1), n - 1);
                let (lo, r) = (num / den, num % den);
                if r == 0 {
                    return v[lo];
                }
                let (a, b) = (v[lo], v[lo + 1]);
                let frac = r as f64 / den as f64;
                (a + (b - a) * frac).clamp(a.min(b), a.max(b))
            })
            .collect(),
    }
}

/// First `len` elements of `v`, right-padded with zeros.
pub fn pad_or_truncate<T: Copy + Default>(v: &[T], len: usize) -> Vec<T> {
    let mut out: Vec<T> = v.iter().take(len).copied().collect();
    out.resize(len, T::default());
    out
}

fn matrix_1d(embedding: &ScalarSequence) -> TweetMatrix {
    TweetMatrix::from_rows(std::slice::from_ref(&embedding.0))
}

fn matrix_2d(embedding: &ScalarSequence, clean_text: &str, scorer: &TokenScorer<'_>) -> TweetMatrix {
    let e = &embedding.0[..embedding.len().min(MAX_LEN)];
    let d = dict_vector(&simple_tokenize(clean_text), scorer);
    let d: Vec<f32> = stretch_linear(&d, e.len()).into_iter().map(|x| x as f32).collect();
    TweetMatrix::from_rows(&[e.to_vec(), d])
}

/// Baseline input: the embedding row alone.
pub fn vectorize_1d(clean_text: &str, vocab: &Vocab) -> TweetMatrix {
    matrix_1d(&encode_scalars(clean_text, vocab))
}

/// Embedding row plus the dictionary row stretched to the (truncated)
/// embedding length.
pub fn fuse_2d(clean_text: &str, vocab: &Vocab, scorer: &TokenScorer<'_>) -> TweetMatrix {
    matrix_2d(&encode_scalars(clean_text, vocab), clean_text, scorer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

impl Mode {
    pub fn rows(self) -> usize {
        match self {
            Mode::OneD => 1,
            Mode::TwoD => 2,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "1d" | "1D" => Ok(Mode::OneD),
            "2d" | "2D" => Ok(Mode::TwoD),
            other => Err(format!("unknown mode {other:?} (expected 1d or 2d)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::OneD => "1d",
            Mode::TwoD => "2d",
        })
    }
}

/// Raw tweet → cleaned text → model input, using any scalar provider.
pub struct Vectorizer<'a> {
    pub mode: Mode,
    pub provider: &'a dyn ScalarProvider,
    /// Required for [`Mode::TwoD`].
    pub scorer: Option<&'a TokenScorer<'a>>,
}

impl<'a> Vectorizer<'a> {
    pub fn vectorize(&self, tweet_id: &str, raw_text: &str) -> Result<TweetMatrix> {
        let clean = clean_tweet(raw_text);
        let embedding = self.provider.scalars(tweet_id, &clean)?;
        match self.mode {
            Mode::OneD => Ok(matrix_1d(&embedding)),
            Mode::TwoD => {
                let scorer = self
                    .scorer
                    .ok_or_else(|| Error::Config("2d vectorisation needs a hate dictionary".into()))?;
                Ok(matrix_2d(&embedding, &clean, scorer))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hatedict::{HateDictionary, HateTerm};
    use crate::tokenscalar::{PAD, SEP, UNK, CLS};

    fn dict() -> HateDictionary {
        HateDictionary::from_terms([HateTerm::new("slur", 70, true).unwrap()])
    }

    fn vocab() -> Vocab {
        Vocab::from_tokens([PAD, UNK, CLS, SEP, "idiot", "##s", "are", "sad", "hello", "slur"]).unwrap()
    }

    #[test]
    fn dict_vector_cases() {
        let d = dict();
        let scorer = TokenScorer::new(&d);
        assert!(dict_vector::<&str>(&[], &scorer).is_empty());
        assert_eq!(dict_vector(&["hello", "world"], &scorer), vec![0.0, 0.0]);
        assert_eq!(dict_vector(&["hello", "slur"], &scorer), vec![0.0, 140.0]);
    }

    #[test]
    fn stretch_cases() {
        assert_eq!(stretch_linear(&[100.0, 0.0, 50.0], 5), vec![100.0, 50.0, 0.0, 25.0, 50.0]);
        assert_eq!(stretch_linear(&[7.0], 3), vec![7.0; 3]);
        assert_eq!(stretch_linear(&[], 4), vec![0.0; 4]);
        assert_eq!(stretch_linear(&[1.0, 2.0], 1), vec![1.0]);
        assert!(stretch_linear(&[1.0, 2.0], 0).is_empty());
        // compression keeps the endpoints
        assert_eq!(stretch_linear(&[0.0, 10.0, 20.0, 30.0, 40.0], 3), vec![0.0, 20.0, 40.0]);
    }

    #[test]
    fn pad_and_truncate() {
        let p = pad_or_truncate(&[1.0f32, 2.0], MAX_LEN);
        assert_eq!(p.len(), MAX_LEN);
        assert_eq!(&p[..3], &[1.0, 2.0, 0.0]);
        let full: Vec<f32> = (0..120).map(|x| x as f32).collect();
        assert_eq!(pad_or_truncate(&full, MAX_LEN), full);
        let long: Vec<f32> = (0..121).map(|x| x as f32).collect();
        assert_eq!(pad_or_truncate(&long, MAX_LEN), full);
    }

    #[test]
    fn vectorize_1d_cases() {
        let v = vocab();
        assert_eq!(vectorize_1d("", &v), TweetMatrix::zeros(1));
        let m = vectorize_1d("idiots are sad", &v);
        assert_eq!(&m.row(0)[..5], &[4.0, 5.0, 6.0, 7.0, 0.0]);
        let long = vec!["sad"; 130].join(" ");
        let m = vectorize_1d(&long, &v);
        assert!(m.row(0).iter().all(|&x| x == 7.0));
    }

    #[test]
    fn fuse_2d_cases() {
        let (v, d) = (vocab(), dict());
        let scorer = TokenScorer::new(&d);
        assert_eq!(fuse_2d("", &v, &scorer), TweetMatrix::zeros(2));
        let m = fuse_2d("hello slur", &v, &scorer);
        assert_eq!(&m.row(0)[..3], &[8.0, 9.0, 0.0]);
        assert_eq!(&m.row(1)[..3], &[0.0, 140.0, 0.0]);
    }

    #[test]
    fn fuse_2d_stretches_to_subword_length() {
        let v = Vocab::from_tokens([PAD, UNK, CLS, SEP, "a", "##b", "##c", "x", "y"]).unwrap();
        let d = HateDictionary::from_terms([
            HateTerm::new("abc", 100, false).unwrap(),
            HateTerm::new("y", 50, false).unwrap(),
        ]);
        let scorer = TokenScorer::new(&d);
        // simple tokens [abc, x, y] (3) vs subwords [a, ##b, ##c, x, y] (5)
        let m = fuse_2d("abc x y", &v, &scorer);
        assert_eq!(&m.row(1)[..6], &[100.0, 50.0, 0.0, 25.0, 50.0, 0.0]);
    }

    #[test]
    fn dump_round_trip() {
        let v = vocab();
        let d = dict();
        let scorer = TokenScorer::new(&d);
        let mut buf = Vec::new();
        let a = fuse_2d("hello slur", &v, &scorer);
        let b = vectorize_1d("sad", &v);
        a.write_to(&mut buf).unwrap();
        b.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 1 + 240 * 4 + 1 + 120 * 4);
        assert_eq!(buf[0], 2);
        let mut r = buf.as_slice();
        assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), Some(a));
        assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), Some(b));
        assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), None);
    }
}
