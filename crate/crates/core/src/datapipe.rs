//! Corpus ingestion (Davidson + Founta CSVs), stratified splitting, class
//! weights and batch planning.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub label: Label,
    pub text: String,
}

/// Per-class record counts, indexed by [`Label::index`].
pub type ClassCounts = [usize; Label::COUNT];

pub fn class_counts<'a>(labels: impl IntoIterator<Item = &'a Label>) -> ClassCounts {
    let mut counts = [0; Label::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Label for each of Davidson's numeric classes 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DavidsonMapping(pub [Label; 3]);

impl Default for DavidsonMapping {
    /// 0 hate speech, 1 offensive language, 2 neither.
    fn default() -> Self {
        DavidsonMapping([Label::Hateful, Label::Abusive, Label::Normal])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedCorpus {
    pub records: Vec<TweetRecord>,
    pub davidson_rows: usize,
    pub founta_rows: usize,
    pub spam_dropped: usize,
}

impl MergedCorpus {
    pub fn counts(&self) -> ClassCounts {
        class_counts(self.records.iter().map(|r| &r.label))
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Reads a source CSV into (id, label, text) rows. `id_col` falls back to
/// the row ordinal when absent.
fn read_source<R: Read>(
    source_name: &str,
    reader: R,
    text_col: &str,
    label_col: &str,
    allow_blank_index: bool,
    mut parse_label: impl FnMut(&str) -> std::result::Result<Option<Label>, String>,
) -> Result<(Vec<TweetRecord>, usize, usize)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let missing = |col: &str| Error::Dataset {
        source_name: source_name.into(),
        row: 1,
        reason: format!("missing column `{col}`"),
    };
    let text_idx = column(&headers, text_col).ok_or_else(|| missing(text_col))?;
    let label_idx = column(&headers, label_col).ok_or_else(|| missing(label_col))?;
    let id_idx = column(&headers, "id").or_else(|| {
        (allow_blank_index && headers.get(0).is_some_and(|h| h.trim().is_empty())).then_some(0)
    });

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let (mut rows, mut skipped) = (0, 0);
    for (ordinal, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(ordinal + 2, |p| p.line() as usize);
        let bad = |reason: String| Error::Dataset {
            source_name: source_name.into(),
            row: line,
            reason,
        };
        rows += 1;
        let raw_label = rec.get(label_idx).ok_or_else(|| bad(format!("missing `{label_col}` value")))?;
        let Some(label) = parse_label(raw_label.trim()).map_err(bad)? else {
            skipped += 1;
            continue;
        };
        let text = rec.get(text_idx).ok_or_else(|| bad(format!("missing `{text_col}` value")))?;
        let local_id = match id_idx {
            Some(i) => rec.get(i).unwrap_or_default().trim().to_string(),
            None => ordinal.to_string(),
        };
        if !seen.insert(local_id.clone()) {
            return Err(bad(format!("duplicate id {local_id:?}")));
        }
        records.push(TweetRecord {
            id: format!("{source_name}:{local_id}"),
            label,
            text: text.to_string(),
        });
    }
    Ok((records, rows, skipped))
}

/// Loads the Davidson CSV (`tweet`, `class` ∈ {0,1,2}).
pub fn load_davidson<R: Read>(reader: R, mapping: DavidsonMapping) -> Result<Vec<TweetRecord>> {
    let (records, _, _) = read_source("davidson", reader, "tweet", "class", true, |v| {
        let class = v
            .parse::<f64>()
            .ok()
            .filter(|c| c.fract() == 0.0 && (0.0..=2.0).contains(c))
            .ok_or_else(|| format!("unknown class value {v:?}"))?;
        Ok(Some(mapping.0[class as usize]))
    })?;
    Ok(records)
}

/// Loads the Founta CSV (`text`, `label` ∈ {hateful, abusive, normal, spam});
/// spam rows are dropped. Returns the records and the spam count.
pub fn load_founta<R: Read>(reader: R) -> Result<(Vec<TweetRecord>, usize)> {
    let (records, _, spam) = read_source("founta", reader, "text", "label", false, |v| {
        if v.eq_ignore_ascii_case("spam") {
            return Ok(None);
        }
        v.parse::<Label>().map(Some)
    })?;
    Ok((records, spam))
}

/// Davidson records followed by non-spam Founta records; ids are prefixed
/// with their source name. Cross-source duplicates are kept.
pub fn load_merge<R1: Read, R2: Read>(davidson: R1, founta: R2, mapping: DavidsonMapping) -> Result<MergedCorpus> {
    let d = load_davidson(davidson, mapping)?;
    let (f, spam) = load_founta(founta)?;
    let (davidson_rows, founta_rows) = (d.len(), f.len() + spam);
    let mut records = d;
    records.extend(f);
    Ok(MergedCorpus {
        records,
        davidson_rows,
        founta_rows,
        spam_dropped: spam,
    })
}

/// Writes the normalized `id,label,text` corpus.
pub fn write_corpus<W: Write>(out: W, records: &[TweetRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::NonNumeric).from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<TweetRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.deserialize::<TweetRecord>().enumerate() {
        let rec = rec?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Dataset {
                source_name: "corpus".into(),
                row: i + 2,
                reason: format!("duplicate id {:?}", rec.id),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitSet {
    pub train: Vec<TweetRecord>,
    pub validation: Vec<TweetRecord>,
    pub test: Vec<TweetRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}_ids.txt", self.as_str())
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "validation" | "val" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl SplitSet {
    pub fn get(&self, name: SplitName) -> &[TweetRecord] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    /// Writes `train_ids.txt`, `validation_ids.txt` and `test_ids.txt`.
    pub fn save_manifests(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for name in SplitName::ALL {
            let mut body = String::new();
            for r in self.get(name) {
                body.push_str(&r.id);
                body.push('\n');
            }
            fs::write(dir.join(name.file_name()), body)?;
        }
        Ok(())
    }

    /// Rebuilds the split from id-list files and the corpus they refer to.
    pub fn from_manifests(dir: &Path, corpus: &[TweetRecord]) -> Result<Self> {
        let by_id: HashMap<&str, &TweetRecord> = corpus.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut split = SplitSet::default();
        for name in SplitName::ALL {
            let body = fs::read_to_string(dir.join(name.file_name()))?;
            let records = body
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|id| {
                    by_id
                        .get(id.trim())
                        .map(|r| (*r).clone())
                        .ok_or_else(|| Error::Split(format!("{}: unknown id {id:?}", name.file_name())))
                })
                .collect::<Result<Vec<_>>>()?;
            match name {
                SplitName::Train => split.train = records,
                SplitName::Validation => split.validation = records,
                SplitName::Test => split.test = records,
            }
        }
        Ok(split)
    }
}

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);

// guards floor() against products such as 0.7·10 = 6.999…
const FLOOR_SLACK: f64 = 1e-9;

/// Per-class shuffle, then `floor(train·n)` records to train,
/// `floor(validation·n)` to validation and the remainder to test.
pub fn stratified_split(corpus: &[TweetRecord], fractions: (f64, f64, f64), seed: u64) -> Result<SplitSet> {
    let (f_train, f_val, f_test) = fractions;
    if [f_train, f_val, f_test].iter().any(|f| !(0.0..=1.0).contains(f))
        || (f_train + f_val + f_test - 1.0).abs() > 1e-9
    {
        return Err(Error::Split(format!("fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitSet::default();
    for label in Label::ALL {
        let mut members: Vec<&TweetRecord> = corpus.iter().filter(|r| r.label == label).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            return Err(Error::Split(format!(
                "class {label} has {} records; at least 3 are needed",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n = members.len() as f64;
        let n_train = (f_train * n + FLOOR_SLACK).floor() as usize;
        let n_val = (f_val * n + FLOOR_SLACK).floor() as usize;
        let (train, rest) = members.split_at(n_train);
        let (val, test) = rest.split_at(n_val);
        split.train.extend(train.iter().map(|r| (*r).clone()));
        split.validation.extend(val.iter().map(|r| (*r).clone()));
        split.test.extend(test.iter().map(|r| (*r).clone()));
    }
    Ok(split)
}

/// Loss multipliers `N / (K·n_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub [f64; Label::COUNT]);

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights([1.0; Label::COUNT]);

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn class_weights(train_counts: ClassCounts) -> Result<ClassWeights> {
    if let Some(i) = train_counts.iter().position(|&c| c == 0) {
        return Err(Error::ClassWeights(format!(
            "class {} has no training records",
            Label::ALL[i]
        )));
    }
    let total: usize = train_counts.iter().sum();
    let k = Label::COUNT as f64;
    Ok(ClassWeights(train_counts.map(|c| total as f64 / (k * c as f64))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// Fresh permutation each epoch.
    Shuffle,
    /// N draws with replacement, each record weighted by 1/n_class.
    WeightedSampler,
    /// Input order; used for evaluation.
    Sequential,
}

/// Record indices for each batch of one epoch. The generator is seeded by
/// `seed` on a stream chosen by `epoch`, so every epoch is reproducible on
/// its own.
pub fn make_batches(labels: &[Label], batch_size: usize, mode: BatchMode, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let order: Vec<usize> = match mode {
        BatchMode::Sequential => (0..n).collect(),
        BatchMode::Shuffle => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        BatchMode::WeightedSampler => {
            let counts = class_counts(labels);
            let weights: Vec<f64> = labels.iter().map(|l| 1.0 / counts[l.index()] as f64).collect();
            match WeightedIndex::new(&weights) {
                Ok(dist) => (0..n).map(|_| dist.sample(&mut rng)).collect(),
                Err(_) => Vec::new(),
            }
        }
    };
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(counts: &[(Label, usize)]) -> Vec<TweetRecord> {
        counts
            .iter()
            .flat_map(|&(label, n)| {
                (0..n).map(move |i| TweetRecord {
                    id: format!("{label}-{i}"),
                    label,
                    text: format!("tweet {i}"),
                })
            })
            .collect()
    }

    #[test]
    fn davidson_classes_map_in_published_order() {
        let csv = ",count,hate_speech,offensive_language,neither,class,tweet\n\
                   0,3,2,1,0,0,first\n1,3,0,3,0,1,second\n2,3,0,0,3,2,third\n";
        let recs = load_davidson(csv.as_bytes(), DavidsonMapping::default()).unwrap();
        let labels: Vec<Label> = recs.iter().map(|r| r.label).collect();
        assert_eq!(labels, [Label::Hateful, Label::Abusive, Label::Normal]);
        assert_eq!(recs[1].id, "davidson:1");
    }

    #[test]
    fn davidson_unknown_class_names_the_row() {
        let csv = "tweet,class\na,0\nb,3\n";
        match load_davidson(csv.as_bytes(), DavidsonMapping::default()) {
            Err(Error::Dataset { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn founta_spam_is_dropped() {
        let csv = "text,label\na,hateful\nb,spam\nc,normal\nd,abusive\n";
        let (recs, spam) = load_founta(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(spam, 1);
        assert!(load_founta("text,label\na,angry\n".as_bytes()).is_err());
    }

    #[test]
    fn merge_counts() {
        let d = "tweet,class\na,0\nb,1\nc,2\n";
        let f = "text,label\nw,hateful\nx,spam\ny,normal\nz,abusive\n";
        let merged = load_merge(d.as_bytes(), f.as_bytes(), DavidsonMapping::default()).unwrap();
        assert_eq!(merged.records.len(), 6);
        assert_eq!(merged.counts(), [2, 2, 2]);
        assert_eq!(merged.spam_dropped, 1);
    }

    #[test]
    fn duplicate_ids_within_a_source() {
        let f = "id,text,label\n7,a,normal\n7,b,normal\n";
        assert!(matches!(load_founta(f.as_bytes()), Err(Error::Dataset { row: 3, .. })));
    }

    #[test]
    fn corpus_file_round_trip() {
        let recs = vec![TweetRecord {
            id: "founta:1".into(),
            label: Label::Abusive,
            text: "he said \"hi\", then left\nnew line".into(),
        }];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &recs).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("\"id\",\"label\",\"text\""));
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn floor_rule_per_class() {
        let c = corpus(&[(Label::Hateful, 20), (Label::Abusive, 10)]);
        let s = stratified_split(&c, DEFAULT_FRACTIONS, 1).unwrap();
        let count = |rs: &[TweetRecord]| class_counts(rs.iter().map(|r| &r.label));
        assert_eq!(count(&s.train), [14, 7, 0]);
        assert_eq!(count(&s.validation), [3, 1, 0]);
        assert_eq!(count(&s.test), [3, 2, 0]);

        let c = corpus(&[(Label::Normal, 10)]);
        let s = stratified_split(&c, DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (7, 1, 2));
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let c = corpus(&[(Label::Hateful, 30), (Label::Normal, 40)]);
        assert_eq!(
            stratified_split(&c, DEFAULT_FRACTIONS, 5).unwrap(),
            stratified_split(&c, DEFAULT_FRACTIONS, 5).unwrap()
        );
        assert_ne!(
            stratified_split(&c, DEFAULT_FRACTIONS, 5).unwrap(),
            stratified_split(&c, DEFAULT_FRACTIONS, 6).unwrap()
        );
    }

    #[test]
    fn tiny_class_is_rejected() {
        let c = corpus(&[(Label::Hateful, 2), (Label::Normal, 40)]);
        assert!(matches!(stratified_split(&c, DEFAULT_FRACTIONS, 0), Err(Error::Split(_))));
    }

    #[test]
    fn manifests_round_trip() {
        let c = corpus(&[(Label::Hateful, 10), (Label::Abusive, 10), (Label::Normal, 10)]);
        let s = stratified_split(&c, DEFAULT_FRACTIONS, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.save_manifests(dir.path()).unwrap();
        assert_eq!(SplitSet::from_manifests(dir.path(), &c).unwrap(), s);
    }

    #[test]
    fn weight_formula() {
        let w = class_weights([5_000, 30_000, 60_000]).unwrap();
        for (got, want) in w.0.iter().zip([95_000.0 / 15_000.0, 95_000.0 / 90_000.0, 95_000.0 / 180_000.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(class_weights([10, 10, 10]).unwrap().0, [1.0, 1.0, 1.0]);
        let w = class_weights([1, 1, 2]).unwrap().0;
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-15 && (w[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!(class_weights([1, 0, 2]).is_err());
    }

    #[test]
    fn shuffle_batches() {
        let labels = vec![Label::Normal; 33];
        let b = make_batches(&labels, 16, BatchMode::Shuffle, 9, 0);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), [16, 16, 1]);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..33).collect::<Vec<_>>());
        assert_eq!(b, make_batches(&labels, 16, BatchMode::Shuffle, 9, 0));
        assert_ne!(b, make_batches(&labels, 16, BatchMode::Shuffle, 9, 1));
    }

    #[test]
    fn sampler_balances_classes() {
        let mut labels = vec![Label::Hateful; 100];
        labels.extend(vec![Label::Normal; 900]);
        let mut hateful = 0;
        let mut draws = 0;
        for epoch in 0..10 {
            for idx in make_batches(&labels, 16, BatchMode::WeightedSampler, 4, epoch).concat() {
                draws += 1;
                hateful += usize::from(labels[idx] == Label::Hateful);
            }
        }
        assert_eq!(draws, 10_000);
        let share = hateful as f64 / draws as f64;
        assert!((share - 0.5).abs() < 0.05, "share {share}");
    }
}
