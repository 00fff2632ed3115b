//! Generated toy corpus: a vocabulary, a hate dictionary and labelled tweets
//! in which hateful tweets carry unambiguous dictionary terms, abusive tweets
//! carry ambiguous ones and normal tweets carry none.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datapipe::{stratified_split, write_corpus, SplitName, TweetRecord, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::fusion::{Mode, Vectorizer};
use crate::harness::{compute_metrics, evaluate, train, EncodedSplit, MetricsReport, RunConfig};
use crate::hatedict::TokenScorer;
use crate::tokenscalar::VocabEncoder;
use crate::hatedict::{HateDictionary, HateTerm, DEFAULT_CUTOFF, DICTIONARY_HEADER};
use crate::tokenscalar::{Vocab, CLS, PAD, SEP, UNK};
use crate::Label;

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";
const CENSOR_SYMBOLS: [char; 3] = ['*', '$', '%'];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub tweets: usize,
    /// Hateful, abusive, normal.
    pub class_shares: [f64; Label::COUNT],
    /// Probability that an embedded dictionary term has a symbol-censored letter.
    pub censor_rate: f64,
    pub hate_terms: usize,
    pub ambiguous_terms: usize,
    pub filler_words: usize,
    pub seed: u64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            tweets: 3000,
            class_shares: [0.15, 0.35, 0.5],
            censor_rate: 0.2,
            hate_terms: 24,
            ambiguous_terms: 24,
            filler_words: 240,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub vocab: Vocab,
    pub dictionary: HateDictionary,
    pub records: Vec<TweetRecord>,
}

impl SyntheticCorpus {
    /// Writes `corpus.csv`, `vocab.txt` and `dictionary.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_corpus(fs::File::create(dir.join("corpus.csv"))?, &self.records)?;
        let vocab: Vec<&str> = (0..self.vocab.len() as u32).filter_map(|i| self.vocab.token(i)).collect();
        fs::write(dir.join("vocab.txt"), vocab.join("\n") + "\n")?;
        let mut dict = String::from(DICTIONARY_HEADER);
        dict.push('\n');
        for t in self.dictionary.entries() {
            dict.push_str(&format!("{},{},{}\n", t.term(), t.offensiveness(), t.unambiguous()));
        }
        fs::write(dir.join("dictionary.csv"), dict)?;
        Ok(())
    }
}

fn syllable(rng: &mut ChaCha8Rng) -> String {
    let c = CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char;
    let v = VOWELS[rng.gen_range(0..VOWELS.len())] as char;
    format!("{c}{v}")
}

fn word(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    let mut w = String::new();
    while w.len() < len {
        w.push_str(&syllable(rng));
    }
    w.truncate(len);
    w
}

/// Draws distinct words accepted by `ok`.
fn distinct_words(
    rng: &mut ChaCha8Rng,
    count: usize,
    (min_len, max_len): (usize, usize),
    taken: &mut HashSet<String>,
    ok: impl Fn(&str) -> bool,
) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = word(rng, min_len, max_len);
        if ok(&w) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn censor(term: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = term.chars().collect();
    let i = rng.gen_range(1..chars.len() - 1);
    chars[i] = CENSOR_SYMBOLS[rng.gen_range(0..CENSOR_SYMBOLS.len())];
    chars.into_iter().collect()
}

pub fn generate(opts: &SyntheticOptions) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut taken = HashSet::new();

    let fillers = distinct_words(&mut rng, opts.filler_words, (2, 6), &mut taken, |_| true);
    let hate = distinct_words(&mut rng, opts.hate_terms, (7, 9), &mut taken, |_| true);
    let ambiguous = distinct_words(&mut rng, opts.ambiguous_terms, (7, 9), &mut taken, |_| true);

    let mut terms = Vec::new();
    for h in &hate {
        terms.push(HateTerm::new(h, rng.gen_range(55..=90), true).expect("single word"));
    }
    for a in &ambiguous {
        terms.push(HateTerm::new(a, rng.gen_range(35..=70), false).expect("single word"));
    }
    let dictionary = HateDictionary::from_terms(terms);

    // Out-of-vocabulary words that the dictionary does not match.
    let noise = distinct_words(&mut rng, 300, (5, 9), &mut taken, |w| {
        dictionary.matches(w, DEFAULT_CUTOFF).next().is_none()
    });

    let mut vocab_tokens: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
    vocab_tokens.extend([".", ",", "!", "?"].iter().map(|s| s.to_string()));
    for &c in CONSONANTS.iter().chain(VOWELS) {
        vocab_tokens.push((c as char).to_string());
        vocab_tokens.push(format!("##{}", c as char));
    }
    for &c in CONSONANTS {
        for &v in VOWELS {
            vocab_tokens.push(format!("##{}{}", c as char, v as char));
        }
    }
    vocab_tokens.extend(fillers.iter().cloned());
    let vocab = Vocab::from_tokens(vocab_tokens).expect("synthetic vocab is well formed");

    let topic_size = fillers.len() / 8;
    let topics: Vec<&[String]> = (0..Label::COUNT).map(|k| &fillers[k * topic_size..(k + 1) * topic_size]).collect();

    let mut labels = Vec::with_capacity(opts.tweets);
    for (k, share) in opts.class_shares.iter().enumerate() {
        let n = if k + 1 == Label::COUNT {
            opts.tweets - labels.len()
        } else {
            (share * opts.tweets as f64).round() as usize
        };
        labels.extend(std::iter::repeat_n(Label::ALL[k], n));
    }
    labels.shuffle(&mut rng);

    let embed = |pool: &[String], rng: &mut ChaCha8Rng| {
        let t = pool.choose(rng).expect("non-empty term pool");
        if rng.gen_bool(opts.censor_rate) {
            censor(t, rng)
        } else {
            t.clone()
        }
    };

    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mut words: Vec<String> = (0..rng.gen_range(6..=14))
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        topics[label.index()].choose(&mut rng).unwrap().clone()
                    } else {
                        fillers.choose(&mut rng).unwrap().clone()
                    }
                })
                .collect();
            for _ in 0..rng.gen_range(1..=3) {
                words.push(noise.choose(&mut rng).unwrap().clone());
            }
            match label {
                Label::Hateful => {
                    words.push(embed(&hate, &mut rng));
                    if rng.gen_bool(0.3) {
                        words.push(embed(&ambiguous, &mut rng));
                    }
                }
                Label::Abusive => {
                    for _ in 0..rng.gen_range(1..=2) {
                        words.push(embed(&ambiguous, &mut rng));
                    }
                }
                Label::Normal => {}
            }
            words.shuffle(&mut rng);
            if rng.gen_bool(0.3) {
                words.push(["!", "?", "."][rng.gen_range(0..3)].to_string());
            }
            TweetRecord {
                id: format!("synthetic:{i}"),
                label,
                text: words.join(" "),
            }
        })
        .collect();

    SyntheticCorpus {
        vocab,
        dictionary,
        records,
    }
}

/// Test-split reports of the 1D and 2D models trained on the same corpus.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub one_d: MetricsReport,
    pub two_d: MetricsReport,
    /// Macro F1 of always predicting the most frequent training class.
    pub majority_macro_f1: f64,
}

/// Splits `corpus` 70/15/15, trains one model per mode with `run` (its
/// `model` field is ignored) and evaluates each best-validation network on
/// the test split.
pub fn compare_models(corpus: &SyntheticCorpus, run: &RunConfig, split_seed: u64) -> Result<Comparison> {
    let splits = stratified_split(&corpus.records, DEFAULT_FRACTIONS, split_seed)?;
    let scorer = TokenScorer::new(&corpus.dictionary);
    let encoder = VocabEncoder::new(corpus.vocab.clone());
    let mut reports = Vec::with_capacity(2);
    for mode in [Mode::OneD, Mode::TwoD] {
        let vectorizer = Vectorizer {
            mode,
            provider: &encoder,
            scorer: Some(&scorer),
        };
        let encode = |name| EncodedSplit::encode(splits.get(name), &vectorizer);
        let (tr, va, te) = (encode(SplitName::Train)?, encode(SplitName::Validation)?, encode(SplitName::Test)?);
        let cfg = RunConfig { model: mode, ..run.clone() };
        let outcome = train(&cfg, &tr, &va, None)?;
        let net = outcome
            .best_network
            .ok_or_else(|| Error::Config("no epochs were trained".into()))?;
        reports.push(evaluate(&net, &te)?);
    }
    let test = splits.get(SplitName::Test);
    let train_labels: Vec<Label> = splits.get(SplitName::Train).iter().map(|r| r.label).collect();
    let counts = crate::datapipe::class_counts(&train_labels);
    let majority = Label::ALL[(0..Label::COUNT).max_by_key(|&k| (counts[k], k)).unwrap_or(0)];
    let targets: Vec<Label> = test.iter().map(|r| r.label).collect();
    let majority_macro_f1 = compute_metrics(&vec![majority; targets.len()], &targets)?.macro_f1();
    let two_d = reports.pop().expect("two reports");
    let one_d = reports.pop().expect("two reports");
    Ok(Comparison {
        one_d,
        two_d,
        majority_macro_f1,
    })
}
