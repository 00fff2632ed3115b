use dictnn::fusion::{fuse_2d, pad_or_truncate, stretch_linear, vectorize_1d, Mode, TweetMatrix, Vectorizer, MAX_LEN};
use dictnn::hatedict::{HateDictionary, HateTerm, TokenScorer};
use dictnn::textprep::clean_tweet;
use dictnn::tokenscalar::{encode_scalars, PrecomputedSequences, Vocab, VocabEncoder};
use proptest::prelude::*;

/// Interpolation with the source position kept as the exact fraction
/// i·(m−1) / (n−1).
fn oracle(v: &[f64], n: usize) -> Vec<f64> {
    let m = v.len();
    if n == 1 {
        return vec![v[0]];
    }
    (0..n)
        .map(|i| {
            let (num, den) = (i * (m - 1), n - 1);
            let (q, r) = (num / den, num % den);
            if r == 0 {
                v[q]
            } else {
                v[q] * ((den - r) as f64 / den as f64) + v[q + 1] * (r as f64 / den as f64)
            }
        })
        .collect()
}

fn vocab() -> Vocab {
    let mut t: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "you", "are", "an", "idiot", "!", "."]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in 'a'..='z' {
        t.push(c.to_string());
        t.push(format!("##{c}"));
    }
    Vocab::from_tokens(t).unwrap()
}

fn dictionary() -> HateDictionary {
    HateDictionary::from_terms([HateTerm::new("idiot", 60, false).unwrap(), HateTerm::new("scumbag", 80, true).unwrap()])
}

proptest! {
    #[test]
    fn stretch_matches_oracle(v in prop::collection::vec(-200.0f64..200.0, 1..40), n in 1usize..150) {
        let got = stretch_linear(&v, n);
        let want = oracle(&v, n);
        prop_assert_eq!(got.len(), n);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9, "{} vs {}", g, w);
        }
    }

    #[test]
    fn stretch_endpoints_bounds_identity(v in prop::collection::vec(0.0f64..200.0, 2..40), n in 2usize..150) {
        let out = stretch_linear(&v, n);
        prop_assert_eq!(out[0], v[0]);
        prop_assert_eq!(out[n - 1], v[v.len() - 1]);
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        prop_assert!(out.iter().all(|&x| lo <= x && x <= hi));
        prop_assert_eq!(stretch_linear(&v, v.len()), v);
    }

    #[test]
    fn pad_or_truncate_length(v in prop::collection::vec(any::<i32>(), 0..300), len in 0usize..200) {
        let out = pad_or_truncate(&v, len);
        prop_assert_eq!(out.len(), len);
        let keep = v.len().min(len);
        prop_assert_eq!(&out[..keep], &v[..keep]);
        prop_assert!(out[keep..].iter().all(|&x| x == 0));
    }

    #[test]
    fn fused_first_row_is_the_baseline(words in prop::collection::vec("(you|are|an|idiot|scumbag|[a-z]{1,9}|!)", 0..80)) {
        let text = clean_tweet(&words.join(" "));
        let (v, d) = (vocab(), dictionary());
        let scorer = TokenScorer::new(&d);
        let one = vectorize_1d(&text, &v);
        let two = fuse_2d(&text, &v, &scorer);
        prop_assert_eq!((one.rows(), two.rows(), two.cols()), (1, 2, MAX_LEN));
        prop_assert_eq!(one.row(0), two.row(0));
        let len = encode_scalars(&text, &v).len().min(MAX_LEN);
        for r in 0..2 {
            prop_assert!(two.row(r).iter().all(|x| x.is_finite()));
            prop_assert!(two.row(r)[len..].iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn dictionary_row_follows_the_tokens() {
    let (v, d) = (vocab(), dictionary());
    let scorer = TokenScorer::new(&d);
    // one word per piece, so the dictionary row needs no stretching
    let m = fuse_2d("you are an idiot", &v, &scorer);
    assert_eq!(&m.row(0)[..4], &[4.0, 5.0, 6.0, 7.0]);
    assert_eq!(&m.row(1)[..5], &[0.0, 0.0, 0.0, 60.0, 0.0]);
}

#[test]
fn precomputed_provider_is_interchangeable() {
    let (v, d) = (vocab(), dictionary());
    let scorer = TokenScorer::new(&d);
    let raw = "You are a SCUMBAG!!";
    let clean = clean_tweet(raw);
    let values: Vec<String> = encode_scalars(&clean, &v).values().iter().map(|x| x.to_string()).collect();
    let pre = PrecomputedSequences::load(format!("t1\t{}\n", values.join(",")).as_bytes()).unwrap();
    let enc = VocabEncoder::new(v);
    for mode in [Mode::OneD, Mode::TwoD] {
        let a = Vectorizer { mode, provider: &enc, scorer: Some(&scorer) }.vectorize("t1", raw).unwrap();
        let b = Vectorizer { mode, provider: &pre, scorer: Some(&scorer) }.vectorize("t1", raw).unwrap();
        assert_eq!(a, b);
    }
    assert!(Vectorizer { mode: Mode::OneD, provider: &pre, scorer: None }.vectorize("t2", raw).is_err());
}

#[test]
fn matrix_dump_round_trip() {
    let (v, d) = (vocab(), dictionary());
    let scorer = TokenScorer::new(&d);
    let a = fuse_2d("an idiot", &v, &scorer);
    let b = vectorize_1d("you", &v);
    let mut buf = Vec::new();
    a.write_to(&mut buf).unwrap();
    b.write_to(&mut buf).unwrap();
    assert_eq!(buf.len(), 2 + 3 * MAX_LEN * 4);
    let mut r = buf.as_slice();
    assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), Some(a));
    assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), Some(b));
    assert_eq!(TweetMatrix::read_from(&mut r).unwrap(), None);
}
