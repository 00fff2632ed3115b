use dictnn::hatedict::{
    ingest_hatebase_json, similarity, token_score, HateDictionary, HateTerm, NullOffensiveness, DEFAULT_CUTOFF,
    MAX_TOKEN_SCORE,
};
use proptest::prelude::*;

fn oracle_matches(a: &[char], b: &[char]) -> usize {
    let mut best = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let k = a[i..].iter().zip(&b[j..]).take_while(|(x, y)| x == y).count();
            if k > best.2 {
                best = (i, j, k);
            }
        }
    }
    let (i, j, k) = best;
    if k == 0 {
        0
    } else {
        k + oracle_matches(&a[..i], &b[..j]) + oracle_matches(&a[i + k..], &b[j + k..])
    }
}

fn oracle(a: &str, b: &str) -> f64 {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * oracle_matches(&a, &b) as f64 / (a.len() + b.len()) as f64
}

fn term_strategy() -> impl Strategy<Value = String> {
    "[a-e]{1,8}"
}

proptest! {
    #[test]
    fn similarity_matches_brute_force(a in "[abc!1]{0,12}", b in "[abc!1]{0,12}") {
        prop_assert!((similarity(&a, &b) - oracle(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn similarity_bounds_and_reflexive(a in "\\PC{1,10}", b in "\\PC{0,10}") {
        let s = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(similarity(&a, &a), 1.0);
    }

    #[test]
    fn token_score_bounded(
        token in term_strategy(),
        terms in prop::collection::vec((term_strategy(), 0u8..=100, any::<bool>()), 0..12),
    ) {
        let dict = HateDictionary::from_terms(terms.iter().map(|(t, o, u)| HateTerm::new(t, *o, *u).unwrap()));
        let s = token_score(&token, &dict, DEFAULT_CUTOFF);
        prop_assert!((0.0..=MAX_TOKEN_SCORE).contains(&s));
        let best = dict.entries().iter().map(|e| similarity(&token, e.term())).fold(0.0, f64::max);
        if best < DEFAULT_CUTOFF {
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn adding_a_match_moves_score_toward_its_value(
        base in prop::collection::vec((0u8..=100, any::<bool>()), 1..5),
        extra in (0u8..=100, any::<bool>()),
    ) {
        // "abcdefghij" plus one trailing letter keeps similarity 20/21 with the token.
        let token = "abcdefghij";
        let terms: Vec<HateTerm> = base
            .iter()
            .enumerate()
            .map(|(i, (o, u))| HateTerm::new(&format!("{token}{}", (b'k' + i as u8) as char), *o, *u).unwrap())
            .collect();
        let before = token_score(token, &HateDictionary::from_terms(terms.clone()), DEFAULT_CUTOFF);
        let added = HateTerm::new(&format!("{token}z"), extra.0, extra.1).unwrap();
        let value = added.effective_score();
        let mut all = terms;
        all.push(added);
        let after = token_score(token, &HateDictionary::from_terms(all), DEFAULT_CUTOFF);
        if value > before {
            prop_assert!(after > before);
        } else if value < before {
            prop_assert!(after < before);
        } else {
            prop_assert!((after - before).abs() < 1e-12);
        }
    }

    #[test]
    fn ingest_then_load_round_trips(
        rows in prop::collection::btree_map("[a-z]{1,10}", (0u8..=100, any::<bool>()), 1..20),
    ) {
        let results: Vec<serde_json::Value> = rows
            .iter()
            .map(|(t, (o, u))| serde_json::json!({"term": t, "average_offensiveness": o, "is_unambiguous": u}))
            .collect();
        let page = serde_json::json!({"result": results}).to_string();
        let report = ingest_hatebase_json(&[page], NullOffensiveness::default()).unwrap();
        let dict = HateDictionary::load(report.csv.as_bytes()).unwrap();
        prop_assert_eq!(dict.len(), rows.len());
        for e in dict.entries() {
            let (o, u) = rows[e.term()];
            prop_assert_eq!(e.offensiveness(), o);
            prop_assert_eq!(e.unambiguous(), u);
        }
    }
}

#[test]
fn similarity_is_not_symmetric_in_general() {
    assert_eq!(similarity("acbacc", "bcbbacb"), 6.0 / 13.0);
    assert_eq!(similarity("bcbbacb", "acbacc"), 8.0 / 13.0);
    assert_eq!(oracle("acbacc", "bcbbacb"), 6.0 / 13.0);
}

#[test]
fn load_reports_bad_line() {
    let csv = "term,offensiveness,unambiguous\nfoo,10,false\nbar,abc,true\n";
    let err = HateDictionary::load(csv.as_bytes()).unwrap_err().to_string();
    assert!(err.contains('3'), "{err}");
}
