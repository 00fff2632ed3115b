use crate::datapipe::TweetRecord;
use crate::fusion::dict_vector;
use crate::hatedict::TokenScorer;
use crate::textprep::{clean_tweet, simple_tokenize};
use crate::Label;

/// Sum of the (unstretched) dictionary score vector of one raw tweet.
pub fn tweet_hate_score(raw_text: &str, scorer: &TokenScorer<'_>) -> f64 {
    dict_vector(&simple_tokenize(&clean_tweet(raw_text)), scorer).iter().sum()
}

/// Mean per-tweet hate score for hateful, abusive and normal records.
/// A class with no records is `None`.
pub fn avg_hate_score_per_class(records: &[TweetRecord], scorer: &TokenScorer<'_>) -> [Option<f64>; Label::COUNT] {
    let mut sums = [0.0; Label::COUNT];
    let mut counts = [0usize; Label::COUNT];
    for r in records {
        sums[r.label.index()] += tweet_hate_score(&r.text, scorer);
        counts[r.label.index()] += 1;
    }
    std::array::from_fn(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hatedict::{HateDictionary, HateTerm};

    fn rec(label: Label, text: &str) -> TweetRecord {
        TweetRecord {
            id: text.into(),
            label,
            text: text.into(),
        }
    }

    #[test]
    fn per_class_means_and_absent_class() {
        let dict = HateDictionary::from_terms([
            HateTerm::new("badword", 50, true).unwrap(),
            HateTerm::new("meanword", 50, false).unwrap(),
        ]);
        let scorer = TokenScorer::new(&dict);
        let records = [
            rec(Label::Hateful, "badword"),
            rec(Label::Hateful, "badword badword"),
            rec(Label::Normal, "hello there"),
        ];
        let avg = avg_hate_score_per_class(&records, &scorer);
        assert_eq!(avg[0], Some(150.0));
        assert_eq!(avg[1], None);
        assert_eq!(avg[2], Some(0.0));
    }
}
