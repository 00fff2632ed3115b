//! Tweet cleaning and the plain whitespace tokenizer used by the dictionary
//! track.
//!
//! Cleaning applies, in order: lowercasing, URL removal, mention removal,
//! reserved-word removal (`rt`, `fav`), emoji and smiley removal, hashtag
//! unwrapping, standalone-digit removal, symbol removal (everything except
//! letters, digits and `? ! . ,`), and whitespace collapsing. The pass is
//! repeated until the text stops changing, which makes cleaning idempotent
//! even when symbol removal exposes new removable tokens (e.g. `r*t`).

use std::collections::HashSet;
use std::ops::RangeInclusive;
use std::sync::OnceLock;

use regex::Regex;

/// Sentence punctuation that survives cleaning.
pub const KEPT_PUNCTUATION: [char; 4] = ['?', '!', '.', ','];

pub const RESERVED_WORDS: [&str; 2] = ["rt", "fav"];

const EMOTICON_DATA: &str = include_str!("../data/emoticons.txt");

// Upper bound on cleaning passes; in practice two suffice.
const MAX_PASSES: usize = 8;

struct Emoticons {
    ranges: Vec<RangeInclusive<u32>>,
    smileys: HashSet<String>,
}

fn parse_codepoint(s: &str) -> u32 {
    let hex = s.trim().trim_start_matches("U+");
    u32::from_str_radix(hex, 16).unwrap_or_else(|_| panic!("bad codepoint {s:?} in emoticons.txt"))
}

fn emoticons() -> &'static Emoticons {
    static CELL: OnceLock<Emoticons> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut ranges = Vec::new();
        let mut smileys = HashSet::new();
        for line in EMOTICON_DATA.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once("..") {
                Some((lo, hi)) if lo.starts_with("U+") => ranges.push(parse_codepoint(lo)..=parse_codepoint(hi)),
                _ => {
                    smileys.insert(line.to_lowercase());
                }
            }
        }
        Emoticons { ranges, smileys }
    })
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").expect("valid regex"))
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    emoticons().ranges.iter().any(|r| r.contains(&cp))
}

pub fn is_smiley(token: &str) -> bool {
    emoticons().smileys.contains(token)
}

fn is_kept(c: char) -> bool {
    c.is_alphanumeric() || KEPT_PUNCTUATION.contains(&c)
}

fn is_url(token: &str) -> bool {
    token.contains("://") || token.contains("www.")
}

/// The token as it would look after symbol removal, minus edge punctuation.
fn core(token: &str) -> String {
    let kept: String = token.chars().filter(|&c| is_kept(c)).collect();
    kept.trim_matches(&KEPT_PUNCTUATION[..]).to_string()
}

fn clean_token(token: &str) -> Option<String> {
    if is_url(token) {
        return None;
    }
    let token = mention_re().replace_all(token, "");
    if RESERVED_WORDS.contains(&core(&token).as_str()) {
        return None;
    }
    if is_smiley(&token) {
        return None;
    }
    let token: String = token.chars().filter(|&c| !is_emoji(c) && c != '#').collect();
    let core = core(&token);
    if !core.is_empty() && core.chars().all(char::is_numeric) {
        return None;
    }
    let token: String = token.chars().filter(|&c| is_kept(c)).collect();
    (!token.is_empty()).then_some(token)
}

fn clean_pass(raw: &str) -> String {
    let lower = raw.to_lowercase();
    let tokens: Vec<String> = lower.split_whitespace().filter_map(clean_token).collect();
    tokens.join(" ")
}

/// Cleans a raw tweet. Any input yields a (possibly empty) string of
/// lowercase letters, digits, `? ! . ,` and single spaces.
pub fn clean_tweet(raw: &str) -> String {
    let mut text = clean_pass(raw);
    for _ in 1..MAX_PASSES {
        let next = clean_pass(&text);
        if next == text {
            break;
        }
        text = next;
    }
    text
}

/// Whitespace tokenization with edge punctuation stripped; inner punctuation
/// such as the `!` in `b!tch` is kept.
pub fn simple_tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(&KEPT_PUNCTUATION[..]))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
