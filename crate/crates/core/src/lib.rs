//! Dictionary-enhanced tweet vectorisation and the compact 1D/2D CNN
//! classifiers it feeds.
//!
//! Pipeline: [`textprep`] cleans raw tweets, [`tokenscalar`] turns them into
//! one scalar per subword token, [`hatedict`] scores tokens against a hate
//! lexicon, and [`fusion`] stacks both tracks into fixed 1×120 / 2×120
//! matrices. [`micronet`] is the CNN kernel, [`datapipe`] handles corpora and
//! batching, and [`harness`] trains, grid-searches and evaluates.

pub mod datapipe;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod hatedict;
pub mod micronet;
pub mod synthetic;
pub mod textprep;
pub mod tokenscalar;

pub use error::{Error, Result};

/// The three target classes, in label-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hateful = 0,
    Abusive = 1,
    Normal = 2,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Hateful, Label::Abusive, Label::Normal];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hateful => "hateful",
            Label::Abusive => "abusive",
            Label::Normal => "normal",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hateful" => Ok(Label::Hateful),
            "abusive" => Ok(Label::Abusive),
            "normal" => Ok(Label::Normal),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}
