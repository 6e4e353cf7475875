//! Lexicon-based polarity scoring with a three-way label.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::textlist::{self, ListLine};

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(SentimentLabel::Positive),
            "negative" => Ok(SentimentLabel::Negative),
            "neutral" => Ok(SentimentLabel::Neutral),
            other => Err(format!("unknown sentiment label '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("lexicon is empty")]
    Empty,
}

/// Token → polarity map. Keys are lowercase ASCII words, values lie in
/// `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityLexicon {
    entries: HashMap<String, f64>,
}

impl PolarityLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (token, value)) in entries.into_iter().enumerate() {
            let token = token.into();
            validate_entry(&token, value).map_err(|message| LexiconError::Line { line: i + 1, message })?;
            map.insert(token, value);
        }
        if map.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Self { entries: map })
    }

    /// Parse `token<TAB>polarity` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut map = HashMap::new();
        for ListLine { number, content } in textlist::lines(text) {
            let err = |message: String| LexiconError::Line { line: number, message };
            let (token, value) = content
                .split_once('\t')
                .ok_or_else(|| err("expected token<TAB>polarity".into()))?;
            let token = token.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("polarity '{}' is not a number", value.trim())))?;
            validate_entry(token, value).map_err(err)?;
            if map.insert(token.to_string(), value).is_some() {
                return Err(err(format!("duplicate token '{token}'")));
            }
        }
        if map.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Self { entries: map })
    }

    pub fn from_file(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The embedded finance-and-general lexicon.
    pub fn builtin() -> &'static PolarityLexicon {
        static LEXICON: OnceLock<PolarityLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Self::parse(BUILTIN_LEXICON).expect("embedded lexicon is valid"))
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Same tokens with every polarity sign-flipped.
    pub fn negated(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

fn validate_entry(token: &str, value: f64) -> Result<(), String> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(format!("token '{token}' must be lowercase alphabetic"));
    }
    if !(-1.0..=1.0).contains(&value) {
        return Err(format!("polarity {value} for '{token}' is outside [-1, 1]"));
    }
    Ok(())
}

/// Mean lexicon polarity over the tokens found in `lexicon`; 0 when none
/// match.
///
/// Positive and negative contributions are summed separately over sorted
/// magnitudes, so the result does not depend on token order and flips sign
/// exactly when the lexicon is negated.
pub fn score_polarity<S: AsRef<str>>(tokens: &[S], lexicon: &PolarityLexicon) -> f64 {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for value in tokens.iter().filter_map(|t| lexicon.get(t.as_ref())) {
        if value > 0.0 {
            positive.push(value);
        } else if value < 0.0 {
            negative.push(-value);
        } else {
            // zero-valued entries still count toward the mean
            positive.push(0.0);
        }
    }
    let matched = positive.len() + negative.len();
    if matched == 0 {
        return 0.0;
    }
    let total = sorted_sum(&mut positive) - sorted_sum(&mut negative);
    let mean = total / matched as f64;
    // -0.0 and 0.0 must both read as neutral
    mean.clamp(-1.0, 1.0) + 0.0
}

fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

pub fn classify_sentiment(polarity: f64) -> SentimentLabel {
    if polarity > 0.0 {
        SentimentLabel::Positive
    } else if polarity < 0.0 {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex(entries: &[(&str, f64)]) -> PolarityLexicon {
        PolarityLexicon::from_entries(entries.iter().map(|(k, v)| (*k, *v))).unwrap()
    }

    #[test]
    fn single_token_mean() {
        let l = lex(&[("good", 0.7)]);
        assert_eq!(score_polarity(&["good"], &l), 0.7);
    }

    #[test]
    fn empty_tokens_score_zero() {
        let l = lex(&[("good", 0.7)]);
        let none: [&str; 0] = [];
        assert_eq!(score_polarity(&none, &l), 0.0);
        assert_eq!(classify_sentiment(score_polarity(&none, &l)), SentimentLabel::Neutral);
    }

    #[test]
    fn symmetric_cancellation() {
        let l = lex(&[("good", 0.7), ("bad", -0.7)]);
        let p = score_polarity(&["good", "bad"], &l);
        assert_eq!(p, 0.0);
        assert!(p.is_sign_positive());
    }

    #[test]
    fn unmatched_tokens_do_not_dilute() {
        let l = lex(&[("good", 0.7)]);
        assert_eq!(score_polarity(&["good", "widget", "thing"], &l), 0.7);
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify_sentiment(0.7), SentimentLabel::Positive);
        assert_eq!(classify_sentiment(0.0), SentimentLabel::Neutral);
        assert_eq!(classify_sentiment(-1e-12), SentimentLabel::Negative);
    }

    #[test]
    fn parse_rejects_out_of_range_with_line() {
        let err = PolarityLexicon::parse("# header\ngood\t0.5\nbad\t-1.5\n").unwrap_err();
        match err {
            LexiconError::Line { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_bad_tokens_and_empty() {
        assert!(matches!(
            PolarityLexicon::parse("Good\t0.5"),
            Err(LexiconError::Line { line: 1, .. })
        ));
        assert!(matches!(
            PolarityLexicon::parse("good 0.5"),
            Err(LexiconError::Line { .. })
        ));
        assert!(matches!(
            PolarityLexicon::parse("# nothing\n\n"),
            Err(LexiconError::Empty)
        ));
        assert!(matches!(
            PolarityLexicon::parse("good\t0.5\ngood\t0.3"),
            Err(LexiconError::Line { line: 2, .. })
        ));
    }

    #[test]
    fn builtin_lexicon_shape() {
        let l = PolarityLexicon::builtin();
        assert!(l.len() >= 1400, "builtin lexicon has {} entries", l.len());
        let allowed = [-1.0, -0.7, -0.5, -0.3, 0.3, 0.5, 0.7, 1.0];
        for (token, value) in l.iter() {
            assert!(allowed.contains(&value), "{token} has {value}");
        }
        assert!(l.get("bullish").unwrap() > 0.0);
        assert!(l.get("bearish").unwrap() < 0.0);
        assert!(l.get("good").unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn bounded_and_order_free(
            values in prop::collection::vec(-1.0f64..=1.0, 1..20),
            picks in prop::collection::vec(0usize..40, 0..30),
        ) {
            let words: Vec<String> = (0..values.len()).map(|i| format!("q{}", "x".repeat(i))).collect();
            let l = PolarityLexicon::from_entries(words.iter().cloned().zip(values.iter().copied())).unwrap();
            let tokens: Vec<String> = picks
                .iter()
                .map(|&i| words.get(i).cloned().unwrap_or_else(|| "zzz".into()))
                .collect();
            let p = score_polarity(&tokens, &l);
            prop_assert!((-1.0..=1.0).contains(&p));
            let mut reversed = tokens.clone();
            reversed.reverse();
            prop_assert_eq!(score_polarity(&reversed, &l).to_bits(), p.to_bits());
            let q = score_polarity(&tokens, &l.negated());
            prop_assert_eq!(q, -p);
        }
    }
}
