use serde::{Deserialize, Serialize};

/// One chain-of-thought sample. `answer` is `None` when the text carried no
/// true/false token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotSample {
    pub answer: Option<bool>,
    pub confidence: f64,
    pub raw_text: String,
}

impl CotSample {
    pub fn answered(answer: bool, confidence: f64) -> Self {
        CotSample {
            answer: Some(answer),
            confidence: confidence.clamp(0.0, 1.0),
            raw_text: answer_word(answer).to_string(),
        }
    }

    pub fn abstain(raw_text: impl Into<String>) -> Self {
        CotSample {
            answer: None,
            confidence: 0.0,
            raw_text: raw_text.into(),
        }
    }
}

pub(crate) fn answer_word(answer: bool) -> &'static str {
    if answer {
        "True"
    } else {
        "False"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveVote {
    pub answer: bool,
    pub vote_fraction: f64,
    pub weighted_confidence: f64,
    /// Every sample abstained; `answer` is then `false` by convention.
    pub degenerate: bool,
    pub samples: Vec<CotSample>,
}

/// Modal answer over the non-abstaining samples. Fractions are taken over
/// all `samples.len()` requests, abstentions included. Ties go to the answer
/// with the larger confidence sum, then to `false`.
pub fn vote(samples: Vec<CotSample>) -> SolveVote {
    let k = samples.len().max(1) as f64;
    let tally = |a: bool| {
        samples
            .iter()
            .filter(|s| s.answer == Some(a))
            .fold((0usize, 0.0f64), |(n, c), s| (n + 1, c + s.confidence))
    };
    let (n_true, c_true) = tally(true);
    let (n_false, c_false) = tally(false);
    if n_true + n_false == 0 {
        return SolveVote {
            answer: false,
            vote_fraction: 0.0,
            weighted_confidence: 0.0,
            degenerate: true,
            samples,
        };
    }
    let answer = n_true > n_false || (n_true == n_false && c_true > c_false);
    let (n, c) = if answer { (n_true, c_true) } else { (n_false, c_false) };
    SolveVote {
        answer,
        vote_fraction: n as f64 / k,
        weighted_confidence: c / k,
        degenerate: false,
        samples,
    }
}

/// Last case-insensitive `true`/`false` word in a completion.
pub fn extract_answer(text: &str) -> Option<(bool, usize)> {
    let lower = text.to_ascii_lowercase();
    let mut best: Option<(bool, usize)> = None;
    for (word, value) in [("true", true), ("false", false)] {
        for (pos, _) in lower.match_indices(word) {
            let before = lower[..pos].chars().next_back();
            let after = lower[pos + word.len()..].chars().next();
            let bounded = |c: Option<char>| !c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
            if bounded(before) && bounded(after) && best.is_none_or(|(_, p)| pos > p) {
                best = Some((value, pos));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: Option<bool>, c: f64) -> CotSample {
        match a {
            Some(a) => CotSample::answered(a, c),
            None => CotSample::abstain(""),
        }
    }

    #[test]
    fn weighted_confidence_arithmetic() {
        let v = vote(vec![
            s(Some(true), 0.9),
            s(Some(true), 0.8),
            s(Some(false), 0.7),
            s(Some(true), 0.6),
            s(Some(false), 0.5),
        ]);
        assert!(v.answer);
        assert!((v.vote_fraction - 0.6).abs() < 1e-12);
        assert!((v.weighted_confidence - 0.46).abs() < 1e-12);
    }

    #[test]
    fn all_abstain_is_degenerate_false() {
        let v = vote(vec![s(None, 0.0); 5]);
        assert!(!v.answer && v.degenerate);
        assert_eq!(v.vote_fraction, 0.0);
    }

    #[test]
    fn abstentions_count_in_denominator() {
        let v = vote(vec![
            s(Some(true), 1.0),
            s(None, 0.0),
            s(None, 0.0),
            s(None, 0.0),
            s(None, 0.0),
        ]);
        assert!(v.answer);
        assert!((v.vote_fraction - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ties_break_on_confidence_then_false() {
        assert!(vote(vec![s(Some(true), 0.9), s(Some(false), 0.1)]).answer);
        assert!(!vote(vec![s(Some(true), 0.5), s(Some(false), 0.5)]).answer);
    }

    #[test]
    fn answer_is_last_occurrence() {
        assert_eq!(extract_answer("It is true that... so False.").map(|x| x.0), Some(false));
        assert_eq!(extract_answer("FALSE then TRUE").map(|x| x.0), Some(true));
        assert_eq!(extract_answer("untrue falsehood"), None);
        assert_eq!(extract_answer("no idea"), None);
    }
}
