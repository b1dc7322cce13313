use serde::{Deserialize, Serialize};

use super::{BeamHypothesis, DecodeConfig, RouteDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteDecision {
    ToCascade,
    ToLmRescoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeRoute {
    pub decision: RouteDecision,
    /// `log_p_am / len(transcript)`; `None` for an empty transcript.
    pub normalized_score: Option<f64>,
}

/// Sends an utterance to the second stage when the per-character
/// geometric-mean probability `exp(log_p_am / len)` is on the configured
/// side of `route_threshold`. Empty transcripts always stay on the LM path.
pub fn route(best: &BeamHypothesis, cfg: &DecodeConfig) -> CascadeRoute {
    let len = best.transcript.chars().count();
    if len == 0 {
        return CascadeRoute {
            decision: RouteDecision::ToLmRescoring,
            normalized_score: None,
        };
    }
    let normalized = best.log_p_am / len as f64;
    let per_char = normalized.exp();
    let cascade = match cfg.route_direction {
        RouteDirection::Above => per_char > cfg.route_threshold,
        RouteDirection::Below => per_char < cfg.route_threshold,
    };
    CascadeRoute {
        decision: if cascade {
            RouteDecision::ToCascade
        } else {
            RouteDecision::ToLmRescoring
        },
        normalized_score: Some(normalized),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctc::LabelSequence;

    fn hyp(text: &str, per_char: f64) -> BeamHypothesis {
        BeamHypothesis {
            labels: LabelSequence::default(),
            transcript: text.into(),
            log_p_am: per_char.ln() * text.chars().count() as f64,
            log_p_lm: None,
        }
    }

    #[test]
    fn predicate_direction() {
        let cfg = DecodeConfig::default();
        assert_eq!(route(&hyp("abcd", 0.9), &cfg).decision, RouteDecision::ToCascade);
        assert_eq!(route(&hyp("abcd", 0.3), &cfg).decision, RouteDecision::ToLmRescoring);
        let r = route(&hyp("", 0.9), &cfg);
        assert_eq!(r.decision, RouteDecision::ToLmRescoring);
        assert_eq!(r.normalized_score, None);
    }

    #[test]
    fn below_direction_flips() {
        let cfg = DecodeConfig {
            route_direction: RouteDirection::Below,
            ..Default::default()
        };
        assert_eq!(route(&hyp("ab", 0.3), &cfg).decision, RouteDecision::ToCascade);
        assert_eq!(route(&hyp("ab", 0.9), &cfg).decision, RouteDecision::ToLmRescoring);
    }

    #[test]
    fn threshold_one_never_routes() {
        let cfg = DecodeConfig {
            route_threshold: 1.0,
            ..Default::default()
        };
        assert_eq!(route(&hyp("a", 1.0), &cfg).decision, RouteDecision::ToLmRescoring);
    }

    #[test]
    fn depends_only_on_normalized_score() {
        let cfg = DecodeConfig::default();
        // same per-character score at different lengths
        for text in ["a", "abcdefgh", "a much longer transcript than before"] {
            let r = route(&hyp(text, 0.6), &cfg);
            assert_eq!(r.decision, RouteDecision::ToCascade);
            assert!((r.normalized_score.unwrap() - 0.6f64.ln()).abs() < 1e-12);
        }
    }
}
