//! Client for an OpenAI-style `/completions` endpoint that reports token
//! log-probabilities.

use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{extract_answer, prompt, BackendError, Context, CotSample, LlmBackend, PromptStyle, Target, YesNo};
use crate::logic::{Implication, Literal};

/// Per-request token limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationBudget {
    pub max_generate_tokens: u32,
    pub max_score_tokens: u32,
    pub max_cot_tokens: u32,
}

impl Default for GenerationBudget {
    fn default() -> Self {
        GenerationBudget {
            max_generate_tokens: 25,
            max_score_tokens: 1,
            max_cot_tokens: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireConfig {
    /// Full URL of the completions route.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff: Duration,
    pub budget: GenerationBudget,
    pub cot_temperature: f64,
    pub top_logprobs: u32,
}

impl WireConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        WireConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(500),
            budget: GenerationBudget::default(),
            cot_temperature: 0.7,
            top_logprobs: 5,
        }
    }
}

#[derive(Debug, Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    #[serde(default)]
    text: String,
    #[serde(default)]
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Default, Deserialize)]
struct Logprobs {
    #[serde(default)]
    tokens: Vec<String>,
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    top_logprobs: Vec<Option<HashMap<String, f64>>>,
}

pub struct WireBackend {
    config: WireConfig,
    agent: ureq::Agent,
}

impl std::fmt::Debug for WireBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WireBackend")
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model)
            .finish_non_exhaustive()
    }
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return None;
    }
    Some(m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln())
}

/// Yes/No logprobs at the first generated position. Surface variants
/// (" Yes", "yes") are pooled.
fn yes_no(top: &HashMap<String, f64>) -> YesNo {
    let pool = |word: &str| {
        log_sum_exp(
            top.iter()
                .filter(|(t, _)| t.trim().eq_ignore_ascii_case(word))
                .map(|(_, lp)| *lp),
        )
    };
    YesNo {
        yes: pool("yes"),
        no: pool("no"),
    }
}

/// Answer and confidence of a chain-of-thought completion: the last
/// true/false word, with the probability of the token that carried it.
fn cot_sample(choice: &Choice) -> CotSample {
    let Some((answer, _)) = extract_answer(&choice.text) else {
        return CotSample::abstain(choice.text.clone());
    };
    let word = if answer { "true" } else { "false" };
    let confidence = choice
        .logprobs
        .as_ref()
        .and_then(|lp| {
            lp.tokens
                .iter()
                .rposition(|t| {
                    t.trim()
                        .trim_matches(|c: char| !c.is_alphanumeric())
                        .eq_ignore_ascii_case(word)
                })
                .and_then(|i| lp.token_logprobs.get(i).copied().flatten())
        })
        .map_or(1.0, f64::exp);
    let mut s = CotSample::answered(answer, confidence);
    s.raw_text = choice.text.clone();
    s
}

impl WireBackend {
    pub fn new(config: WireConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        WireBackend { config, agent }
    }

    pub fn config(&self) -> &WireConfig {
        &self.config
    }

    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<Choice, BackendError> {
        let body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": max_tokens,
            "temperature": temperature,
            "logprobs": self.config.top_logprobs,
        });
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.config.backoff * 2u32.saturating_pow(attempt - 1));
            }
            let mut req = self.agent.post(&self.config.endpoint);
            if let Some(key) = &self.config.api_key {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
            let mut resp = match req.send_json(&body) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("completion request failed (attempt {}): {e}", attempt + 1);
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status == 429 || status >= 500 {
                last = format!("HTTP {status}");
                log::warn!("completion request got {last} (attempt {})", attempt + 1);
                continue;
            }
            if status >= 400 {
                return Err(BackendError::Protocol(format!("HTTP {status}")));
            }
            let value: Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| BackendError::Protocol(e.to_string()))?;
            let completion: Completion =
                serde_json::from_value(value).map_err(|e| BackendError::Protocol(e.to_string()))?;
            return completion
                .choices
                .into_iter()
                .next()
                .ok_or_else(|| BackendError::Protocol("no choices in response".into()));
        }
        Err(BackendError::Transport {
            attempts,
            message: last,
        })
    }

    fn score(&self, prompt: &str) -> Result<YesNo, BackendError> {
        let choice = self.complete(prompt, self.config.budget.max_score_tokens, 0.0)?;
        Ok(choice
            .logprobs
            .and_then(|lp| lp.top_logprobs.into_iter().next().flatten())
            .map(|top| yes_no(&top))
            .unwrap_or_default())
    }
}

impl LlmBackend for WireBackend {
    fn sample_cot(&self, ctx: &Context<'_>, k: usize) -> Result<Vec<CotSample>, BackendError> {
        let text = prompt::cot(ctx);
        let budget = self.config.budget.max_cot_tokens;
        let temperature = self.config.cot_temperature;
        thread::scope(|s| {
            let handles: Vec<_> = (0..k)
                .map(|_| s.spawn(|| self.complete(&text, budget, temperature)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("completion thread panicked").map(|c| cot_sample(&c)))
                .collect()
        })
    }

    fn generate(
        &self,
        ctx: &Context<'_>,
        antecedent: &[Literal],
        target: &Target,
    ) -> Result<Option<String>, BackendError> {
        let text = prompt::generate(ctx, antecedent, target);
        let choice = self.complete(&text, self.config.budget.max_generate_tokens, 0.0)?;
        Ok(Some(choice.text).filter(|t| !t.trim().is_empty()))
    }

    fn commonsense_logprobs(&self, clause: &Implication, style: PromptStyle) -> Result<YesNo, BackendError> {
        self.score(&prompt::commonsense(clause, style))
    }

    fn relevance_logprobs(&self, ctx: &Context<'_>, clause: &Implication) -> Result<YesNo, BackendError> {
        self.score(&prompt::relevance(ctx, clause))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_surface_variants() {
        let top: HashMap<String, f64> = [
            (" Yes".to_string(), -1.0),
            ("yes".to_string(), -1.0),
            (" No".to_string(), -2.0),
        ]
        .into_iter()
        .collect();
        let yn = yes_no(&top);
        assert!((yn.yes.unwrap() - (-1.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(yn.no, Some(-2.0));
    }

    #[test]
    fn cot_confidence_from_answer_token() {
        let choice = Choice {
            text: "Bob is her son, so the answer is True.".into(),
            logprobs: Some(Logprobs {
                tokens: vec![" so".into(), " True".into(), ".".into()],
                token_logprobs: vec![Some(-0.1), Some(-0.5), Some(-0.01)],
                top_logprobs: vec![],
            }),
        };
        let s = cot_sample(&choice);
        assert_eq!(s.answer, Some(true));
        assert!((s.confidence - (-0.5f64).exp()).abs() < 1e-12);
        let none = cot_sample(&Choice {
            text: "unclear".into(),
            logprobs: None,
        });
        assert_eq!(none.answer, None);
        assert_eq!(none.confidence, 0.0);
    }
}
