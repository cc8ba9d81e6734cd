//! JSON-over-HTTP client for models served out of process.
//!
//! Endpoints: `GET /info`, `POST /tokenize`, `POST /predict`,
//! `POST /gradients`. All numbers travel as JSON doubles.

use std::marker::PhantomData;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    Classifier, GradientBundle, GradientRequest, ModelInfo, TextInput, TokenId, TokenizedInput,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bounded exponential backoff for transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum TokenizeBody<'a> {
    Texts { texts: Vec<&'a str> },
    Words { words: Vec<&'a [String]> },
}

#[derive(Serialize)]
struct PredictBody<'a> {
    batch: &'a [Vec<TokenId>],
}

#[derive(Deserialize)]
struct PredictResponse {
    probabilities: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct GradientBody<'a> {
    input_ids: &'a [TokenId],
    baseline_ids: &'a [TokenId],
    target: usize,
    alphas: Vec<f64>,
}

#[derive(Deserialize)]
struct GradientResponse {
    grads: Vec<Vec<Vec<f64>>>,
    input_embeddings: Vec<Vec<f64>>,
    baseline_embeddings: Vec<Vec<f64>>,
}

enum Failure {
    Retryable(String),
    Fatal(Error),
}

/// Classifier backed by a remote inference server.
pub struct RemoteModel<T> {
    base_url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    info: ModelInfo,
    _scalar: PhantomData<fn() -> T>,
}

impl<T: Scalar> RemoteModel<T> {
    pub fn connect(base_url: &str) -> Result<Self> {
        Self::connect_with(base_url, RetryPolicy::default(), Duration::from_secs(120))
    }

    pub fn connect_with(base_url: &str, retry: RetryPolicy, timeout: Duration) -> Result<Self> {
        if retry.attempts == 0 {
            return Err(Error::Config("retry policy needs at least one attempt".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut model = RemoteModel {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent,
            retry,
            info: ModelInfo {
                model_id: String::new(),
                labels: Vec::new(),
                capabilities: Default::default(),
                pad_token_id: None,
                mask_token_id: None,
                special_token_ids: Default::default(),
                max_length: 0,
                max_batch_size: 0,
            },
            _scalar: PhantomData,
        };
        let info: ModelInfo = model.call("info", None::<&()>)?;
        info.validate()?;
        model.info = info;
        Ok(model)
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn call<B: Serialize, R: DeserializeOwned>(&self, endpoint: &str, body: Option<&B>) -> Result<R> {
        let url = format!("{}/{}", self.base_url, endpoint);
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts {
            match self.call_once(&url, body) {
                Ok(r) => return Ok(r),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    log::warn!("{url}: attempt {attempt} failed: {msg}");
                    last = msg;
                    if attempt < self.retry.attempts {
                        thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(Error::Transport {
            attempts: self.retry.attempts,
            message: format!("{url}: {last}"),
        })
    }

    fn call_once<B: Serialize, R: DeserializeOwned>(
        &self,
        url: &str,
        body: Option<&B>,
    ) -> std::result::Result<R, Failure> {
        let response = match body {
            Some(b) => self.agent.post(url).send_json(b),
            None => self.agent.get(url).call(),
        };
        let mut response = response.map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        if status >= 500 {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Failure::Retryable(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Failure::Fatal(Error::Protocol(format!(
                "{url} rejected the request with HTTP {status}: {text}"
            ))));
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(Error::Protocol(format!("{url}: malformed response: {e}"))))
    }
}

fn to_scalar<T: Scalar>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(T::nan)
}

fn matrix<T: Scalar>(m: Vec<Vec<f64>>) -> Vec<Vec<T>> {
    m.into_iter()
        .map(|r| r.into_iter().map(to_scalar).collect())
        .collect()
}

impl<T: Scalar> Classifier<T> for RemoteModel<T> {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn tokenize_raw(&self, inputs: &[TextInput]) -> Result<Vec<TokenizedInput>> {
        // Mixed batches are split by kind and reassembled in input order.
        let mut out: Vec<Option<TokenizedInput>> = vec![None; inputs.len()];
        let texts: Vec<(usize, &str)> = inputs
            .iter()
            .enumerate()
            .filter_map(|(i, x)| match x {
                TextInput::Text(t) => Some((i, t.as_str())),
                TextInput::Words(_) => None,
            })
            .collect();
        let words: Vec<(usize, &[String])> = inputs
            .iter()
            .enumerate()
            .filter_map(|(i, x)| match x {
                TextInput::Words(w) => Some((i, w.as_slice())),
                TextInput::Text(_) => None,
            })
            .collect();
        if !texts.is_empty() {
            let body = TokenizeBody::Texts {
                texts: texts.iter().map(|&(_, t)| t).collect(),
            };
            let res: Vec<TokenizedInput> = self.call("tokenize", Some(&body))?;
            if res.len() != texts.len() {
                return Err(Error::Protocol("tokenize returned the wrong count".into()));
            }
            for ((i, _), t) in texts.iter().zip(res) {
                out[*i] = Some(t);
            }
        }
        if !words.is_empty() {
            let body = TokenizeBody::Words {
                words: words.iter().map(|&(_, w)| w).collect(),
            };
            let res: Vec<TokenizedInput> = self.call("tokenize", Some(&body))?;
            if res.len() != words.len() {
                return Err(Error::Protocol("tokenize returned the wrong count".into()));
            }
            for ((i, _), t) in words.iter().zip(res) {
                if t.word_ids.is_none() {
                    return Err(Error::Protocol(
                        "word-sequence tokenization must return word_ids".into(),
                    ));
                }
                out[*i] = Some(t);
            }
        }
        Ok(out.into_iter().flatten().collect())
    }

    fn predict_raw(&self, batch: &[Vec<TokenId>]) -> Result<Vec<Vec<T>>> {
        let res: PredictResponse = self.call("predict", Some(&PredictBody { batch }))?;
        Ok(matrix(res.probabilities))
    }

    fn gradients_raw(&self, request: &GradientRequest<T>) -> Result<GradientBundle<T>> {
        let body = GradientBody {
            input_ids: &request.input_ids,
            baseline_ids: &request.baseline_ids,
            target: request.target,
            alphas: request.alphas.iter().map(|a| a.as_f64()).collect(),
        };
        let res: GradientResponse = self.call("gradients", Some(&body))?;
        Ok(GradientBundle {
            alphas: request.alphas.clone(),
            grads: res.grads.into_iter().map(matrix).collect(),
            input_embeddings: matrix(res.input_embeddings),
            baseline_embeddings: matrix(res.baseline_embeddings),
            target: request.target,
        })
    }
}
