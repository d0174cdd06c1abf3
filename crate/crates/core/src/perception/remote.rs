use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    parse_score_reply, BackendReply, ChoiceReply, ChoiceRequest, PerceptionBackend, PerceptionError, SceneRequest,
};
use crate::personas::RenderedPrompt;

pub const API_KEY_ENV: &str = "HEATROUTE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Prepended to a scene reference to form the image URL.
    pub image_url_prefix: String,
    pub timeout_s: f64,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            model: String::new(),
            image_url_prefix: String::new(),
            timeout_s: 60.0,
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completion style HTTP backend. The model must answer with a JSON
/// object `{"score": number, "rationale": string}`.
pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
    gate: Gate,
    id: String,
}

impl RemoteBackend {
    /// Reads the API key from `HEATROUTE_API_KEY`.
    pub fn from_env(config: RemoteConfig) -> Result<Self, PerceptionError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| PerceptionError::MissingApiKey(API_KEY_ENV.to_string()))?;
        Self::with_api_key(config, key)
    }

    pub fn with_api_key(config: RemoteConfig, api_key: String) -> Result<Self, PerceptionError> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(PerceptionError::Backend(
                "remote backend needs both `endpoint` and `model`".into(),
            ));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteBackend {
            id: format!("remote:{}", config.model),
            gate: Gate::new(config.max_in_flight),
            config,
            api_key,
            agent,
        })
    }

    fn request_body(&self, prompt: &RenderedPrompt, image: Option<String>, temperature: f64, max_tokens: u32) -> Value {
        let mut user = vec![json!({"type": "text", "text": prompt.user})];
        if let Some(url) = image {
            user.push(json!({"type": "image_url", "image_url": {"url": url}}));
        }
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": user},
            ],
            "temperature": temperature,
            "max_tokens": max_tokens,
        })
    }

    /// POSTs the body; returns the reply's text content, token usage and
    /// latency.
    fn post(&self, body: &Value) -> Result<(String, u64, u64, u64), PerceptionError> {
        let _slot = self.gate.enter();
        let started = Instant::now();
        let sent = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body.to_string().as_str());
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => {
                return Err(PerceptionError::BackendTimeout {
                    attempts: 1,
                    detail: format!("timeout ({t:?})"),
                })
            }
            Err(ureq::Error::Io(e)) => {
                return Err(PerceptionError::BackendTimeout {
                    attempts: 1,
                    detail: e.to_string(),
                })
            }
            Err(e) => return Err(PerceptionError::Backend(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(t) => PerceptionError::BackendTimeout {
                attempts: 1,
                detail: format!("timeout ({t:?})"),
            },
            other => PerceptionError::Backend(other.to_string()),
        })?;
        let latency_ms = started.elapsed().as_millis() as u64;
        match status {
            200..=299 => {}
            408 | 429 | 500..=599 => {
                return Err(PerceptionError::BackendTimeout {
                    attempts: 1,
                    detail: format!("http status {status}"),
                })
            }
            _ => return Err(PerceptionError::Backend(format!("http status {status}: {text}"))),
        }
        let (content, prompt_tokens, completion_tokens) = extract_content(&text)?;
        Ok((content, prompt_tokens, completion_tokens, latency_ms))
    }
}

/// Pulls the model text and token usage out of a reply body. Accepts a bare
/// `{"score", "rationale"}` object, OpenAI-style `choices[0].message.content`,
/// or a `content[0].text` block list.
fn extract_content(body: &str) -> Result<(String, u64, u64), PerceptionError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| PerceptionError::MalformedResponse(format!("reply body is not JSON: {e}")))?;
    let usage = |a: &str, b: &str| {
        v.get("usage")
            .and_then(|u| u.get(a).or_else(|| u.get(b)))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    let prompt_tokens = usage("prompt_tokens", "input_tokens");
    let completion_tokens = usage("completion_tokens", "output_tokens");
    let content = if v.get("score").is_some() || v.get("choice").is_some() {
        body.to_string()
    } else if let Some(c) = v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        c.to_string()
    } else if let Some(c) = v.pointer("/content/0/text").and_then(Value::as_str) {
        c.to_string()
    } else {
        return Err(PerceptionError::MalformedResponse(
            "reply carries no message content".into(),
        ));
    };
    Ok((content, prompt_tokens, completion_tokens))
}

fn parse_choice_reply(text: &str, candidates: usize) -> Result<(usize, String), PerceptionError> {
    let (start, end) = (text.find('{'), text.rfind('}'));
    let span = match (start, end) {
        (Some(s), Some(e)) if s < e => &text[s..=e],
        _ => return Err(PerceptionError::MalformedResponse("no JSON object in reply".into())),
    };
    let v: Value = serde_json::from_str(span).map_err(|e| PerceptionError::MalformedResponse(e.to_string()))?;
    let idx = v
        .get("choice")
        .and_then(Value::as_u64)
        .ok_or_else(|| PerceptionError::MalformedResponse("missing integer `choice`".into()))? as usize;
    // candidates are numbered from 1 in the prompt
    if idx == 0 || idx > candidates {
        return Err(PerceptionError::MalformedResponse(format!(
            "choice {idx} outside 1..={candidates}"
        )));
    }
    let rationale = v
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    Ok((idx - 1, rationale))
}

impl PerceptionBackend for RemoteBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn assess(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError> {
        let image = format!("{}{}", self.config.image_url_prefix, req.scene_ref);
        let body = self.request_body(req.prompt, Some(image), req.params.temperature, req.params.max_tokens);
        let (content, prompt_tokens, completion_tokens, latency_ms) = self.post(&body)?;
        let (score, rationale) = parse_score_reply(&content)?;
        Ok(BackendReply {
            score,
            rationale,
            prompt_tokens,
            completion_tokens,
            latency_ms,
        })
    }

    fn choose(&self, req: &ChoiceRequest<'_>) -> Option<Result<ChoiceReply, PerceptionError>> {
        let body = self.request_body(req.prompt, None, req.params.temperature, req.params.max_tokens);
        Some(self.post(&body).and_then(|(content, p, c, latency_ms)| {
            let (index, rationale) = parse_choice_reply(&content, req.candidates)?;
            Ok(ChoiceReply {
                index,
                rationale,
                prompt_tokens: p,
                completion_tokens: c,
                latency_ms,
            })
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_openai_style_content() {
        let body = r#"{"choices":[{"message":{"content":"{\"score\":0.3,\"rationale\":\"hot\"}"}}],
                       "usage":{"prompt_tokens":120,"completion_tokens":14}}"#;
        let (c, p, k) = extract_content(body).unwrap();
        assert_eq!((p, k), (120, 14));
        assert_eq!(parse_score_reply(&c).unwrap().0, 0.3);
    }

    #[test]
    fn extracts_bare_object_and_block_list() {
        let (c, p, _) = extract_content(r#"{"score":0.9,"rationale":"shade"}"#).unwrap();
        assert_eq!(p, 0);
        assert_eq!(parse_score_reply(&c).unwrap().0, 0.9);
        let body =
            r#"{"content":[{"type":"text","text":"{\"score\":0.1}"}],"usage":{"input_tokens":5,"output_tokens":2}}"#;
        let (c, p, k) = extract_content(body).unwrap();
        assert_eq!((p, k), (5, 2));
        assert_eq!(parse_score_reply(&c).unwrap().0, 0.1);
        assert!(extract_content("<html>").is_err());
        assert!(extract_content(r#"{"id":"x"}"#).is_err());
    }

    #[test]
    fn choice_reply_is_one_based() {
        assert_eq!(
            parse_choice_reply(r#"{"choice":2,"rationale":"r"}"#, 3).unwrap(),
            (1, "r".into())
        );
        assert!(parse_choice_reply(r#"{"choice":0}"#, 3).is_err());
        assert!(parse_choice_reply(r#"{"choice":4}"#, 3).is_err());
    }

    #[test]
    fn missing_endpoint_rejected() {
        assert!(RemoteBackend::with_api_key(RemoteConfig::default(), "k".into()).is_err());
    }
}
