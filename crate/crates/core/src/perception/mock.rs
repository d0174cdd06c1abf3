use serde::{Deserialize, Serialize};

use super::{BackendReply, PerceptionBackend, PerceptionError, SceneFeatures, SceneRequest, SceneTable};

/// Feature weights of the mock scorer; they sum to 1 by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockWeights {
    pub shade: f64,
    pub greenery: f64,
    pub open_sky: f64,
    pub surface_heat: f64,
    /// How far persona sensitivity pulls the score around the neutral point.
    pub sensitivity_gain: f64,
}

impl Default for MockWeights {
    fn default() -> Self {
        MockWeights {
            shade: 0.35,
            greenery: 0.20,
            open_sky: 0.25,
            surface_heat: 0.20,
            sensitivity_gain: 0.2,
        }
    }
}

/// Deterministic comfort for a scene as felt by a persona with heat
/// sensitivity `lambda`. Sensitive personas (normalized sensitivity above
/// 0.5) rate the same scene lower.
pub fn mock_score(f: &SceneFeatures, lambda: f64, w: &MockWeights) -> f64 {
    let base = w.shade * f.shade
        + w.greenery * f.greenery
        + w.open_sky * (1.0 - f.sky_exposure)
        + w.surface_heat * (1.0 - f.surface_heat);
    let s = lambda.min(2.0) / 2.0;
    let pull = (0.5 - s) * w.sensitivity_gain;
    // base + (1 − base)·pull, arranged so rounding stays monotone in base
    (base * (1.0 - pull) + pull).clamp(0.0, 1.0)
}

const PHRASES: [(&str, &str); 4] = [
    ("deep shade covers the walkway", "there is no shade to hide in"),
    ("trees line the route", "hardly any greenery is nearby"),
    ("the open sky leaves me exposed", "the sky is mostly blocked overhead"),
    (
        "the pavement is radiating stored warmth",
        "the pavement looks pale and reflective",
    ),
];

/// Phrase for one feature; index order is shade, greenery, sky, surface.
fn phrase(feature: usize, value: f64) -> &'static str {
    let (high, low) = PHRASES[feature];
    if value >= 0.5 {
        high
    } else {
        low
    }
}

/// Two-clause rationale built from the two features farthest from neutral.
pub fn mock_rationale(f: &SceneFeatures) -> String {
    let values = [f.shade, f.greenery, f.sky_exposure, f.surface_heat];
    let mut order: Vec<usize> = (0..4).collect();
    // stable: ties keep feature order
    order.sort_by(|&a, &b| {
        let (da, db) = ((values[a] - 0.5).abs(), (values[b] - 0.5).abs());
        db.total_cmp(&da)
    });
    let first = phrase(order[0], values[order[0]]);
    let second = phrase(order[1], values[order[1]]);
    let mut s = String::with_capacity(first.len() + second.len() + 8);
    let mut chars = first.chars();
    if let Some(c) = chars.next() {
        s.extend(c.to_uppercase());
        s.push_str(chars.as_str());
    }
    s.push_str(", and ");
    s.push_str(second);
    s.push('.');
    s
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

/// Offline backend scoring scenes from a feature table. Token counts are
/// word counts of prompt and rationale, so price tables apply to it too.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    scenes: SceneTable,
    weights: MockWeights,
}

impl MockBackend {
    pub fn new(scenes: SceneTable) -> Self {
        MockBackend {
            scenes,
            weights: MockWeights::default(),
        }
    }

    pub fn with_weights(mut self, weights: MockWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn scenes(&self) -> &SceneTable {
        &self.scenes
    }
}

impl PerceptionBackend for MockBackend {
    fn id(&self) -> &str {
        "mock"
    }

    fn assess(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError> {
        let f = self
            .scenes
            .get(req.scene_ref)
            .ok_or_else(|| PerceptionError::UnknownScene(req.scene_ref.to_string()))?;
        let rationale = mock_rationale(f);
        Ok(BackendReply {
            score: mock_score(f, req.persona.heat_sensitivity_lambda, &self.weights),
            prompt_tokens: word_count(&req.prompt.system) + word_count(&req.prompt.user),
            completion_tokens: word_count(&rationale),
            rationale,
            latency_ms: 0,
        })
    }
}
