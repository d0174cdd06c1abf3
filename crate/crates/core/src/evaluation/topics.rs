//! Keyword classification of decision rationales into seven environmental
//! dimensions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    UrbanStructure,
    MicroclimateConditions,
    SunExposureShading,
    SurfaceMaterials,
    TrafficVehicles,
    GreenInfrastructure,
    ComfortPerception,
}

pub const TOPIC_COUNT: usize = 7;

impl Topic {
    pub const ALL: [Topic; TOPIC_COUNT] = [
        Topic::UrbanStructure,
        Topic::MicroclimateConditions,
        Topic::SunExposureShading,
        Topic::SurfaceMaterials,
        Topic::TrafficVehicles,
        Topic::GreenInfrastructure,
        Topic::ComfortPerception,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Topic::UrbanStructure => "urban_structure",
            Topic::MicroclimateConditions => "microclimate_conditions",
            Topic::SunExposureShading => "sun_exposure_shading",
            Topic::SurfaceMaterials => "surface_materials",
            Topic::TrafficVehicles => "traffic_vehicles",
            Topic::GreenInfrastructure => "green_infrastructure",
            Topic::ComfortPerception => "comfort_perception",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Topic::UrbanStructure => "urban structure",
            Topic::MicroclimateConditions => "microclimate conditions",
            Topic::SunExposureShading => "sun exposure & shading",
            Topic::SurfaceMaterials => "surface materials",
            Topic::TrafficVehicles => "traffic & vehicles",
            Topic::GreenInfrastructure => "green infrastructure",
            Topic::ComfortPerception => "comfort perception",
        }
    }

    fn from_key(key: &str) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.key() == key)
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Weights over the seven topics. All-zero weights carry the
/// `unclassified` flag; otherwise they sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DistributionRepr", from = "DistributionRepr")]
pub struct TopicDistribution {
    pub weights: [f64; TOPIC_COUNT],
    pub unclassified: bool,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    weights: BTreeMap<Topic, f64>,
    unclassified: bool,
}

impl From<TopicDistribution> for DistributionRepr {
    fn from(d: TopicDistribution) -> Self {
        DistributionRepr {
            weights: Topic::ALL.iter().map(|&t| (t, d.weights[t.index()])).collect(),
            unclassified: d.unclassified,
        }
    }
}

impl From<DistributionRepr> for TopicDistribution {
    fn from(r: DistributionRepr) -> Self {
        let mut weights = [0.0; TOPIC_COUNT];
        for (t, w) in r.weights {
            weights[t.index()] = w;
        }
        TopicDistribution {
            weights,
            unclassified: r.unclassified,
        }
    }
}

impl TopicDistribution {
    pub fn unclassified() -> Self {
        TopicDistribution {
            weights: [0.0; TOPIC_COUNT],
            unclassified: true,
        }
    }

    pub fn weight(&self, t: Topic) -> f64 {
        self.weights[t.index()]
    }

    /// Highest-weight topic; ties go to the earlier topic.
    pub fn argmax(&self) -> Option<Topic> {
        if self.unclassified {
            return None;
        }
        let mut best = Topic::ALL[0];
        for t in Topic::ALL {
            if self.weights[t.index()] > self.weights[best.index()] {
                best = t;
            }
        }
        Some(best)
    }
}

#[derive(Deserialize)]
struct LexiconFile {
    version: String,
    dimensions: BTreeMap<String, Vec<String>>,
}

/// Versioned keyword → topic table.
#[derive(Debug, Clone)]
pub struct Lexicon {
    version: String,
    keywords: HashMap<String, Topic>,
}

pub const DEFAULT_LEXICON: &str = include_str!("../assets/lexicon-v1.json");

impl Lexicon {
    pub fn from_json(source: &str) -> Result<Self, EvalError> {
        let file: LexiconFile = serde_json::from_str(source).map_err(|e| EvalError::Schema(format!("lexicon: {e}")))?;
        let mut keywords = HashMap::new();
        for (dim, words) in file.dimensions {
            let topic = Topic::from_key(&dim)
                .ok_or_else(|| EvalError::Schema(format!("lexicon: unknown dimension `{dim}`")))?;
            for w in words {
                let w = w.to_lowercase();
                if let Some(prev) = keywords.insert(w.clone(), topic) {
                    if prev != topic {
                        return Err(EvalError::Schema(format!(
                            "lexicon: keyword `{w}` listed under two dimensions"
                        )));
                    }
                }
            }
        }
        Ok(Lexicon {
            version: file.version,
            keywords,
        })
    }

    /// The shipped lexicon.
    pub fn builtin() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::from_json(DEFAULT_LEXICON).expect("shipped lexicon is valid"))
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Keyword hits per topic over the lowercased word tokens of `text`.
    pub fn counts(&self, text: &str) -> [usize; TOPIC_COUNT] {
        let mut counts = [0usize; TOPIC_COUNT];
        let lower = text.to_lowercase();
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            if let Some(t) = self.keywords.get(token) {
                counts[t.index()] += 1;
            }
        }
        counts
    }

    pub fn classify(&self, text: &str) -> TopicDistribution {
        let counts = self.counts(text);
        let total: usize = counts.iter().sum();
        if total == 0 {
            return TopicDistribution::unclassified();
        }
        let mut weights = [0.0; TOPIC_COUNT];
        for (w, c) in weights.iter_mut().zip(counts) {
            *w = c as f64 / total as f64;
        }
        TopicDistribution {
            weights,
            unclassified: false,
        }
    }
}

/// Classifies with the shipped lexicon.
pub fn classify_rationale(text: &str) -> TopicDistribution {
    Lexicon::builtin().classify(text)
}

/// Mean distribution over the classified rationales of one persona.
pub fn mean_distribution<'a>(
    lexicon: &Lexicon,
    rationales: impl IntoIterator<Item = &'a str>,
) -> Option<TopicDistribution> {
    let mut sum = [0.0; TOPIC_COUNT];
    let mut n = 0usize;
    for r in rationales {
        let d = lexicon.classify(r);
        if d.unclassified {
            continue;
        }
        for (s, w) in sum.iter_mut().zip(d.weights) {
            *s += w;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let total: f64 = sum.iter().sum();
    let mut weights = [0.0; TOPIC_COUNT];
    for (w, s) in weights.iter_mut().zip(sum) {
        *w = s / total;
    }
    Some(TopicDistribution {
        weights,
        unclassified: false,
    })
}

/// Per-persona topic distributions. A persona with no classifiable
/// rationale gets `NoClassifiedRationales`.
pub fn aggregate_topics<'a, I, R>(by_persona: I) -> BTreeMap<String, Result<TopicDistribution, EvalError>>
where
    I: IntoIterator<Item = (String, R)>,
    R: IntoIterator<Item = &'a str>,
{
    let lex = Lexicon::builtin();
    by_persona
        .into_iter()
        .map(|(name, rationales)| {
            let d = mean_distribution(lex, rationales).ok_or_else(|| EvalError::NoClassifiedRationales(name.clone()));
            (name, d)
        })
        .collect()
}
