use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ComfortScore, GenerationParams, PerceptionResult};
use crate::personas::RenderedPrompt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub backend_id: String,
    pub persona: String,
    pub scene_ref: String,
    pub prompt_hash: String,
}

impl CacheKey {
    pub fn new(
        backend_id: &str,
        persona: &str,
        scene_ref: &str,
        prompt: &RenderedPrompt,
        params: GenerationParams,
    ) -> Self {
        let mut h = Sha256::new();
        h.update(prompt.system.as_bytes());
        h.update([0u8]);
        h.update(prompt.user.as_bytes());
        h.update([0u8]);
        h.update(params.temperature.to_le_bytes());
        h.update(params.max_tokens.to_le_bytes());
        let digest = h.finalize();
        let prompt_hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        CacheKey {
            backend_id: backend_id.to_string(),
            persona: persona.to_string(),
            scene_ref: scene_ref.to_string(),
            prompt_hash,
        }
    }
}

/// One line of the on-disk cache log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    #[serde(flatten)]
    pub key: CacheKey,
    pub score: ComfortScore,
    pub rationale: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

/// Score cache keyed by (backend, persona, scene, prompt hash). Optionally
/// backed by an append-only NDJSON log; on reload the last record per key
/// wins.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<CacheKey, PerceptionResult>>,
    log: Option<Mutex<File>>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache::default()
    }

    pub fn open(path: &Path) -> io::Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| {
                    io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}:{}: {e}", path.display(), lineno + 1),
                    )
                })?;
                let result = PerceptionResult {
                    scene_ref: rec.key.scene_ref.clone(),
                    score: rec.score,
                    rationale: rec.rationale,
                    backend_id: rec.key.backend_id.clone(),
                    prompt_tokens: rec.prompt_tokens,
                    completion_tokens: rec.completion_tokens,
                    latency_ms: rec.latency_ms,
                    cached: false,
                };
                entries.insert(rec.key, result);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ScoreCache {
            entries: RwLock::new(entries),
            log: Some(Mutex::new(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<PerceptionResult> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, result: &PerceptionResult) -> io::Result<()> {
        if let Some(log) = &self.log {
            let rec = CacheRecord {
                key: key.clone(),
                score: result.score,
                rationale: result.rationale.clone(),
                prompt_tokens: result.prompt_tokens,
                completion_tokens: result.completion_tokens,
                latency_ms: result.latency_ms,
            };
            let mut line = serde_json::to_string(&rec).map_err(io::Error::other)?;
            line.push('\n');
            // one write per record keeps appends whole under concurrency
            log.lock().expect("cache log lock").write_all(line.as_bytes())?;
        }
        let mut stored = result.clone();
        stored.cached = false;
        self.entries.write().expect("cache lock").insert(key, stored);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(score: f64) -> PerceptionResult {
        PerceptionResult {
            scene_ref: "s1".into(),
            score: ComfortScore::new(score).unwrap(),
            rationale: "plenty of shade".into(),
            backend_id: "mock".into(),
            prompt_tokens: 3,
            completion_tokens: 4,
            latency_ms: 0,
            cached: false,
        }
    }

    fn key() -> CacheKey {
        let prompt = RenderedPrompt {
            system: "sys".into(),
            user: "user".into(),
        };
        CacheKey::new("mock", "Bob", "s1", &prompt, GenerationParams::default())
    }

    #[test]
    fn persisted_log_reloads_last_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.ndjson");
        {
            let c = ScoreCache::open(&path).unwrap();
            c.insert(key(), &result(0.2)).unwrap();
            c.insert(key(), &result(0.7)).unwrap();
        }
        let c = ScoreCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(&key()).unwrap(), result(0.7));
    }

    #[test]
    fn prompt_hash_depends_on_prompt_and_params() {
        let p1 = RenderedPrompt {
            system: "a".into(),
            user: "b".into(),
        };
        let p2 = RenderedPrompt {
            system: "a".into(),
            user: "c".into(),
        };
        let gp = GenerationParams::default();
        let hot = GenerationParams { temperature: 1.0, ..gp };
        let k1 = CacheKey::new("m", "p", "s", &p1, gp);
        assert_eq!(k1, CacheKey::new("m", "p", "s", &p1, gp));
        assert_ne!(k1, CacheKey::new("m", "p", "s", &p2, gp));
        assert_ne!(k1, CacheKey::new("m", "p", "s", &p1, hot));
    }
}
