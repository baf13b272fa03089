use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::PipelineError;

/// Cached pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Graph,
    Embedding,
    Transform,
}

impl Stage {
    fn dir(self) -> &'static str {
        match self {
            Stage::Graph => "graphs",
            Stage::Embedding => "embeddings",
            Stage::Transform => "transforms",
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Stage::Graph => "digraph",
            Stage::Embedding => "emb",
            Stage::Transform => "transform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageStats {
    pub hits: usize,
    pub misses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub graph: StageStats,
    pub embedding: StageStats,
    pub transform: StageStats,
}

impl CacheStats {
    fn stage_mut(&mut self, stage: Stage) -> &mut StageStats {
        match stage {
            Stage::Graph => &mut self.graph,
            Stage::Embedding => &mut self.embedding,
            Stage::Transform => &mut self.transform,
        }
    }

    pub fn total_misses(&self) -> usize {
        self.graph.misses + self.embedding.misses + self.transform.misses
    }

    pub fn total_hits(&self) -> usize {
        self.graph.hits + self.embedding.hits + self.transform.hits
    }
}

impl fmt::Display for CacheStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graphs {}/{} embeddings {}/{} transforms {}/{} (hits/misses)",
            self.graph.hits,
            self.graph.misses,
            self.embedding.hits,
            self.embedding.misses,
            self.transform.hits,
            self.transform.misses
        )
    }
}

/// Hex SHA-256 over length-prefixed parts, so part boundaries matter.
pub fn content_hash<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Artifacts stored as `<workspace>/cache/<stage>/<hash>.<ext>`. Without a
/// workspace nothing is stored and every lookup is a miss.
pub struct Cache {
    root: Option<PathBuf>,
    stats: Mutex<CacheStats>,
}

impl Cache {
    pub fn new(workspace: Option<&Path>) -> Self {
        Self {
            root: workspace.map(|w| w.join("cache")),
            stats: Mutex::new(CacheStats::default()),
        }
    }

    pub fn path(&self, stage: Stage, key: &str) -> Option<PathBuf> {
        self.root
            .as_ref()
            .map(|r| r.join(stage.dir()).join(format!("{key}.{}", stage.ext())))
    }

    pub fn stats(&self) -> CacheStats {
        *self.stats.lock().unwrap()
    }

    fn record(&self, stage: Stage, hit: bool) {
        let mut s = self.stats.lock().unwrap();
        let st = s.stage_mut(stage);
        if hit {
            st.hits += 1;
        } else {
            st.misses += 1;
        }
    }

    /// Returns the cached value for `key`, or computes, stores and returns
    /// it. Unreadable cache entries count as misses and are overwritten.
    pub fn get_or_compute<T>(
        &self,
        stage: Stage,
        key: &str,
        decode: impl Fn(&str) -> Result<T, PipelineError>,
        encode: impl Fn(&T) -> String,
        compute: impl FnOnce() -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        let path = self.path(stage, key);
        if let Some(p) = &path {
            if let Ok(text) = std::fs::read_to_string(p) {
                match decode(&text) {
                    Ok(v) => {
                        self.record(stage, true);
                        return Ok(v);
                    }
                    Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", p.display()),
                }
            }
        }
        self.record(stage, false);
        let value = compute()?;
        if let Some(p) = &path {
            let dir = p.parent().expect("cache paths have a parent");
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(dir.display().to_string(), e))?;
            let tmp = p.with_extension(format!("tmp{}", std::process::id()));
            std::fs::write(&tmp, encode(&value)).map_err(|e| PipelineError::Io(tmp.display().to_string(), e))?;
            std::fs::rename(&tmp, p).map_err(|e| PipelineError::Io(p.display().to_string(), e))?;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_respects_part_boundaries() {
        assert_ne!(content_hash([&b"ab"[..], b"c"]), content_hash([&b"a"[..], b"bc"]));
        assert_eq!(content_hash([&b"x"[..]]).len(), 64);
    }

    #[test]
    fn second_lookup_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path()));
        let get = |c: &Cache| {
            c.get_or_compute(
                Stage::Graph,
                "k",
                |t| Ok(t.to_string()),
                |v: &String| v.clone(),
                || Ok("value".to_string()),
            )
        };
        assert_eq!(get(&cache).unwrap(), "value");
        assert_eq!(get(&cache).unwrap(), "value");
        assert_eq!(cache.stats().graph, StageStats { hits: 1, misses: 1 });
        std::fs::remove_file(cache.path(Stage::Graph, "k").unwrap()).unwrap();
        get(&cache).unwrap();
        assert_eq!(cache.stats().graph.misses, 2);
    }
}
