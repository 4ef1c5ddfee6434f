//! Append-only persistent score cache.
//!
//! One JSON record per line, each carrying a CRC-32 of its own payload.
//! Records that fail to parse or whose checksum does not match are skipped
//! on load and get rescored (and re-appended) on the next request.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{digest, LogprobProvider, ProviderError, ScoreResult};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub provider_id: String,
    pub model_name: String,
    pub context_hash: String,
    pub target_hash: String,
}

impl CacheKey {
    pub fn new<P: LogprobProvider + ?Sized>(provider: &P, context: &str, target: &str) -> Self {
        Self {
            provider_id: provider.provider_id().to_string(),
            model_name: provider.model_name().to_string(),
            context_hash: digest(context),
            target_hash: digest(target),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RecordBody {
    #[serde(flatten)]
    key: CacheKey,
    token_logprobs: Vec<f64>,
    token_texts: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    #[serde(flatten)]
    body: RecordBody,
    checksum: String,
}

fn checksum(body: &RecordBody) -> String {
    let bytes = serde_json::to_vec(body).expect("record serializes");
    format!("{:08x}", crc32fast::hash(&bytes))
}

pub struct ScoreCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<CacheKey, ScoreResult>>,
    writer: Mutex<Option<File>>,
    skipped: usize,
}

impl ScoreCache {
    /// Cache without a backing file.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            skipped: 0,
        }
    }

    /// Opens (creating if needed) a cache file and loads every valid record.
    pub fn open(path: &Path) -> Result<Self, std::io::Error> {
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)?;
        let mut entries = HashMap::new();
        let mut skipped = 0;
        for (idx, line) in BufReader::new(&file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match Self::parse_record(&line) {
                Some((key, result)) => {
                    entries.insert(key, result);
                }
                None => {
                    skipped += 1;
                    tracing::warn!(
                        "{}: skipping corrupt cache record on line {}",
                        path.display(),
                        idx + 1
                    );
                }
            }
        }

        // A torn final write leaves no trailing newline; terminate it so the
        // next append starts a fresh record.
        let len = file.seek(SeekFrom::End(0))?;
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1))?;
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }

        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
            skipped,
        })
    }

    fn parse_record(line: &str) -> Option<(CacheKey, ScoreResult)> {
        let record: Record = serde_json::from_str(line).ok()?;
        if checksum(&record.body) != record.checksum {
            return None;
        }
        let body = record.body;
        if body.token_logprobs.is_empty() || body.token_logprobs.len() != body.token_texts.len() {
            return None;
        }
        let result = ScoreResult {
            token_count: body.token_logprobs.len(),
            token_logprobs: body.token_logprobs,
            token_texts: body.token_texts,
            provider_id: body.key.provider_id.clone(),
            context_hash: body.key.context_hash.clone(),
            target_hash: body.key.target_hash.clone(),
        };
        Some((body.key, result))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Records dropped as corrupt when the file was opened.
    pub fn skipped_records(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<ScoreResult> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, result: ScoreResult) -> Result<(), std::io::Error> {
        let mut writer = self.writer.lock().expect("cache writer lock");
        if let Some(file) = writer.as_mut() {
            let body = RecordBody {
                key: key.clone(),
                token_logprobs: result.token_logprobs.clone(),
                token_texts: result.token_texts.clone(),
            };
            let checksum = checksum(&body);
            let mut line = serde_json::to_string(&Record { body, checksum }).expect("record serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key, result);
        Ok(())
    }
}

/// Returns the cached result for (provider, model, context, target), or
/// scores and appends it.
pub fn cached_score<P: LogprobProvider + ?Sized>(
    cache: &ScoreCache,
    provider: &P,
    context: &str,
    target: &str,
) -> Result<ScoreResult, ProviderError> {
    let key = CacheKey::new(provider, context, target);
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let result = provider.score_target(context, target)?;
    cache.insert(key, result.clone())?;
    Ok(result)
}

/// A provider whose scores go through a [`ScoreCache`].
pub struct CachedProvider<P> {
    inner: P,
    cache: Arc<ScoreCache>,
}

impl<P: LogprobProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: Arc<ScoreCache>) -> Self {
        Self { inner, cache }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }
}

impl<P: LogprobProvider> LogprobProvider for CachedProvider<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn max_parallel(&self) -> usize {
        self.inner.max_parallel()
    }

    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        cached_score(&self.cache, &self.inner, context, target)
    }
}
