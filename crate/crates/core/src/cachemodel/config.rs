use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::metrics::VALID_LINE_SIZES;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cache config needs at least one level")]
    NoLevels,
    #[error("line size {0} must be a power of two in {{32,64,128,256}}")]
    LineSize(u32),
    #[error("level {name}: {reason}")]
    Level { name: String, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing cache config: {0}")]
    Parse(String),
}

/// Geometry of one cache level. Line size is shared by the whole hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGeometry {
    pub name: String,
    pub size_bytes: u64,
    pub ways: u32,
}

/// Ordered cache hierarchy: LRU replacement, write-allocate, write-back,
/// non-inclusive with misses cascading from one level to the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheConfig {
    levels: Vec<LevelGeometry>,
    line_size: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    line_size_bytes: u32,
    level: Vec<LevelFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelFile {
    name: String,
    size_kb: f64,
    ways: u32,
}

impl CacheConfig {
    pub fn new(levels: Vec<LevelGeometry>, line_size: u32) -> Result<Self, ConfigError> {
        if !VALID_LINE_SIZES.contains(&line_size) {
            return Err(ConfigError::LineSize(line_size));
        }
        if levels.is_empty() {
            return Err(ConfigError::NoLevels);
        }
        for level in &levels {
            let bad = |reason: String| ConfigError::Level { name: level.name.clone(), reason };
            if level.ways == 0 {
                return Err(bad("ways must be >= 1".into()));
            }
            let set_bytes = level.ways as u64 * line_size as u64;
            if level.size_bytes == 0 || level.size_bytes % set_bytes != 0 {
                return Err(bad(format!(
                    "size {} bytes is not a multiple of ways x line size ({set_bytes})",
                    level.size_bytes
                )));
            }
            let sets = level.size_bytes / set_bytes;
            if !sets.is_power_of_two() {
                return Err(bad(format!("set count {sets} is not a power of two")));
            }
        }
        Ok(CacheConfig { levels, line_size })
    }

    /// One core's slice of a Xeon E5-2680v2: 32 KB 8-way L1, 256 KB 8-way L2,
    /// 2.5 MB 20-way L3 (a tenth of the shared 25 MB), 64-byte lines.
    pub fn e5_2680v2_core() -> Self {
        let level = |name: &str, kb: u64, ways| LevelGeometry { name: name.into(), size_bytes: kb * 1024, ways };
        CacheConfig::new(vec![level("L1", 32, 8), level("L2", 256, 8), level("L3", 2560, 20)], 64)
            .expect("built-in geometry is valid")
    }

    /// A single fully-associative level of the given number of lines.
    pub fn fully_associative(lines: u64, line_size: u32) -> Result<Self, ConfigError> {
        let ways = u32::try_from(lines).map_err(|_| ConfigError::Level {
            name: "L1".into(),
            reason: format!("{lines} ways is too many"),
        })?;
        CacheConfig::new(
            vec![LevelGeometry { name: "L1".into(), size_bytes: lines * line_size as u64, ways }],
            line_size,
        )
    }

    /// Parses the TOML form:
    ///
    /// ```toml
    /// line_size_bytes = 64
    /// [[level]]
    /// name = "L1"
    /// size_kb = 32
    /// ways = 8
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut levels = Vec::with_capacity(file.level.len());
        for l in file.level {
            let bytes = l.size_kb * 1024.0;
            if !(bytes > 0.0 && bytes.fract() == 0.0 && bytes < u64::MAX as f64) {
                return Err(ConfigError::Level {
                    name: l.name,
                    reason: format!("size_kb {} is not a whole number of bytes", l.size_kb),
                });
            }
            levels.push(LevelGeometry { name: l.name, size_bytes: bytes as u64, ways: l.ways });
        }
        CacheConfig::new(levels, file.line_size_bytes)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn levels(&self) -> &[LevelGeometry] {
        &self.levels
    }

    pub fn line_size(&self) -> u32 {
        self.line_size
    }

    pub fn sets(&self, level: usize) -> u64 {
        let l = &self.levels[level];
        l.size_bytes / (l.ways as u64 * self.line_size as u64)
    }
}
