use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::planner::{AStarPlanner, ExternalPlanner, Planner, DEFAULT_TIMEOUT};
use crate::score::{int, parse_exact, ratio, Score};
use crate::similarity::{CharLcs, ExactMatch, NameSimilarity, SynonymTable};
use crate::transform::TransformConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("synonym table: {0}")]
    Synonyms(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityProvider {
    Exact,
    Lcs,
}

/// Tunable constants, read from `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub similarity_provider: SimilarityProvider,
    pub similarity_floor: Score,
    pub synonyms: Option<PathBuf>,
    pub transform: TransformConfig,
    pub planner_timeout: Duration,
    pub planner_command: Option<String>,
    pub validity_reward: Score,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            similarity_provider: SimilarityProvider::Exact,
            similarity_floor: ratio(1, 2),
            synonyms: None,
            transform: TransformConfig::default(),
            planner_timeout: DEFAULT_TIMEOUT,
            planner_command: None,
            validity_reward: int(1),
        }
    }
}

impl Config {
    /// Blank lines and `#` comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Line { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let score = || parse_exact(value).ok_or_else(|| err(format!("`{value}` is not a number")));
            let count = || value.parse::<u64>().map_err(|_| err(format!("`{value}` is not a count")));
            match key {
                "similarity.provider" => {
                    c.similarity_provider = match value {
                        "exact" => SimilarityProvider::Exact,
                        "lcs" => SimilarityProvider::Lcs,
                        _ => return Err(err(format!("unknown provider `{value}`"))),
                    }
                }
                "similarity.floor" => c.similarity_floor = score()?,
                "similarity.synonyms" => c.synonyms = Some(PathBuf::from(value)),
                "transform.c_shift" => c.transform.c_shift = nonnegative(score()?).ok_or_else(|| err("must be ≥ 0".into()))?,
                "transform.c_map" => c.transform.c_map = nonnegative(score()?).ok_or_else(|| err("must be ≥ 0".into()))?,
                "transform.prune_threshold" => c.transform.prune_threshold = count()? as usize,
                "transform.budget" => c.transform.budget = count()?,
                "planner.timeout" => {
                    let secs: f64 = value
                        .parse()
                        .ok()
                        .filter(|s: &f64| s.is_finite() && *s >= 0.0)
                        .ok_or_else(|| err(format!("`{value}` is not a duration in seconds")))?;
                    c.planner_timeout = Duration::from_secs_f64(secs);
                }
                "planner.command" => c.planner_command = Some(value.to_string()).filter(|v| !v.is_empty()),
                "potential.validity_reward" => c.validity_reward = score()?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(c)
    }

    /// Relative synonym paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let mut c = Config::parse(&text)?;
        if let (Some(syn), Some(dir)) = (&c.synonyms, path.parent()) {
            if syn.is_relative() {
                c.synonyms = Some(dir.join(syn));
            }
        }
        Ok(c)
    }

    pub fn name_similarity(&self) -> Result<Box<dyn NameSimilarity>, ConfigError> {
        let base: Box<dyn NameSimilarity> = match self.similarity_provider {
            SimilarityProvider::Exact => Box::new(ExactMatch),
            SimilarityProvider::Lcs => Box::new(CharLcs {
                floor: self.similarity_floor,
            }),
        };
        match &self.synonyms {
            None => Ok(base),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Synonyms(format!("{}: {e}", path.display())))?;
                let table = SynonymTable::parse(&text, base).map_err(|e| ConfigError::Synonyms(e.to_string()))?;
                Ok(Box::new(table))
            }
        }
    }

    pub fn planner(&self) -> Result<Box<dyn Planner>, ConfigError> {
        match &self.planner_command {
            None => Ok(Box::new(AStarPlanner::default())),
            Some(cmd) => ExternalPlanner::from_command(cmd)
                .map(|p| Box::new(p) as Box<dyn Planner>)
                .ok_or_else(|| ConfigError::Io("empty planner command".into())),
        }
    }
}

fn nonnegative(s: Score) -> Option<Score> {
    (s >= int(0)).then_some(s)
}
