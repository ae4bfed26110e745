use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use signsynth_core::config::Config;

pub struct Settings {
    pub seed: u64,
    pub jobs: usize,
    pub skip_oov: bool,
    config: Config,
}

impl Settings {
    pub fn resolve(
        path: Option<&Path>,
        seed: Option<u64>,
        jobs: Option<usize>,
        skip_oov: bool,
    ) -> anyhow::Result<Self> {
        let config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Config::parse(&text).with_context(|| format!("in config {}", p.display()))?
            }
            None => Config::default(),
        };
        let seed = match seed {
            Some(s) => s,
            None => config.get("seed")?.unwrap_or(0),
        };
        let jobs = match jobs {
            Some(j) => j,
            None => config.get("jobs")?.unwrap_or(1),
        }
        .max(1);
        let skip_oov = skip_oov || config.get("skip_oov")?.unwrap_or(false);
        Ok(Self {
            seed,
            jobs,
            skip_oov,
            config,
        })
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.config.get(key)?.unwrap_or(default)),
        }
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.config.get(key)?),
        }
    }

    pub fn pick_list<T: FromStr>(&self, flag: Option<&str>, key: &str, default: Vec<T>) -> anyhow::Result<Vec<T>> {
        if let Some(raw) = flag {
            return raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|_| crate::UsageError(format!("cannot parse `{s}` in `{raw}`")).into())
                })
                .collect();
        }
        Ok(self.config.get_list(key)?.unwrap_or(default))
    }
}
