//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment. Keys mirror the pipeline
//! hyperparameters; unknown keys are rejected so typos do not pass silently.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "jobs",
    "skip_oov",
    "confidence_threshold",
    "min_match_rate",
    "merge_max_len",
    "merge_fraction",
    "merge_group",
    "min_freq",
    "word_order",
    "base_stride",
    "jitter_strides",
    "crossfade_frames",
    "target_mean_frames",
    "max_frames",
    "max_real_fraction",
    "ramp_steps",
    "vocab_size",
    "smoothing",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("line {}", i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::data(&loc, "expected `key = value`"))?;
            let key = k.trim().to_ascii_lowercase().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::data(&loc, format!("unknown key `{}`", k.trim())));
            }
            if values.insert(key.clone(), v.trim().to_owned()).is_some() {
                return Err(Error::data(&loc, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed lookup; `Ok(None)` when the key is absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("config `{key}`: cannot parse `{v}`"))),
        }
    }

    /// Comma separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::invalid(format!("config `{key}`: cannot parse `{s}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}
