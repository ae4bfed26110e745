//! Linear annealing from synthetic to real training data.
//!
//! At step `s` a sample comes from the real dataset with probability
//! `max_real_fraction · min(1, s / ramp_steps)`. Every draw is keyed by
//! `(seed, step)` so a resumed run replays the same mixture.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pose::PoseSequence;
use crate::seed::{derive_seed_u64, rng_from};
use crate::{Error, Result};

pub const DEFAULT_MAX_FRAMES: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub max_real_fraction: f64,
    pub ramp_steps: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            max_real_fraction: 0.85,
            ramp_steps: 60_000,
        }
    }
}

impl AnnealSchedule {
    pub fn new(max_real_fraction: f64, ramp_steps: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&max_real_fraction) {
            return Err(Error::invalid(format!(
                "max_real_fraction {max_real_fraction} outside [0, 1]"
            )));
        }
        if ramp_steps < 1 {
            return Err(Error::invalid("ramp_steps must be at least 1"));
        }
        Ok(Self {
            max_real_fraction,
            ramp_steps,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Real,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Real => "REAL",
            Source::Synthetic => "SYNTHETIC",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureDraw {
    pub step: u64,
    pub source: Source,
    pub item_index: u64,
}

pub fn real_fraction(step: u64, sched: &AnnealSchedule) -> f64 {
    if step >= sched.ramp_steps {
        sched.max_real_fraction
    } else {
        sched.max_real_fraction * (step as f64 / sched.ramp_steps as f64)
    }
}

pub fn draw(step: u64, sched: &AnnealSchedule, seed: u64, real_size: u64, synth_size: u64) -> Result<MixtureDraw> {
    if real_size == 0 || synth_size == 0 {
        return Err(Error::invalid("dataset sizes must be at least 1"));
    }
    let mut rng = rng_from(derive_seed_u64(seed, step));
    let u: f64 = rng.gen();
    let (source, size) = if u < real_fraction(step, sched) {
        (Source::Real, real_size)
    } else {
        (Source::Synthetic, synth_size)
    };
    Ok(MixtureDraw {
        step,
        source,
        item_index: rng.gen_range(0..size),
    })
}

/// First `max_frames` frames of `seq`.
pub fn truncate_frames(seq: &PoseSequence, max_frames: usize) -> PoseSequence {
    let keep = seq.len().min(max_frames.max(1));
    PoseSequence {
        frames: seq.frames[..keep].to_vec(),
        source_id: seq.source_id.clone(),
        fps_hint: seq.fps_hint,
    }
}

/// One draw per step in `[0, total_steps)`.
pub fn emit_schedule(
    total_steps: u64,
    sched: &AnnealSchedule,
    seed: u64,
    real_size: u64,
    synth_size: u64,
) -> Result<Vec<MixtureDraw>> {
    (0..total_steps)
        .map(|step| draw(step, sched, seed, real_size, synth_size))
        .collect()
}

/// `step,real_fraction,source` rows with a header.
pub fn schedule_csv(draws: &[MixtureDraw], sched: &AnnealSchedule) -> String {
    let mut out = String::from("step,real_fraction,source\n");
    for d in draws {
        let _ = writeln!(out, "{},{},{}", d.step, real_fraction(d.step, sched), d.source.as_str());
    }
    out
}
