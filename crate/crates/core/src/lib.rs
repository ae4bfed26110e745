//! Building blocks for synthesising sentence-level sign-language pose datasets
//! from word-level pose clips.
//!
//! The pipeline runs roughly as
//! `templates/corpus -> sentences -> stitched pose sequences -> 152-dim frames`,
//! with a curriculum sampler, a BPE tokenizer and BLEU/ROUGE scoring for the
//! training and evaluation side.

pub mod bpe;
pub mod config;
pub mod corpus;
pub mod curriculum;
pub mod error;
pub mod io;
pub mod keypoints;
pub mod metrics;
pub mod pose;
pub mod seed;
pub mod stitch;
pub mod template;

pub use error::{Error, Result};
pub use pose::{
    default_selection, KeypointSelection, Landmark, PoseFrame, PoseSequence, RawLandmarkFrame, SentenceRecord,
    WordOrder, POSE_DIMS, POSE_KEYPOINTS,
};
pub use template::Phenomenon;
