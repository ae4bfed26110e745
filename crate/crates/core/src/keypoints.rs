//! Raw landmark streams to clean 152-dim pose sequences.

use crate::pose::{KeypointSelection, PoseFrame, PoseSequence, RawLandmarkFrame, POSE_DIMS, RAW_LANDMARKS};
use crate::{Error, Result};

/// Confidence below which a landmark is replaced from a neighbouring frame.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f32 = 0.8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InterpolationReport {
    /// Frames in which at least one landmark was replaced.
    pub frames_touched: usize,
    pub keypoints_filled: usize,
    /// Low-confidence landmarks with no confident donor in any frame.
    pub unresolved: usize,
}

/// Replaces every landmark whose confidence is below `threshold` with the
/// `(x, y)` of the same landmark in the nearest frame where it is confident.
///
/// Donors are looked up in the input, never in already patched frames.
/// Equidistant donors resolve to the earlier frame. Landmarks with no donor at
/// all keep their value and are counted as unresolved. Confidences are left
/// untouched.
pub fn interpolate_low_confidence(
    frames: &[RawLandmarkFrame],
    threshold: f32,
) -> Result<(Vec<RawLandmarkFrame>, InterpolationReport)> {
    if frames.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }

    let n = frames.len();
    let mut out = frames.to_vec();
    let mut report = InterpolationReport::default();
    let mut touched = vec![false; n];
    // Nearest confident frame at or before / at or after t, per landmark.
    let mut left = vec![None; n];
    let mut right = vec![None; n];

    for g in 0..RAW_LANDMARKS {
        let confident = |t: usize| frames[t].landmarks()[g].confidence >= threshold;
        if (0..n).all(confident) {
            continue;
        }
        let mut last = None;
        for (t, slot) in left.iter_mut().enumerate() {
            if confident(t) {
                last = Some(t);
            }
            *slot = last;
        }
        last = None;
        for t in (0..n).rev() {
            if confident(t) {
                last = Some(t);
            }
            right[t] = last;
        }
        for t in 0..n {
            if confident(t) {
                continue;
            }
            let donor = match (left[t], right[t]) {
                (Some(l), Some(r)) => Some(if t - l <= r - t { l } else { r }),
                (l, r) => l.or(r),
            };
            match donor {
                Some(d) => {
                    let src = frames[d].landmarks()[g];
                    let dst = &mut out[t].landmarks_mut()[g];
                    dst.x = src.x;
                    dst.y = src.y;
                    report.keypoints_filled += 1;
                    touched[t] = true;
                }
                None => report.unresolved += 1,
            }
        }
    }
    report.frames_touched = touched.iter().filter(|&&b| b).count();
    Ok((out, report))
}

/// Picks the selected keypoints and lays them out as `(x, y)` pairs in the
/// order body, face, left hand, right hand.
pub fn select_and_flatten(frame: &RawLandmarkFrame, sel: &KeypointSelection) -> PoseFrame {
    let lm = frame.landmarks();
    let mut values = [0f32; POSE_DIMS];
    for (k, g) in sel.global_indices().into_iter().enumerate() {
        values[2 * k] = lm[g].x;
        values[2 * k + 1] = lm[g].y;
    }
    PoseFrame::new(values).expect("raw frames carry finite coordinates")
}

/// Interpolation followed by per-frame selection.
pub fn process_word_video(
    source_id: &str,
    frames: &[RawLandmarkFrame],
    sel: &KeypointSelection,
    threshold: f32,
) -> Result<(PoseSequence, InterpolationReport)> {
    let (patched, report) = interpolate_low_confidence(frames, threshold)?;
    let frames = patched.iter().map(|f| select_and_flatten(f, sel)).collect();
    Ok((PoseSequence::new(source_id, frames), report))
}
