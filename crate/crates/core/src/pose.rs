//! Core pose and sentence types shared by every pipeline stage.

use serde::{Deserialize, Serialize};

use crate::template::Phenomenon;
use crate::{Error, Result};

pub const BODY_LANDMARKS: usize = 33;
pub const FACE_LANDMARKS: usize = 468;
pub const HAND_LANDMARKS: usize = 21;
/// Landmarks per raw extractor frame, laid out body, face, left hand, right hand.
pub const RAW_LANDMARKS: usize = BODY_LANDMARKS + FACE_LANDMARKS + 2 * HAND_LANDMARKS;

pub const FACE_OFFSET: usize = BODY_LANDMARKS;
pub const LEFT_HAND_OFFSET: usize = FACE_OFFSET + FACE_LANDMARKS;
pub const RIGHT_HAND_OFFSET: usize = LEFT_HAND_OFFSET + HAND_LANDMARKS;

pub const SELECTED_BODY: usize = 11;
pub const SELECTED_FACE: usize = 23;
/// Keypoints kept per frame.
pub const POSE_KEYPOINTS: usize = SELECTED_BODY + SELECTED_FACE + 2 * HAND_LANDMARKS;
/// Length of a flattened pose vector, `(x, y)` per keypoint.
pub const POSE_DIMS: usize = 2 * POSE_KEYPOINTS;

/// Body landmarks dropped from the pose vector: legs, hips, inner/outer eye
/// corners, mouth corners and the finger tips duplicated by the hand model.
pub const EXCLUDED_BODY: [usize; 22] = [
    26, 28, 30, 32, 25, 27, 29, 31, 1, 3, 4, 6, 9, 10, 17, 18, 19, 20, 21, 22, 23, 24,
];

/// Face mesh landmarks kept: mouth corners, outer lips, eyebrows, eye contours
/// and the nose top.
pub const SELECTED_FACE_MESH: [usize; SELECTED_FACE] = [
    61, 291, 17, 0, 70, 105, 107, 300, 334, 336, 161, 158, 33, 163, 153, 133, 388, 385, 263, 390, 380, 362, 9,
];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Landmark {
    pub x: f32,
    pub y: f32,
    pub confidence: f32,
}

impl Landmark {
    pub fn new(x: f32, y: f32, confidence: f32) -> Self {
        Self { x, y, confidence }
    }
}

/// One frame of holistic extractor output.
///
/// Landmarks are stored contiguously in the global order body (33), face
/// (468), left hand (21), right hand (21), so index `g` of [`landmarks`]
/// addresses the same point in every frame.
///
/// [`landmarks`]: RawLandmarkFrame::landmarks
#[derive(Clone, Debug, PartialEq)]
pub struct RawLandmarkFrame {
    landmarks: Vec<Landmark>,
}

impl RawLandmarkFrame {
    pub fn from_parts(
        body: &[Landmark],
        face: &[Landmark],
        left_hand: &[Landmark],
        right_hand: &[Landmark],
    ) -> Result<Self> {
        let check = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name}: expected {want} landmarks, got {got}")))
            }
        };
        check("body", body.len(), BODY_LANDMARKS)?;
        check("face", face.len(), FACE_LANDMARKS)?;
        check("left_hand", left_hand.len(), HAND_LANDMARKS)?;
        check("right_hand", right_hand.len(), HAND_LANDMARKS)?;
        let mut landmarks = Vec::with_capacity(RAW_LANDMARKS);
        landmarks.extend_from_slice(body);
        landmarks.extend_from_slice(face);
        landmarks.extend_from_slice(left_hand);
        landmarks.extend_from_slice(right_hand);
        Self::from_landmarks(landmarks)
    }

    /// Builds a frame from all landmarks in global order.
    pub fn from_landmarks(landmarks: Vec<Landmark>) -> Result<Self> {
        if landmarks.len() != RAW_LANDMARKS {
            return Err(Error::invalid(format!(
                "expected {RAW_LANDMARKS} landmarks, got {}",
                landmarks.len()
            )));
        }
        for (g, l) in landmarks.iter().enumerate() {
            if !(l.x.is_finite() && l.y.is_finite()) {
                return Err(Error::invalid(format!("landmark {g} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&l.confidence) {
                return Err(Error::invalid(format!(
                    "landmark {g} confidence {} outside [0, 1]",
                    l.confidence
                )));
            }
        }
        Ok(Self { landmarks })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub(crate) fn landmarks_mut(&mut self) -> &mut [Landmark] {
        &mut self.landmarks
    }

    pub fn body(&self) -> &[Landmark] {
        &self.landmarks[..FACE_OFFSET]
    }

    pub fn face(&self) -> &[Landmark] {
        &self.landmarks[FACE_OFFSET..LEFT_HAND_OFFSET]
    }

    pub fn left_hand(&self) -> &[Landmark] {
        &self.landmarks[LEFT_HAND_OFFSET..RIGHT_HAND_OFFSET]
    }

    pub fn right_hand(&self) -> &[Landmark] {
        &self.landmarks[RIGHT_HAND_OFFSET..]
    }
}

/// A selected, flattened 152-value pose vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseFrame([f32; POSE_DIMS]);

impl PoseFrame {
    pub fn from_slice(values: &[f32]) -> Result<Self> {
        let arr: [f32; POSE_DIMS] = values
            .try_into()
            .map_err(|_| Error::invalid(format!("pose frame needs {POSE_DIMS} values, got {}", values.len())))?;
        Self::new(arr)
    }

    pub fn new(values: [f32; POSE_DIMS]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("pose value {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f32; POSE_DIMS] {
        &self.0
    }

    /// Point on the segment between `self` and `other`, `t` in [0, 1].
    pub fn lerp(&self, other: &PoseFrame, t: f32) -> PoseFrame {
        let mut out = [0f32; POSE_DIMS];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a + (b - a) * t;
        }
        PoseFrame(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    pub frames: Vec<PoseFrame>,
    pub source_id: String,
    pub fps_hint: Option<f32>,
}

impl PoseSequence {
    pub fn new(source_id: impl Into<String>, frames: Vec<PoseFrame>) -> Self {
        Self {
            frames,
            source_id: source_id.into(),
            fps_hint: None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordOrder {
    /// Same word order as the source sentence.
    #[default]
    #[serde(rename = "SWO")]
    Same,
    /// Uniformly permuted word order.
    #[serde(rename = "RWO")]
    Random,
}

impl std::str::FromStr for WordOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SWO" => Ok(WordOrder::Same),
            "RWO" => Ok(WordOrder::Random),
            _ => Err(Error::invalid(format!(
                "unknown word order `{s}` (expected SWO or RWO)"
            ))),
        }
    }
}

/// One row of a dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub text: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phenomenon: Option<Phenomenon>,
    #[serde(default)]
    pub word_order: WordOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<u64>,
}

impl SentenceRecord {
    pub fn new(id: impl Into<String>, text: Vec<String>) -> Self {
        Self {
            id: id.into(),
            text,
            phenomenon: None,
            word_order: WordOrder::Same,
            pose_path: None,
            n_frames: None,
        }
    }

    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        Self::new(id, text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn with_phenomenon(mut self, p: Phenomenon) -> Self {
        self.phenomenon = Some(p);
        self
    }

    pub fn joined(&self) -> String {
        self.text.join(" ")
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.is_empty() {
            return Err(Error::invalid(format!("record `{}` has empty text", self.id)));
        }
        if self.pose_path.is_some() && !matches!(self.n_frames, Some(n) if n > 0) {
            return Err(Error::invalid(format!(
                "record `{}` has a pose_path but no positive n_frames",
                self.id
            )));
        }
        Ok(())
    }
}

/// Which raw landmarks make up a [`PoseFrame`]. Hands are always kept whole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeypointSelection {
    body: Vec<usize>,
    face: Vec<usize>,
}

impl KeypointSelection {
    pub fn new(mut body: Vec<usize>, mut face: Vec<usize>) -> Result<Self> {
        body.sort_unstable();
        face.sort_unstable();
        let check = |name: &str, idx: &[usize], want: usize, bound: usize| {
            if idx.len() != want {
                return Err(Error::invalid(format!(
                    "{name}: need {want} indices, got {}",
                    idx.len()
                )));
            }
            if idx.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("{name}: duplicate index")));
            }
            if idx.iter().any(|&i| i >= bound) {
                return Err(Error::invalid(format!("{name}: index out of range [0, {bound})")));
            }
            Ok(())
        };
        check("body", &body, SELECTED_BODY, BODY_LANDMARKS)?;
        check("face", &face, SELECTED_FACE, FACE_LANDMARKS)?;
        Ok(Self { body, face })
    }

    pub fn body_indices(&self) -> &[usize] {
        &self.body
    }

    pub fn face_indices(&self) -> &[usize] {
        &self.face
    }

    /// Raw-frame landmark indices in output order (76 entries).
    pub fn global_indices(&self) -> Vec<usize> {
        self.body
            .iter()
            .copied()
            .chain(self.face.iter().map(|&i| FACE_OFFSET + i))
            .chain(LEFT_HAND_OFFSET..RIGHT_HAND_OFFSET)
            .chain(RIGHT_HAND_OFFSET..RAW_LANDMARKS)
            .collect()
    }
}

impl Default for KeypointSelection {
    fn default() -> Self {
        default_selection()
    }
}

/// The standard 76-keypoint selection: 11 upper-body, 23 face, both hands.
pub fn default_selection() -> KeypointSelection {
    let body = (0..BODY_LANDMARKS).filter(|i| !EXCLUDED_BODY.contains(i)).collect();
    KeypointSelection::new(body, SELECTED_FACE_MESH.to_vec()).expect("built-in selection is well formed")
}
