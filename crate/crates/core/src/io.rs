//! On-disk formats: binary pose files, raw landmark JSON-lines, dataset
//! manifests and their statistics.
//!
//! Pose file layout (`psp-v1`):
//!
//! ```text
//! u32 LE     header length H
//! H bytes    JSON header {"version":"psp-v1","n_frames":N,"dims":152,"source_id":"..."}
//! N*152*4    frame values, f32 LE, row-major
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{length_stats, LengthHistogram};
use crate::pose::{Landmark, PoseFrame, PoseSequence, RawLandmarkFrame, SentenceRecord, POSE_DIMS};
use crate::stitch::SignLexicon;
use crate::{Error, Result};

pub const POSE_FILE_VERSION: &str = "psp-v1";
pub const POSE_FILE_EXT: &str = "psp";

/// Writes via a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseHeader {
    version: String,
    n_frames: u64,
    dims: u64,
    source_id: String,
}

pub fn encode_pose(seq: &PoseSequence) -> Vec<u8> {
    let header = serde_json::to_vec(&PoseHeader {
        version: POSE_FILE_VERSION.to_owned(),
        n_frames: seq.len() as u64,
        dims: POSE_DIMS as u64,
        source_id: seq.source_id.clone(),
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(4 + header.len() + seq.len() * POSE_DIMS * 4);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for f in &seq.frames {
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pose(bytes: &[u8]) -> Result<PoseSequence> {
    let head_len = bytes
        .get(..4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .ok_or_else(|| Error::data("byte 0", "missing header length"))?;
    let header_bytes = bytes
        .get(4..4 + head_len)
        .ok_or_else(|| Error::data("byte 4", format!("header of {head_len} bytes is truncated")))?;
    let header: PoseHeader =
        serde_json::from_slice(header_bytes).map_err(|e| Error::data("byte 4", format!("malformed header: {e}")))?;
    if header.version != POSE_FILE_VERSION {
        return Err(Error::data(
            "byte 4",
            format!("unsupported version `{}`", header.version),
        ));
    }
    if header.dims != POSE_DIMS as u64 {
        return Err(Error::data(
            "byte 4",
            format!("dims {} (expected {POSE_DIMS})", header.dims),
        ));
    }
    let start = 4 + head_len;
    let payload = &bytes[start..];
    let want = header.n_frames as usize * POSE_DIMS * 4;
    if payload.len() != want {
        return Err(Error::data(
            format!("byte {start}"),
            format!(
                "payload is {} bytes, expected {want} for {} frames",
                payload.len(),
                header.n_frames
            ),
        ));
    }
    let mut frames = Vec::with_capacity(header.n_frames as usize);
    let mut values = [0f32; POSE_DIMS];
    for (fi, chunk) in payload.chunks_exact(POSE_DIMS * 4).enumerate() {
        for (vi, b) in chunk.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(b.try_into().unwrap());
            if !v.is_finite() {
                let offset = start + fi * POSE_DIMS * 4 + vi * 4;
                return Err(Error::data(
                    format!("byte {offset}"),
                    format!("frame {fi} value {vi} is not finite"),
                ));
            }
            values[vi] = v;
        }
        frames.push(PoseFrame::new(values)?);
    }
    Ok(PoseSequence::new(header.source_id, frames))
}

pub fn write_pose_file(path: &Path, seq: &PoseSequence) -> Result<()> {
    write_atomic(path, &encode_pose(seq))
}

pub fn read_pose_file(path: &Path) -> Result<PoseSequence> {
    decode_pose(&fs::read(path)?).map_err(|e| match e {
        Error::Data { location, message } => Error::data(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

/// Loads every `*.psp` in `dir`, keyed by each file's `source_id`.
pub fn load_sign_lexicon(dir: &Path) -> Result<SignLexicon> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == POSE_FILE_EXT))
        .collect();
    paths.sort();
    let mut lex = SignLexicon::new();
    for p in paths {
        let seq = read_pose_file(&p)?;
        let word = seq.source_id.clone();
        lex.insert(&word, seq)
            .map_err(|e| Error::data(p.display().to_string(), e.to_string()))?;
    }
    Ok(lex)
}

#[derive(Serialize, Deserialize)]
struct RawFrameJson {
    body: Vec<[f32; 3]>,
    face: Vec<[f32; 3]>,
    left_hand: Vec<[f32; 3]>,
    right_hand: Vec<[f32; 3]>,
}

fn to_landmarks(points: &[[f32; 3]]) -> Vec<Landmark> {
    points.iter().map(|p| Landmark::new(p[0], p[1], p[2])).collect()
}

fn to_points(lms: &[Landmark]) -> Vec<[f32; 3]> {
    lms.iter().map(|l| [l.x, l.y, l.confidence]).collect()
}

/// One JSON frame per line with `body`/`face`/`left_hand`/`right_hand`
/// arrays of `[x, y, confidence]`.
pub fn parse_raw_landmarks(text: &str) -> Result<Vec<RawLandmarkFrame>> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("line {}", i + 1);
        let row: RawFrameJson = serde_json::from_str(line).map_err(|e| Error::data(&loc, e.to_string()))?;
        let frame = RawLandmarkFrame::from_parts(
            &to_landmarks(&row.body),
            &to_landmarks(&row.face),
            &to_landmarks(&row.left_hand),
            &to_landmarks(&row.right_hand),
        )
        .map_err(|e| Error::data(&loc, e.to_string()))?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn format_raw_landmarks(frames: &[RawLandmarkFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        let row = RawFrameJson {
            body: to_points(f.body()),
            face: to_points(f.face()),
            left_hand: to_points(f.left_hand()),
            right_hand: to_points(f.right_hand()),
        };
        out.push_str(&serde_json::to_string(&row).expect("frame serializes"));
        out.push('\n');
    }
    out
}

pub fn read_raw_landmarks(path: &Path) -> Result<Vec<RawLandmarkFrame>> {
    parse_raw_landmarks(&fs::read_to_string(path)?).map_err(|e| match e {
        Error::Data { location, message } => Error::data(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

pub fn write_raw_landmarks(path: &Path, frames: &[RawLandmarkFrame]) -> Result<()> {
    write_atomic(path, format_raw_landmarks(frames).as_bytes())
}

/// Parses manifest rows, validating each record and id uniqueness.
pub fn parse_manifest(text: &str) -> Result<Vec<SentenceRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("line {}", i + 1);
        let rec: SentenceRecord = serde_json::from_str(line).map_err(|e| Error::data(&loc, e.to_string()))?;
        rec.validate().map_err(|e| Error::data(&loc, e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::data(&loc, format!("duplicate id `{}`", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn format_manifest(records: &[SentenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_manifest(path: &Path) -> Result<Vec<SentenceRecord>> {
    parse_manifest(&fs::read_to_string(path)?).map_err(|e| match e {
        Error::Data { location, message } => Error::data(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

pub fn write_manifest(path: &Path, records: &[SentenceRecord]) -> Result<()> {
    write_atomic(path, format_manifest(records).as_bytes())
}

/// Companion statistics for a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_sentences: u64,
    pub length_histogram: LengthHistogram,
    /// Over rows that carry `n_frames`.
    pub frame_histogram: LengthHistogram,
    /// Distinct tokens, case-sensitive.
    pub vocab_size: u64,
}

pub fn compute_stats(records: &[SentenceRecord]) -> DatasetStats {
    let vocab: BTreeSet<&str> = records.iter().flat_map(|r| r.text.iter().map(String::as_str)).collect();
    DatasetStats {
        n_sentences: records.len() as u64,
        length_histogram: length_stats(records),
        frame_histogram: LengthHistogram::from_lengths(records.iter().filter_map(|r| r.n_frames)),
        vocab_size: vocab.len() as u64,
    }
}
