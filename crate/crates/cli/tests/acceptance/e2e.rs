use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use signsynth_core::bpe::BpeModel;
use signsynth_core::io::{read_manifest, read_pose_file};

use crate::common::{read_dir_bytes, signsynth_ok, toy_file, write_raw_clips};
use crate::Outcome;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Stats JSON rebuilt from manifest rows without going through the library.
fn recompute_stats(manifest: &Path) -> Value {
    let rows: Vec<Value> = fs::read_to_string(manifest)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let hist = |values: Vec<u64>| {
        let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
        for v in &values {
            *bins.entry(*v).or_default() += 1;
        }
        let total = values.len() as u64;
        let sum: u64 = values.iter().sum();
        let mean = if total == 0 { 0.0 } else { sum as f64 / total as f64 };
        let bins: serde_json::Map<String, Value> = bins.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        json!({"bins": bins, "mean": mean, "total": total})
    };
    let lengths = rows
        .iter()
        .map(|r| r["text"].as_array().unwrap().len() as u64)
        .collect();
    let frames = rows.iter().filter_map(|r| r["n_frames"].as_u64()).collect();
    let vocab: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r["text"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()))
        .collect();
    json!({
        "n_sentences": rows.len(),
        "length_histogram": hist(lengths),
        "frame_histogram": hist(frames),
        "vocab_size": vocab.len(),
    })
}

pub fn end_to_end() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let raw = d.join("raw");
    let lex = d.join("lexicon");
    write_raw_clips(&raw, 808, 6, 14);
    signsynth_ok(["ingest", "--input", s(&raw), "--out", s(&lex)]);
    let n_clips = fs::read_dir(&lex).unwrap().count();
    ensure!(n_clips == 20, "ingest wrote {n_clips} clips");

    let gen = d.join("gen.jsonl");
    signsynth_ok([
        "--seed",
        "21",
        "gen",
        "--templates",
        s(&toy_file("templates.tsv")),
        "--lexicon",
        s(&toy_file("lexicon.jsonl")),
        "--sign-vocab",
        s(&lex),
        "--out",
        s(&gen),
    ]);
    let sentences = read_manifest(&gen).map_err(|e| e.to_string())?;

    let mut dirs = Vec::new();
    for jobs in ["1", "8"] {
        let out = d.join(format!("stitched-{jobs}"));
        signsynth_ok([
            "--seed",
            "21",
            "--jobs",
            jobs,
            "stitch",
            "--input",
            s(&gen),
            "--lexicon",
            s(&lex),
            "--word-order",
            "RWO",
            "--jitter",
            "1,2,3",
            "--out",
            s(&out),
        ]);
        dirs.push(out);
    }
    ensure!(
        read_dir_bytes(&dirs[0]) == read_dir_bytes(&dirs[1]),
        "--jobs 1 and --jobs 8 outputs differ"
    );

    let manifest = dirs[0].join("manifest.jsonl");
    let stitched = read_manifest(&manifest).map_err(|e| e.to_string())?;
    ensure!(
        stitched.len() == sentences.len(),
        "{} of {} sentences stitched",
        stitched.len(),
        sentences.len()
    );
    for r in &stitched {
        let seq = read_pose_file(&dirs[0].join(r.pose_path.as_ref().unwrap())).map_err(|e| e.to_string())?;
        ensure!(
            Some(seq.len() as u64) == r.n_frames,
            "{}: pose file length disagrees with manifest",
            r.id
        );
    }
    let stats: Value = serde_json::from_str(&fs::read_to_string(dirs[0].join("stats.json")).unwrap()).unwrap();
    ensure!(
        stats == recompute_stats(&manifest),
        "stats.json is not recomputable from the manifest rows"
    );
    let cli_stats = signsynth_ok(["stats", "--input", s(&manifest)]);
    let cli_stats: Value = serde_json::from_slice(&cli_stats.stdout).unwrap();
    ensure!(cli_stats == stats, "`stats` disagrees with stats.json");

    let schedule = d.join("schedule.csv");
    signsynth_ok([
        "--seed",
        "21",
        "sample",
        "--total-steps",
        "2000",
        "--real-size",
        "500",
        "--synth-size",
        &stitched.len().to_string(),
        "--out",
        s(&schedule),
    ]);
    let rows = fs::read_to_string(&schedule).unwrap().lines().count();
    ensure!(rows == 2001, "schedule has {rows} lines");

    let model_path = d.join("bpe.json");
    let ids_path = d.join("ids.jsonl");
    signsynth_ok([
        "tokenize",
        "train",
        "--input",
        s(&gen),
        "--vocab-size",
        "200",
        "--out",
        s(&model_path),
    ]);
    signsynth_ok([
        "tokenize",
        "encode",
        "--model",
        s(&model_path),
        "--input",
        s(&manifest),
        "--out",
        s(&ids_path),
    ]);
    let model = BpeModel::from_json(&fs::read_to_string(&model_path).unwrap()).map_err(|e| e.to_string())?;
    let mut pairs = String::new();
    for (line, r) in fs::read_to_string(&ids_path).unwrap().lines().zip(&stitched) {
        let v: Value = serde_json::from_str(line).unwrap();
        ensure!(v["id"] == r.id.as_str(), "encoded ids out of order");
        let ids: Vec<u32> = v["ids"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap() as u32)
            .collect();
        let decoded = model.decode(&ids).map_err(|e| e.to_string())?;
        pairs.push_str(&json!({"id": r.id, "candidate": decoded, "reference": r.joined()}).to_string());
        pairs.push('\n');
    }
    let pairs_path = d.join("pairs.jsonl");
    fs::write(&pairs_path, pairs).unwrap();
    let eval = signsynth_ok(["eval", "--input", s(&pairs_path)]);
    let table = String::from_utf8(eval.stdout).unwrap();
    ensure!(
        table.lines().any(|l| l == "BLEU-4\t100.00"),
        "decoded text does not score BLEU-4 100:\n{table}"
    );

    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "pipeline took {secs:.1}s");
    Ok(format!(
        "20 clips -> {} sentences -> stitched (jobs 1 = jobs 8) -> schedule -> BPE -> eval in {secs:.1}s; stats exact",
        stitched.len()
    ))
}
