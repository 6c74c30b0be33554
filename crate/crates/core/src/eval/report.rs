use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::metrics::{clipped_fraction, lsd};
use crate::audio::wav::{read_wav, write_wav, WavEncoding};
use crate::audio::{stft, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::losses::si_snr_db;
use crate::models::{enhance, Pipeline, RtfReport};

/// Samples at or above this magnitude count as clipped.
pub const CLIP_LEVEL: f64 = 0.999;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileResult {
    pub file: String,
    pub duration_s: f64,
    pub si_snr_in: f64,
    pub si_snr_out: f64,
    pub si_snr_improvement: f64,
    pub lsd_in: f64,
    pub lsd_out: f64,
    pub clipped_in: f64,
    pub clipped_out: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Aggregate {
    pub files: usize,
    pub total_seconds: f64,
    pub si_snr_in: f64,
    pub si_snr_out: f64,
    pub si_snr_improvement: f64,
    pub lsd_in: f64,
    pub lsd_out: f64,
    pub clipped_in: f64,
    pub clipped_out: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub model: String,
    pub params: usize,
    pub rtf: Option<RtfReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model: ModelInfo,
    pub aggregate: Aggregate,
    pub files: Vec<FileResult>,
}

/// Scores one enhanced file against its clean reference.
pub fn score_file(
    name: &str,
    degraded: &Waveform,
    enhanced: &Waveform,
    clean: &Waveform,
) -> Result<FileResult> {
    if degraded.len() != clean.len() || enhanced.len() != clean.len() {
        return Err(Error::invalid(format!(
            "{name}: degraded and clean lengths differ"
        )));
    }
    let cfg = StftConfig::default();
    let sc = stft(clean, &cfg)?;
    let si_in = si_snr_db(degraded.samples(), clean.samples())?;
    let si_out = si_snr_db(enhanced.samples(), clean.samples())?;
    Ok(FileResult {
        file: name.to_string(),
        duration_s: clean.duration_seconds(),
        si_snr_in: si_in,
        si_snr_out: si_out,
        si_snr_improvement: si_out - si_in,
        lsd_in: lsd(&stft(degraded, &cfg)?, &sc)?,
        lsd_out: lsd(&stft(enhanced, &cfg)?, &sc)?,
        clipped_in: clipped_fraction(degraded.samples(), CLIP_LEVEL),
        clipped_out: clipped_fraction(enhanced.samples(), CLIP_LEVEL),
    })
}

pub fn aggregate(files: &[FileResult]) -> Result<Aggregate> {
    if files.is_empty() {
        return Err(Error::invalid("nothing to aggregate"));
    }
    let n = files.len() as f64;
    let mean = |f: fn(&FileResult) -> f64| files.iter().map(f).sum::<f64>() / n;
    Ok(Aggregate {
        files: files.len(),
        total_seconds: files.iter().map(|f| f.duration_s).sum(),
        si_snr_in: mean(|f| f.si_snr_in),
        si_snr_out: mean(|f| f.si_snr_out),
        si_snr_improvement: mean(|f| f.si_snr_improvement),
        lsd_in: mean(|f| f.lsd_in),
        lsd_out: mean(|f| f.lsd_out),
        clipped_in: mean(|f| f.clipped_in),
        clipped_out: mean(|f| f.clipped_out),
    })
}

/// WAV files in `dir` by file name.
fn wavs(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")) {
            if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), p.clone());
            }
        }
    }
    Ok(out)
}

/// Enhances every WAV of `degraded_dir` that has a same-named file in
/// `clean_dir` and scores it. Enhanced audio goes to `enhanced_dir` when set.
pub fn evaluate_dirs(
    pipeline: &Pipeline,
    degraded_dir: &Path,
    clean_dir: &Path,
    enhanced_dir: Option<&Path>,
    rtf: Option<RtfReport>,
) -> Result<EvalReport> {
    let degraded = wavs(degraded_dir)?;
    let clean = wavs(clean_dir)?;
    let mut files = Vec::new();
    if let Some(d) = enhanced_dir {
        std::fs::create_dir_all(d)?;
    }
    for (name, path) in &degraded {
        let Some(cpath) = clean.get(name) else {
            log::warn!("{name}: no clean reference, skipped");
            continue;
        };
        let x = read_wav(path)?;
        let c = read_wav(cpath)?;
        let y = enhance(pipeline, &x)?;
        if let Some(d) = enhanced_dir {
            write_wav(d.join(name), &y, WavEncoding::Float32)?;
        }
        files.push(score_file(name, &x, &y, &c)?);
    }
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no file in {} has a match in {}",
            degraded_dir.display(),
            clean_dir.display()
        )));
    }
    Ok(EvalReport {
        model: ModelInfo {
            model: pipeline.describe(),
            params: pipeline.num_params(),
            rtf,
        },
        aggregate: aggregate(&files)?,
        files,
    })
}

/// Writes `report.json` and the per-file `report.csv` into `dir`.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
    for f in &report.files {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(())
}
