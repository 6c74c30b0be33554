use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{resample, wav::read_wav, Waveform, FULLBAND_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Speech,
    Noise,
    Rir,
}

/// One line of a JSON-lines manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Absolute, or relative to the manifest's directory.
    pub path: PathBuf,
    pub kind: SourceKind,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open manifest {}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(&line)
                .map_err(|e| Error::invalid(format!("{}:{}: {e}", path.display(), n + 1)))?;
            entries.push(entry);
        }
        Ok(Self {
            entries,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        for e in &self.entries {
            writeln!(f, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn of_kind(&self, kind: SourceKind) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    /// Checks that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            let p = self.resolve(e);
            if !p.is_file() {
                return Err(Error::invalid(format!(
                    "manifest file {} not found",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Reads a WAV file and converts it to the full-band rate.
pub fn load_audio(path: impl AsRef<Path>) -> Result<Waveform> {
    let w = read_wav(path)?;
    if w.sample_rate() == FULLBAND_RATE {
        Ok(w)
    } else {
        resample(&w, FULLBAND_RATE)
    }
}

/// Decoded clean speech, noise and RIR clips at the full-band rate.
#[derive(Debug, Clone, Default)]
pub struct SourceBanks {
    pub speech: Vec<Waveform>,
    pub noise: Vec<Waveform>,
    pub rir: Vec<Waveform>,
}

impl SourceBanks {
    pub fn load(manifest: &CorpusManifest) -> Result<Self> {
        manifest.validate()?;
        let mut banks = Self::default();
        for e in &manifest.entries {
            let w = load_audio(manifest.resolve(e))?;
            match e.kind {
                SourceKind::Speech => banks.speech.push(w),
                SourceKind::Noise => banks.noise.push(w),
                SourceKind::Rir => banks.rir.push(w),
            }
        }
        if banks.speech.is_empty() {
            return Err(Error::invalid("manifest lists no speech files"));
        }
        Ok(banks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::wav::{write_wav, WavEncoding};

    #[test]
    fn manifest_round_trip_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new(vec![0.1; 1600], 16_000).unwrap();
        write_wav(dir.path().join("a.wav"), &w, WavEncoding::Float32).unwrap();
        let m = CorpusManifest {
            entries: vec![ManifestEntry {
                path: "a.wav".into(),
                kind: SourceKind::Speech,
                duration_s: 0.1,
            }],
            base_dir: dir.path().into(),
        };
        let path = dir.path().join("m.jsonl");
        m.save(&path).unwrap();
        let back = CorpusManifest::load(&path).unwrap();
        assert_eq!(back, m);
        let banks = SourceBanks::load(&back).unwrap();
        assert_eq!(banks.speech[0].sample_rate(), FULLBAND_RATE);
        assert_eq!(banks.speech[0].len(), 4800);
    }

    #[test]
    fn missing_file_rejected() {
        let m = CorpusManifest {
            entries: vec![ManifestEntry {
                path: "/nonexistent/x.wav".into(),
                kind: SourceKind::Noise,
                duration_s: 1.0,
            }],
            base_dir: PathBuf::new(),
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn bad_line_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        fs::write(
            &path,
            "{\"path\": \"a.wav\", \"kind\": \"music\", \"duration_s\": 1}\n",
        )
        .unwrap();
        assert!(CorpusManifest::load(&path).is_err());
    }
}
