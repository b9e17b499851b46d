//! JSON result files shared by every identification method, and atomic writes.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dmd::DmdResult;
use crate::error::{Error, Result};
use crate::itd::ItdResult;
use crate::lscf::LscfPoleSet;
use crate::modal::PoleSummary;
use crate::numkit::CVector;
use crate::synth::ModalGroundTruth;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    Dmd,
    Itd,
    GroundTruth,
    Lscf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub index: usize,
    /// Discrete eigenvalue as `[re, im]`, absent for frequency-domain fits.
    pub mu: Option<[f64; 2]>,
    pub s: Option<[f64; 2]>,
    pub frequency_hz: f64,
    pub damping_ratio: Option<f64>,
    pub abs_mu: Option<f64>,
    pub amplitude: Option<f64>,
    pub nyquist_ambiguous: bool,
    /// One `[re, im]` pair per channel.
    pub mode: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub kind: ResultKind,
    pub channels: Vec<String>,
    pub dt: Option<f64>,
    pub poles: Vec<PoleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discarded_energy: Option<f64>,
    /// Resolved run configuration, including the seed.
    pub config: serde_json::Value,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn mode_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| pair(*z)).collect()
}

impl ResultFile {
    pub fn from_dmd(res: &DmdResult, channels: Vec<String>, config: serde_json::Value) -> Self {
        let poles = (0..res.retained_rank)
            .map(|i| PoleRecord {
                index: i,
                mu: Some(pair(res.discrete_eigs[i])),
                s: Some(pair(res.continuous_eigs[i])),
                frequency_hz: res.frequencies_hz[i],
                damping_ratio: res.damping_ratios[i],
                abs_mu: Some(res.discrete_eigs[i].norm()),
                amplitude: Some(res.initial_amplitudes[i].norm()),
                nyquist_ambiguous: res.nyquist_ambiguous[i],
                mode: Some(mode_pairs(&res.modes.column(i).into_owned())),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: ResultKind::Dmd,
            channels,
            dt: Some(res.dt),
            poles,
            retained_rank: Some(res.retained_rank),
            singular_values: Some(res.singular_values.clone()),
            discarded_energy: Some(res.discarded_energy),
            config,
        }
    }

    pub fn from_itd(res: &ItdResult, channels: Vec<String>, config: serde_json::Value) -> Self {
        let poles = (0..res.discrete_eigs.len())
            .map(|i| PoleRecord {
                index: i,
                mu: Some(pair(res.discrete_eigs[i])),
                s: Some(pair(res.continuous_eigs[i])),
                frequency_hz: res.frequencies_hz[i],
                damping_ratio: res.damping_ratios[i],
                abs_mu: Some(res.discrete_eigs[i].norm()),
                amplitude: None,
                nyquist_ambiguous: res.discrete_eigs[i].im == 0.0 && res.discrete_eigs[i].re < 0.0,
                mode: Some(mode_pairs(&res.modes.column(i).into_owned())),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: ResultKind::Itd,
            channels,
            dt: Some(res.dt),
            poles,
            retained_rank: None,
            singular_values: None,
            discarded_energy: None,
            config,
        }
    }

    pub fn from_ground_truth(gt: &ModalGroundTruth, channels: Vec<String>, config: serde_json::Value) -> Self {
        let poles = (0..gt.frequencies_hz.len())
            .map(|i| PoleRecord {
                index: i,
                mu: None,
                s: None,
                frequency_hz: gt.frequencies_hz[i],
                damping_ratio: Some(gt.damping_ratios[i]),
                abs_mu: None,
                amplitude: None,
                nyquist_ambiguous: false,
                mode: Some(gt.mode_matrix.column(i).iter().map(|&v| [v, 0.0]).collect()),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: ResultKind::GroundTruth,
            channels,
            dt: None,
            poles,
            retained_rank: None,
            singular_values: None,
            discarded_energy: None,
            config,
        }
    }

    pub fn from_lscf(fit: &LscfPoleSet, channels: Vec<String>, config: serde_json::Value) -> Self {
        let poles = fit
            .poles
            .iter()
            .enumerate()
            .map(|(i, p)| PoleRecord {
                index: i,
                mu: None,
                s: Some(pair(p.s)),
                frequency_hz: p.frequency_hz,
                damping_ratio: Some(p.damping_ratio),
                abs_mu: None,
                amplitude: None,
                nyquist_ambiguous: false,
                mode: None,
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: ResultKind::Lscf,
            channels,
            dt: None,
            poles,
            retained_rank: None,
            singular_values: None,
            discarded_energy: None,
            config,
        }
    }

    /// Poles to compare: positive-frequency ones for identified results, all for ground truth.
    pub fn comparable_poles(&self) -> Vec<PoleSummary> {
        self.poles
            .iter()
            .filter(|p| match p.s {
                Some(s) => s[1] > 0.0,
                None => true,
            })
            .map(|p| PoleSummary {
                frequency_hz: p.frequency_hz,
                damping_ratio: p.damping_ratio.unwrap_or(0.0),
                mode: p
                    .mode
                    .as_ref()
                    .map(|m| CVector::from_iterator(m.len(), m.iter().map(|v| Complex64::new(v[0], v[1])))),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let file: Self = serde_json::from_str(&text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: schema version {} is not supported",
                path.as_ref().display(),
                file.schema_version
            )));
        }
        Ok(file)
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{dmd_decompose, DmdOptions};
    use crate::snapshots::build_pair;
    use crate::synth::sdof_paper_snapshots;

    #[test]
    fn dmd_json_round_trip() {
        let snap = sdof_paper_snapshots().unwrap();
        let res = dmd_decompose(&build_pair(&snap, true).unwrap(), &DmdOptions::default()).unwrap();
        let file = ResultFile::from_dmd(&res, snap.channel_labels().to_vec(), serde_json::json!({"seed": 0}));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, file.to_json().unwrap().as_bytes()).unwrap();
        let back = ResultFile::read(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.comparable_poles().len(), 1);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"truncation\"") || text.contains("\"seed\""));
    }
}
