//! Cross-method modal metrics: MAC, sweeps over sampling rate with pole
//! clustering, stable-pole selection, and the eigenvalue sensitivity relation.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmd::{dmd_decompose, DmdOptions};
use crate::error::{Error, Result};
use crate::itd::itd_extract;
use crate::numkit::{self, CMatrix, CVector, Truncation};
use crate::snapshots::{build_pair, decimate, SnapshotMatrix};

/// Modal assurance criterion `|a^* b|^2 / ((a^* a)(b^* b))`.
pub fn mac(a: &CVector, b: &CVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::IncompatibleModes(format!("lengths {} and {}", a.len(), b.len())));
    }
    let aa = a.norm_squared();
    let bb = b.norm_squared();
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::UndefinedMac);
    }
    let ab = a.dotc(b).norm_sqr();
    Ok((ab / (aa * bb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacMatrix {
    pub values: DMatrix<f64>,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
}

impl MacMatrix {
    pub fn compute(
        rows: &CMatrix,
        row_labels: Vec<String>,
        cols: &CMatrix,
        column_labels: Vec<String>,
    ) -> Result<Self> {
        if rows.nrows() != cols.nrows() {
            return Err(Error::IncompatibleModes(format!(
                "mode shapes have {} and {} channels",
                rows.nrows(),
                cols.nrows()
            )));
        }
        if row_labels.len() != rows.ncols() || column_labels.len() != cols.ncols() {
            return Err(Error::InvalidInput("one label per mode required".into()));
        }
        let mut values = DMatrix::zeros(rows.ncols(), cols.ncols());
        for i in 0..rows.ncols() {
            let a = rows.column(i).into_owned();
            for j in 0..cols.ncols() {
                values[(i, j)] = mac(&a, &cols.column(j).into_owned())?;
            }
        }
        Ok(Self { values, row_labels, column_labels })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::from("mode")];
        header.extend(self.column_labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.row_labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend((0..self.values.ncols()).map(|j| format!("{:.6}", 100.0 * self.values[(i, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Real ground-truth shapes as complex columns.
pub fn real_modes(modes: &DMatrix<f64>) -> CMatrix {
    numkit::to_complex(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SamplingFrequencyHz,
    PolynomialOrder,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SamplingFrequencyHz => "sampling_frequency_hz",
            SweepAxis::PolynomialOrder => "order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPole {
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub amplitude: Option<f64>,
    pub source: String,
    #[serde(skip)]
    pub mode: Option<CVector>,
    pub stable: bool,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub axis_value: f64,
    pub poles: Vec<SweepPole>,
    /// Set when the method could not run at this step.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleCluster {
    pub mean_frequency_hz: f64,
    pub mean_damping_ratio: f64,
    pub member_count: usize,
    pub spread_hz: f64,
    /// `(step, pole)` indices into the sweep.
    pub members: Vec<(usize, usize)>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub axis: SweepAxis,
    pub steps: Vec<SweepStep>,
    pub clusters: Vec<PoleCluster>,
}

impl StabilitySweep {
    pub fn axis_values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.axis_value).collect()
    }

    pub fn stable_clusters(&self) -> impl Iterator<Item = (usize, &PoleCluster)> {
        self.clusters.iter().enumerate().filter(|(_, c)| c.stable)
    }

    /// One row per pole: axis value, frequency, damping, stable flag, cluster id (-1 if none).
    pub fn write_csv<W: Write>(&self, out: W, preamble: &[String]) -> Result<()> {
        let mut out = out;
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.axis.name(), "frequency_hz", "zeta", "stable_flag", "cluster_id"])?;
        for step in &self.steps {
            for p in &step.poles {
                let cluster = p.cluster.map(|c| c as i64).unwrap_or(-1);
                w.write_record([
                    format!("{}", step.axis_value),
                    format!("{:e}", p.frequency_hz),
                    format!("{:e}", p.damping_ratio),
                    format!("{}", u8::from(p.stable)),
                    format!("{cluster}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Relative frequency tolerance against the cluster's first member.
    pub tolerance: f64,
    /// Fraction of eligible steps a stable cluster must occupy.
    pub min_fraction: f64,
    pub min_members: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { tolerance: 0.01, min_fraction: 0.8, min_members: 2 }
    }
}

/// Greedy frequency clustering: poles sorted by frequency join the open
/// cluster while within `tolerance` of its first member, one pole per step.
pub fn cluster_by_frequency(steps: &[SweepStep], tolerance: f64) -> Vec<Vec<(usize, usize)>> {
    let mut all: Vec<(f64, usize, usize)> = steps
        .iter()
        .enumerate()
        .flat_map(|(s, step)| step.poles.iter().enumerate().map(move |(p, pole)| (pole.frequency_hz, s, p)))
        .filter(|(f, _, _)| *f > 0.0)
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut anchor = f64::NAN;
    for (f, s, p) in all {
        let open = clusters.last_mut().filter(|_| f <= anchor * (1.0 + tolerance));
        match open {
            Some(members) => {
                if !members.iter().any(|&(ms, _)| ms == s) {
                    members.push((s, p));
                }
            }
            None => {
                anchor = f;
                clusters.push(vec![(s, p)]);
            }
        }
    }
    clusters
}

fn summarize(steps: &[SweepStep], members: Vec<(usize, usize)>) -> PoleCluster {
    let n = members.len() as f64;
    let freqs: Vec<f64> = members.iter().map(|&(s, p)| steps[s].poles[p].frequency_hz).collect();
    let zetas: Vec<f64> = members.iter().map(|&(s, p)| steps[s].poles[p].damping_ratio).collect();
    let lo = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    PoleCluster {
        mean_frequency_hz: freqs.iter().sum::<f64>() / n,
        mean_damping_ratio: zetas.iter().sum::<f64>() / n,
        member_count: members.len(),
        spread_hz: hi - lo,
        members,
        stable: false,
    }
}

/// Cluster a sampling-rate sweep and flag clusters present in enough of the
/// steps whose rate exceeds twice the cluster frequency.
pub fn assemble_rate_sweep(steps: Vec<SweepStep>, config: &ClusterConfig) -> StabilitySweep {
    let mut steps = steps;
    for step in &mut steps {
        for p in &mut step.poles {
            p.stable = false;
            p.cluster = None;
        }
    }
    let mut clusters: Vec<PoleCluster> =
        cluster_by_frequency(&steps, config.tolerance).into_iter().map(|m| summarize(&steps, m)).collect();
    for (id, c) in clusters.iter_mut().enumerate() {
        let eligible = steps.iter().filter(|s| s.failure.is_none() && s.axis_value > 2.0 * c.mean_frequency_hz).count();
        c.stable = c.member_count >= config.min_members
            && eligible > 0
            && c.member_count as f64 >= config.min_fraction * eligible as f64;
        for &(s, p) in &c.members {
            steps[s].poles[p].cluster = Some(id);
            steps[s].poles[p].stable = c.stable;
        }
    }
    StabilitySweep { axis: SweepAxis::SamplingFrequencyHz, steps, clusters }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Dmd,
    Itd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub cluster: ClusterConfig,
    /// Subtract each channel's mean after decimation.
    pub remove_mean: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { cluster: ClusterConfig::default(), remove_mean: true }
    }
}

/// Integer decimation factor taking `master_hz` to `fs`, if one exists.
pub fn decimation_factor(master_hz: f64, fs: f64) -> Option<usize> {
    if !(fs > 0.0) || fs > master_hz * (1.0 + 1e-12) {
        return None;
    }
    let ratio = master_hz / fs;
    let k = ratio.round();
    ((ratio - k).abs() <= 1e-9 * ratio && k >= 1.0).then_some(k as usize)
}

/// Rates reachable from `master_hz` by decimation while keeping at least `min_samples`.
pub fn valid_rates(master_hz: f64, samples: usize, min_samples: usize) -> Vec<f64> {
    (1..=samples).take_while(|k| samples.div_ceil(*k) >= min_samples).map(|k| master_hz / k as f64).collect()
}

fn run_step(snap: &SnapshotMatrix, method: SweepMethod, options: &DmdOptions) -> Result<Vec<SweepPole>> {
    match method {
        SweepMethod::Dmd => {
            let res = dmd_decompose(&build_pair(snap, options.augment)?, options)?;
            Ok(res
                .oscillatory_poles()
                .into_iter()
                .map(|p| SweepPole {
                    frequency_hz: p.frequency_hz,
                    damping_ratio: p.damping_ratio.unwrap_or(0.0),
                    amplitude: Some(p.amplitude),
                    source: "dmd".into(),
                    mode: Some(p.mode),
                    stable: false,
                    cluster: None,
                })
                .collect())
        }
        SweepMethod::Itd => {
            let res = itd_extract(snap)?;
            Ok((0..res.discrete_eigs.len())
                .filter(|&i| res.continuous_eigs[i].im > 0.0)
                .map(|i| SweepPole {
                    frequency_hz: res.frequencies_hz[i],
                    damping_ratio: res.damping_ratios[i].unwrap_or(0.0),
                    amplitude: None,
                    source: "itd".into(),
                    mode: Some(res.modes.column(i).into_owned()),
                    stable: false,
                    cluster: None,
                })
                .collect())
        }
    }
}

/// Identify at every rate of `fs_grid` (each reachable by decimating `master`)
/// and cluster the oscillatory poles across rates.
pub fn pseudo_stability_sweep(
    master: &SnapshotMatrix,
    fs_grid: &[f64],
    method: SweepMethod,
    options: &DmdOptions,
    config: &SweepConfig,
) -> Result<StabilitySweep> {
    if fs_grid.is_empty() {
        return Err(Error::InvalidSweep("sampling-frequency grid is empty".into()));
    }
    if fs_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidSweep("sampling-frequency grid must be strictly ascending".into()));
    }
    let master_hz = master.sampling_rate();
    let factors = fs_grid
        .iter()
        .map(|&fs| {
            decimation_factor(master_hz, fs).ok_or_else(|| Error::Decimation {
                master_hz,
                requested_hz: fs,
                valid: valid_rates(master_hz, master.samples(), 4).into_iter().take(20).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let steps: Vec<SweepStep> = factors
        .par_iter()
        .zip(fs_grid.par_iter())
        .map(|(&k, &fs)| {
            let outcome = decimate(master, k).and_then(|snap| {
                let snap = if config.remove_mean { snap.remove_mean() } else { snap };
                run_step(&snap, method, options)
            });
            match outcome {
                Ok(mut poles) => {
                    poles.retain(|p| p.frequency_hz > 0.0);
                    SweepStep { axis_value: fs, poles, failure: None }
                }
                Err(e) => SweepStep { axis_value: fs, poles: Vec::new(), failure: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(assemble_rate_sweep(steps, &config.cluster))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedPole {
    pub cluster: usize,
    pub axis_value: f64,
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub cluster_mean_frequency_hz: f64,
    pub cluster_mean_damping_ratio: f64,
    #[serde(skip)]
    pub mode: Option<CVector>,
}

/// Per stable cluster, the member nearest the cluster's mean frequency;
/// ties go to the smaller axis value.
pub fn select_stable_poles(sweep: &StabilitySweep) -> Vec<SelectedPole> {
    sweep
        .stable_clusters()
        .filter_map(|(id, c)| {
            let &(s, p) = c.members.iter().min_by(|&&(sa, pa), &&(sb, pb)| {
                let da = (sweep.steps[sa].poles[pa].frequency_hz - c.mean_frequency_hz).abs();
                let db = (sweep.steps[sb].poles[pb].frequency_hz - c.mean_frequency_hz).abs();
                da.total_cmp(&db).then(sweep.steps[sa].axis_value.total_cmp(&sweep.steps[sb].axis_value))
            })?;
            let pole = &sweep.steps[s].poles[p];
            Some(SelectedPole {
                cluster: id,
                axis_value: sweep.steps[s].axis_value,
                frequency_hz: pole.frequency_hz,
                damping_ratio: pole.damping_ratio,
                cluster_mean_frequency_hz: c.mean_frequency_hz,
                cluster_mean_damping_ratio: c.mean_damping_ratio,
                mode: pole.mode.clone(),
            })
        })
        .collect()
}

/// `delta_s = fs log(1 + delta_mu / mu)`; `|delta_s| ~ fs |delta_mu / mu|` for small perturbations.
pub fn eigenvalue_sensitivity(mu: Complex64, delta_mu: Complex64, fs: f64) -> Result<Complex64> {
    if mu.norm() == 0.0 {
        return Err(Error::SingularEigenvalue);
    }
    let rel = delta_mu / mu;
    if rel.norm() >= 1.0 {
        return Err(Error::PerturbationTooLarge(rel.norm()));
    }
    Ok((Complex64::new(1.0, 0.0) + rel).ln() * fs)
}

/// Percentage errors and MAC of one identified mode against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub reference_index: usize,
    pub identified_index: Option<usize>,
    pub frequency_error_pct: Option<f64>,
    pub damping_error_pct: Option<f64>,
    pub mac: Option<f64>,
}

/// An identified pole reduced to what comparison needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSummary {
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub mode: Option<CVector>,
}

/// Pair each reference mode with the nearest-frequency identified pole.
pub fn match_to_reference(identified: &[PoleSummary], reference: &[PoleSummary]) -> Result<Vec<ModeComparison>> {
    reference
        .iter()
        .enumerate()
        .map(|(r, refp)| {
            let best = identified.iter().enumerate().min_by(|a, b| {
                (a.1.frequency_hz - refp.frequency_hz).abs().total_cmp(&(b.1.frequency_hz - refp.frequency_hz).abs())
            });
            let Some((i, p)) = best else {
                return Ok(ModeComparison {
                    reference_index: r,
                    identified_index: None,
                    frequency_error_pct: None,
                    damping_error_pct: None,
                    mac: None,
                });
            };
            let mac = match (&p.mode, &refp.mode) {
                (Some(a), Some(b)) => Some(mac(a, b)?),
                _ => None,
            };
            Ok(ModeComparison {
                reference_index: r,
                identified_index: Some(i),
                frequency_error_pct: Some(100.0 * (p.frequency_hz - refp.frequency_hz).abs() / refp.frequency_hz),
                damping_error_pct: (refp.damping_ratio != 0.0)
                    .then(|| 100.0 * (p.damping_ratio - refp.damping_ratio).abs() / refp.damping_ratio),
                mac,
            })
        })
        .collect()
}

/// Physical part of the POD basis of a snapshot matrix.
#[derive(Debug, Clone)]
pub struct PodModes {
    /// channels x r, unit-norm columns.
    pub modes: CMatrix,
    pub singular_values: Vec<f64>,
}

pub fn pod_modes(snap: &SnapshotMatrix, augment: bool, truncation: Truncation) -> Result<PodModes> {
    let pair = build_pair(snap, augment)?;
    let svd = numkit::svd_truncate(&numkit::to_complex(&pair.x), truncation)?;
    let m = snap.channels();
    let mut modes = svd.left_vectors.rows(0, m).into_owned();
    for mut col in modes.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
    }
    Ok(PodModes { modes, singular_values: svd.singular_values })
}

/// For each reference column, the POD columns whose best-MAC reference is
/// that column, in descending singular-value order.
pub fn assign_pod_modes(pod: &PodModes, reference: &CMatrix) -> Result<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new(); reference.ncols()];
    for j in 0..pod.modes.ncols() {
        let col = pod.modes.column(j).into_owned();
        if col.norm() == 0.0 {
            continue;
        }
        let mut best = (0, -1.0);
        for r in 0..reference.ncols() {
            let v = mac(&col, &reference.column(r).into_owned())?;
            if v > best.1 {
                best = (r, v);
            }
        }
        out[best.0].push(j);
    }
    Ok(out)
}
