//! Exact dynamic mode decomposition.
//!
//! The best-fit propagator `A = Y X^+` is never formed; its projection onto
//! the retained POD basis, `U^* Y V Sigma^-1`, is eigendecomposed instead and
//! the eigenvectors are lifted back with `phi = U w`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, normalize_phase, CMatrix, CVector, Truncation};
use crate::snapshots::SnapshotPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeOrder {
    /// Ascending frequency; within a conjugate pair the positive-frequency member first.
    ByFrequency,
    /// Descending initial amplitude `|q0|`.
    ByAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmdOptions {
    pub truncation: Truncation,
    pub augment: bool,
    pub sort: ModeOrder,
}

impl Default for DmdOptions {
    fn default() -> Self {
        Self { truncation: Truncation::RelativeThreshold(1e-10), augment: true, sort: ModeOrder::ByFrequency }
    }
}

/// Continuous-time view of one discrete eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousPole {
    pub s: Complex64,
    pub frequency_hz: f64,
    /// `None` when `|s| = 0`.
    pub damping_ratio: Option<f64>,
    /// The eigenvalue sits on the negative real axis, so its frequency is
    /// indistinguishable from the Nyquist alias.
    pub nyquist_ambiguous: bool,
}

/// `s = log(mu) / dt` on the principal branch, `f = |s| / 2 pi`, `zeta = -Re(s) / |s|`.
pub fn discrete_to_continuous(mu: Complex64, dt: f64) -> Result<ContinuousPole> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if mu.norm() == 0.0 {
        return Err(Error::SingularEigenvalue);
    }
    let nyquist_ambiguous = mu.im == 0.0 && mu.re < 0.0;
    // keep the branch cut's +pi side for -0.0 imaginary parts
    let mu = if mu.im == 0.0 { Complex64::new(mu.re, 0.0) } else { mu };
    let s = mu.ln() / dt;
    let mag = s.norm();
    let damping_ratio = if mag > 0.0 { Some(-s.re / mag) } else { None };
    Ok(ContinuousPole { s, frequency_hz: mag / (2.0 * std::f64::consts::PI), damping_ratio, nyquist_ambiguous })
}

/// One identified eigenvalue with its physical mode shape.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedPole {
    pub index: usize,
    pub mu: Complex64,
    pub s: Complex64,
    pub frequency_hz: f64,
    pub damping_ratio: Option<f64>,
    pub amplitude: f64,
    pub mode: CVector,
}

#[derive(Debug, Clone)]
pub struct DmdResult {
    pub discrete_eigs: Vec<Complex64>,
    pub continuous_eigs: Vec<Complex64>,
    pub frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<Option<f64>>,
    pub nyquist_ambiguous: Vec<bool>,
    /// channels x rank, unit-norm phase-fixed columns.
    pub modes: CMatrix,
    pub initial_amplitudes: Vec<Complex64>,
    pub retained_rank: usize,
    pub dt: f64,
    pub singular_values: Vec<f64>,
    pub discarded_energy: f64,
    pub rank_clamped: bool,
    pub options: DmdOptions,
}

impl DmdResult {
    pub fn channels(&self) -> usize {
        self.modes.nrows()
    }

    /// Poles with positive imaginary part, i.e. one member of each oscillatory pair.
    pub fn oscillatory_poles(&self) -> Vec<IdentifiedPole> {
        (0..self.retained_rank)
            .filter(|&i| self.continuous_eigs[i].im > 0.0)
            .map(|i| IdentifiedPole {
                index: i,
                mu: self.discrete_eigs[i],
                s: self.continuous_eigs[i],
                frequency_hz: self.frequencies_hz[i],
                damping_ratio: self.damping_ratios[i],
                amplitude: self.initial_amplitudes[i].norm(),
                mode: self.modes.column(i).into_owned(),
            })
            .collect()
    }
}

pub fn dmd_decompose(pair: &SnapshotPair, options: &DmdOptions) -> Result<DmdResult> {
    options.truncation.validate()?;
    if pair.x.shape() != pair.y.shape() {
        return Err(Error::InvalidInput("X and Y differ in shape".into()));
    }
    if pair.x.ncols() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pair.x.ncols() });
    }
    let channels = pair.channels.min(pair.x.nrows());

    let x = numkit::to_complex(&pair.x);
    let svd = numkit::svd_truncate(&x, options.truncation)?;
    let r = svd.rank();

    // U^* Y V Sigma^-1
    let uy = svd.left_vectors.adjoint() * numkit::to_complex(&pair.y);
    let mut projected = uy * &svd.right_vectors;
    for (j, &s) in svd.singular_values.iter().enumerate() {
        projected.column_mut(j).unscale_mut(s);
    }
    let eig = numkit::eig_general(&projected)?;
    let mut full_modes = &svd.left_vectors * &eig.vectors;

    // normalise on the physical block, carrying the same factor through the shifted block
    for j in 0..r {
        let physical: CVector = full_modes.view((0, j), (channels, 1)).column(0).into_owned();
        let mut fixed = physical.clone();
        normalize_phase(&mut fixed);
        let pivot = physical.icamax();
        if physical[pivot].norm() > 0.0 {
            let factor = fixed[pivot] / physical[pivot];
            full_modes.column_mut(j).apply(|z| *z *= factor);
            full_modes[(pivot, j)].im = 0.0;
        }
    }

    let first = x.column(0).into_owned();
    let mode_svd = numkit::svd_truncate(&full_modes, Truncation::FullRank)?;
    let amplitudes = numkit::pseudo_inverse(&mode_svd) * first;

    let mut poles = Vec::with_capacity(r);
    for &mu in &eig.values {
        poles.push(discrete_to_continuous(mu, pair.dt)?);
    }

    let mut order: Vec<usize> = (0..r).collect();
    match options.sort {
        ModeOrder::ByFrequency => order.sort_by(|&a, &b| {
            poles[a].frequency_hz.total_cmp(&poles[b].frequency_hz).then(poles[b].s.im.total_cmp(&poles[a].s.im))
        }),
        ModeOrder::ByAmplitude => order.sort_by(|&a, &b| {
            amplitudes[b]
                .norm()
                .total_cmp(&amplitudes[a].norm())
                .then(poles[a].frequency_hz.total_cmp(&poles[b].frequency_hz))
                .then(poles[b].s.im.total_cmp(&poles[a].s.im))
        }),
    }

    let modes = CMatrix::from_fn(channels, r, |i, j| full_modes[(i, order[j])]);
    Ok(DmdResult {
        discrete_eigs: order.iter().map(|&i| eig.values[i]).collect(),
        continuous_eigs: order.iter().map(|&i| poles[i].s).collect(),
        frequencies_hz: order.iter().map(|&i| poles[i].frequency_hz).collect(),
        damping_ratios: order.iter().map(|&i| poles[i].damping_ratio).collect(),
        nyquist_ambiguous: order.iter().map(|&i| poles[i].nyquist_ambiguous).collect(),
        modes,
        initial_amplitudes: order.iter().map(|&i| amplitudes[i]).collect(),
        retained_rank: r,
        dt: pair.dt,
        singular_values: svd.all_singular_values,
        discarded_energy: svd.discarded_energy,
        rank_clamped: svd.rank_clamped,
        options: *options,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: DVector<f64>,
    /// Norm of the discarded imaginary part.
    pub imaginary_residue: f64,
}

/// `x_k = sum_i mu_i^k phi_i q0_i` over the physical channels.
pub fn reconstruct(result: &DmdResult, k: u32) -> Reconstruction {
    let mut acc = CVector::zeros(result.channels());
    for i in 0..result.retained_rank {
        let weight = result.discrete_eigs[i].powu(k) * result.initial_amplitudes[i];
        acc += result.modes.column(i) * weight;
    }
    Reconstruction { values: acc.map(|z| z.re), imaginary_residue: acc.map(|z| z.im).norm() }
}
