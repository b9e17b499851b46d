//! Analytic benchmark generators: SDOF free decay, proportionally damped
//! chains under a unit step, receptance FRFs, a cantilever beam field, and
//! multiplicative measurement noise.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::CMatrix;
use crate::snapshots::SnapshotMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdofParams {
    pub mass: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub x0: f64,
    pub v0: f64,
}

impl SdofParams {
    /// 50 Hz, 1 % damping, released from unit displacement.
    // the damping coefficient is the published rounded value, not 2 pi
    #[allow(clippy::approx_constant)]
    pub fn paper() -> Self {
        Self { mass: 1.0, damping: 6.2832, stiffness: 9.8696e4, x0: 1.0, v0: 0.0 }
    }

    pub fn natural_frequency_rad(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    pub fn natural_frequency_hz(&self) -> f64 {
        self.natural_frequency_rad() / (2.0 * PI)
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.mass * self.stiffness).sqrt())
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !(self.stiffness > 0.0) || !(self.damping >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "need m > 0, k > 0, c >= 0; got m={}, k={}, c={}",
                self.mass, self.stiffness, self.damping
            )));
        }
        let zeta = self.damping_ratio();
        if zeta >= 1.0 {
            return Err(Error::NotUnderdamped { zeta });
        }
        Ok(())
    }
}

/// `n` points evenly spaced over `[0, duration]`, both ends included.
pub fn linspace_times(duration: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let step = duration / (n - 1) as f64;
    (0..n).map(|j| j as f64 * step).collect()
}

/// Sample instants of the `sdof-paper` preset: 1024 points over one second.
pub fn sdof_paper_times() -> Vec<f64> {
    linspace_times(1.0, 1024)
}

pub fn sdof_response(params: &SdofParams, times: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let wn = params.natural_frequency_rad();
    let zeta = params.damping_ratio();
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let b = (params.v0 + zeta * wn * params.x0) / wd;
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::InvalidInput(format!("negative or NaN time {t}")));
            }
            let (s, c) = (wd * t).sin_cos();
            Ok((-zeta * wn * t).exp() * (params.x0 * c + b * s))
        })
        .collect()
}

/// Snapshot matrix of the `sdof-paper` preset.
pub fn sdof_paper_snapshots() -> Result<SnapshotMatrix> {
    let times = sdof_paper_times();
    let x = sdof_response(&SdofParams::paper(), &times)?;
    SnapshotMatrix::new(DMatrix::from_row_slice(1, x.len(), &x), times[1] - times[0], vec!["x1".into()], 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdofSystem {
    pub mass_matrix: DMatrix<f64>,
    pub damping_matrix: DMatrix<f64>,
    pub stiffness_matrix: DMatrix<f64>,
    pub force_pattern: DVector<f64>,
}

impl MdofSystem {
    pub fn new(
        mass_matrix: DMatrix<f64>,
        damping_matrix: DMatrix<f64>,
        stiffness_matrix: DMatrix<f64>,
        force_pattern: DVector<f64>,
    ) -> Result<Self> {
        let n = mass_matrix.nrows();
        for (name, mat) in [("mass", &mass_matrix), ("damping", &damping_matrix), ("stiffness", &stiffness_matrix)] {
            if mat.shape() != (n, n) {
                return Err(Error::InvalidInput(format!("{name} matrix must be {n}x{n}")));
            }
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} matrix has non-finite entries")));
            }
            let asym = (mat - mat.transpose()).amax();
            if asym > 1e-12 * mat.amax().max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidInput(format!("{name} matrix is not symmetric")));
            }
        }
        if force_pattern.len() != n {
            return Err(Error::InvalidInput(format!("force pattern must have {n} entries")));
        }
        if n == 0 || mass_matrix.clone().cholesky().is_none() {
            return Err(Error::InvalidInput("mass matrix is not positive definite".into()));
        }
        Ok(Self { mass_matrix, damping_matrix, stiffness_matrix, force_pattern })
    }

    /// Fixed-free spring chain: spring `i` joins mass `i` to mass `i-1`
    /// (the first to ground), with `C = alpha K`.
    pub fn chain(masses: &[f64], springs: &[f64], alpha: f64, force_pattern: DVector<f64>) -> Result<Self> {
        let n = masses.len();
        if springs.len() != n {
            return Err(Error::InvalidInput("need one spring per mass".into()));
        }
        let mass = DMatrix::from_diagonal(&DVector::from_row_slice(masses));
        let mut k = DMatrix::zeros(n, n);
        for (i, &ki) in springs.iter().enumerate() {
            k[(i, i)] += ki;
            if i > 0 {
                k[(i - 1, i - 1)] += ki;
                k[(i - 1, i)] -= ki;
                k[(i, i - 1)] -= ki;
            }
        }
        let c = &k * alpha;
        Self::new(mass, c, k, force_pattern)
    }

    /// Six unit masses on unit springs, `c = 0.01`, unit step on the free end.
    pub fn chain6_paper() -> Self {
        let mut f = DVector::zeros(6);
        f[5] = 1.0;
        Self::chain(&[1.0; 6], &[1.0; 6], 0.01, f).expect("preset is valid")
    }

    pub fn dof(&self) -> usize {
        self.mass_matrix.nrows()
    }

    /// `alpha` with `C = alpha K`, if the damping is stiffness-proportional.
    pub fn proportional_alpha(&self) -> Option<f64> {
        let kk = self.stiffness_matrix.dot(&self.stiffness_matrix);
        let cn = self.damping_matrix.norm();
        if cn == 0.0 {
            return Some(0.0);
        }
        if kk == 0.0 {
            return None;
        }
        let alpha = self.damping_matrix.dot(&self.stiffness_matrix) / kk;
        let resid = (&self.damping_matrix - &self.stiffness_matrix * alpha).norm();
        (resid <= 1e-12 * cn).then_some(alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalGroundTruth {
    pub frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    /// Mass-normalised columns, largest-magnitude entry positive.
    pub mode_matrix: DMatrix<f64>,
}

impl ModalGroundTruth {
    pub fn natural_frequencies_rad(&self) -> Vec<f64> {
        self.frequencies_hz.iter().map(|f| 2.0 * PI * f).collect()
    }
}

pub fn modal_ground_truth(system: &MdofSystem) -> Result<ModalGroundTruth> {
    let alpha = system
        .proportional_alpha()
        .ok_or_else(|| Error::UnsupportedDamping("damping matrix is not proportional to stiffness".into()))?;
    let chol = system
        .mass_matrix
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or_else(|| Error::InvalidInput("mass matrix is singular".into()))?;
    let mut reduced = &l_inv * &system.stiffness_matrix * l_inv.transpose();
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);

    let n = system.dof();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let back = l_inv.transpose();
    let mut modes = DMatrix::zeros(n, n);
    let mut freqs = Vec::with_capacity(n);
    let mut zetas = Vec::with_capacity(n);
    for (j, &i) in order.iter().enumerate() {
        let mut phi = &back * eig.eigenvectors.column(i);
        if phi[phi.iamax()] < 0.0 {
            phi.neg_mut();
        }
        modes.set_column(j, &phi);
        let w = eig.eigenvalues[i].max(0.0).sqrt();
        freqs.push(w / (2.0 * PI));
        zetas.push(alpha * w / 2.0);
    }
    Ok(ModalGroundTruth { frequencies_hz: freqs, damping_ratios: zetas, mode_matrix: modes })
}

/// Response to a unit step through `force_pattern`, from rest, by modal superposition.
pub fn mdof_step_response(system: &MdofSystem, truth: &ModalGroundTruth, times: &[f64]) -> Result<DMatrix<f64>> {
    let n = system.dof();
    if truth.mode_matrix.shape() != (n, n) {
        return Err(Error::InvalidInput("ground truth does not match the system size".into()));
    }
    for &zeta in &truth.damping_ratios {
        if zeta >= 1.0 {
            return Err(Error::NotUnderdamped { zeta });
        }
    }
    let omegas = truth.natural_frequencies_rad();
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("rigid-body mode has no static step response".into()));
    }
    let g = truth.mode_matrix.transpose() * &system.force_pattern;
    let mut z = DMatrix::zeros(n, times.len());
    for i in 0..n {
        let (w, zeta) = (omegas[i], truth.damping_ratios[i]);
        let wd = w * (1.0 - zeta * zeta).sqrt();
        for (j, &t) in times.iter().enumerate() {
            let (s, c) = (wd * t).sin_cos();
            let decay = (-zeta * w * t).exp();
            z[(i, j)] = g[i] / (w * w) * (1.0 - decay * (c + zeta * w / wd * s));
        }
    }
    Ok(&truth.mode_matrix * z)
}

/// Sample instants of the `chain6-paper` preset: 2 Hz over 0..=1000 s.
pub fn chain6_paper_times() -> Vec<f64> {
    (0..=2000).map(|j| j as f64 * 0.5).collect()
}

/// Snapshot matrix of the `chain6-paper` preset, offset included.
pub fn chain6_paper_snapshots() -> Result<(MdofSystem, ModalGroundTruth, SnapshotMatrix)> {
    let system = MdofSystem::chain6_paper();
    let truth = modal_ground_truth(&system)?;
    let times = chain6_paper_times();
    let x = mdof_step_response(&system, &truth, &times)?;
    let labels = (1..=6).map(|i| format!("x{i}")).collect();
    let snap = SnapshotMatrix::new(x, 0.5, labels, 0.0)?;
    Ok((system, truth, snap))
}

/// Receptance `H(w) = (K - w^2 M + j w C)^-1 f`, one column per frequency.
pub fn receptance_frf(system: &MdofSystem, frequencies_hz: &[f64]) -> Result<CMatrix> {
    let n = system.dof();
    let mut out = CMatrix::zeros(n, frequencies_hz.len());
    let f = system.force_pattern.map(|v| Complex64::new(v, 0.0));
    for (col, &fr) in frequencies_hz.iter().enumerate() {
        let w = 2.0 * PI * fr;
        let dyn_stiff = CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(
                system.stiffness_matrix[(i, j)] - w * w * system.mass_matrix[(i, j)],
                w * system.damping_matrix[(i, j)],
            )
        });
        let h = dyn_stiff
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::InvalidInput(format!("dynamic stiffness singular at {fr} Hz")))?;
        out.set_column(col, &h);
    }
    Ok(out)
}

/// One multiplicative noise draw: `x (1 + sigma delta)`.
pub fn perturb_sample(x: f64, sigma: f64, delta: f64) -> f64 {
    x * (1.0 + sigma * delta)
}

/// Multiplicative noise with `delta ~ U[-sqrt 3, sqrt 3]` (zero mean, unit variance),
/// drawn in column-major order from a ChaCha8 stream seeded with `seed`.
pub fn inject_noise(snap: &SnapshotMatrix, sigma: f64, seed: u64) -> Result<SnapshotMatrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("noise level must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(snap.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 3f64.sqrt();
    let dist = Uniform::new_inclusive(-half, half).expect("bounds are finite");
    let data = snap.data().map(|x| perturb_sample(x, sigma, dist.sample(&mut rng)));
    snap.with_data(data)
}

/// Clamped-free Euler-Bernoulli beam carrying a few decaying modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub length_m: f64,
    /// Measurement points, measured from the free end.
    pub positions_m: Vec<f64>,
    pub beta_l: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub sampling_rate_hz: f64,
    pub duration_s: f64,
}

impl BeamConfig {
    /// 1570 points along a 250 mm cantilever, first three bending modes,
    /// 480 frames per second for one second.
    pub fn synthetic_camera() -> Self {
        let n = 1570;
        let (a, b) = (15.64e-3, 204.2e-3);
        Self {
            length_m: 0.25,
            positions_m: (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            beta_l: vec![1.875_104_07, 4.694_091_13, 7.854_757_44],
            frequencies_hz: vec![5.91, 34.90, 97.13],
            damping_ratios: vec![0.046, 0.01429, 0.01181],
            amplitudes: vec![1.0e-3, 0.3e-3, 0.1e-3],
            sampling_rate_hz: 480.0,
            duration_s: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.beta_l.len();
        if k == 0 || self.frequencies_hz.len() != k || self.damping_ratios.len() != k || self.amplitudes.len() != k {
            return Err(Error::InvalidInput("beam mode tables must be nonempty and equally long".into()));
        }
        if self.positions_m.is_empty() || !(self.length_m > 0.0) {
            return Err(Error::InvalidInput("beam needs a positive length and at least one point".into()));
        }
        if self.positions_m.iter().any(|&p| !(0.0..=self.length_m).contains(&p)) {
            return Err(Error::InvalidInput("beam point outside the span".into()));
        }
        if !(self.sampling_rate_hz > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::InvalidInput("beam sampling rate and duration must be positive".into()));
        }
        if let Some(&z) = self.damping_ratios.iter().find(|&&z| !(0.0..1.0).contains(&z)) {
            return Err(Error::NotUnderdamped { zeta: z });
        }
        Ok(())
    }

    /// Mode shapes sampled at the measurement points, each scaled to unit peak.
    pub fn mode_shapes(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let mut shapes = DMatrix::zeros(self.positions_m.len(), self.beta_l.len());
        for (k, &bl) in self.beta_l.iter().enumerate() {
            let ratio = (bl.cosh() + bl.cos()) / (bl.sinh() + bl.sin());
            for (i, &p) in self.positions_m.iter().enumerate() {
                // distance from the clamp
                let u = bl * (self.length_m - p) / self.length_m;
                shapes[(i, k)] = u.cosh() - u.cos() - ratio * (u.sinh() - u.sin());
            }
            let peak = shapes.column(k).amax();
            shapes.column_mut(k).unscale_mut(peak);
        }
        Ok(shapes)
    }

    /// Noiseless displacement field: `sum_k A_k phi_k e^{-zeta w t} cos(w_d t)`.
    pub fn snapshots(&self) -> Result<SnapshotMatrix> {
        let shapes = self.mode_shapes()?;
        let dt = 1.0 / self.sampling_rate_hz;
        let n = (self.duration_s * self.sampling_rate_hz).round() as usize;
        if n < 4 {
            return Err(Error::InsufficientData { needed: 4, got: n });
        }
        let mut temporal = DMatrix::zeros(self.beta_l.len(), n);
        for k in 0..self.beta_l.len() {
            let w = 2.0 * PI * self.frequencies_hz[k];
            let zeta = self.damping_ratios[k];
            let wd = w * (1.0 - zeta * zeta).sqrt();
            for j in 0..n {
                let t = j as f64 * dt;
                temporal[(k, j)] = self.amplitudes[k] * (-zeta * w * t).exp() * (wd * t).cos();
            }
        }
        let labels = (1..=self.positions_m.len()).map(|i| format!("p{i}")).collect();
        SnapshotMatrix::new(shapes * temporal, dt, labels, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sdof_initial_condition() {
        let x = sdof_response(&SdofParams::paper(), &[0.0]).unwrap();
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn sdof_undamped_is_cosine() {
        let p = SdofParams { mass: 2.0, damping: 0.0, stiffness: 50.0, x0: 1.0, v0: 0.0 };
        let t: Vec<f64> = (0..50).map(|j| j as f64 * 0.037).collect();
        let x = sdof_response(&p, &t).unwrap();
        for (xi, ti) in x.iter().zip(&t) {
            assert_eq!(*xi, (5.0 * ti).cos());
        }
    }

    #[test]
    fn sdof_rejects_overdamping() {
        let p = SdofParams { mass: 1.0, damping: 3.0, stiffness: 1.0, x0: 1.0, v0: 0.0 };
        assert!(matches!(sdof_response(&p, &[0.0]), Err(Error::NotUnderdamped { .. })));
    }

    #[test]
    fn paper_sdof_parameters() {
        let p = SdofParams::paper();
        assert!((p.natural_frequency_hz() - 50.0).abs() < 1e-3);
        assert!((p.damping_ratio() - 0.01).abs() < 1e-6);
        let snap = sdof_paper_snapshots().unwrap();
        assert_eq!(snap.samples(), 1024);
        assert!((snap.dt() - 1.0 / 1023.0).abs() < 1e-15);
    }

    #[test]
    fn single_dof_chain() {
        let sys = MdofSystem::chain(&[1.0], &[1.0], 0.0, DVector::from_element(1, 1.0)).unwrap();
        let gt = modal_ground_truth(&sys).unwrap();
        assert!((gt.frequencies_hz[0] - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(gt.damping_ratios[0], 0.0);
    }

    #[test]
    fn non_proportional_damping_rejected() {
        let mut sys = MdofSystem::chain6_paper();
        sys.damping_matrix[(0, 0)] += 0.5;
        assert!(matches!(modal_ground_truth(&sys), Err(Error::UnsupportedDamping(_))));
    }

    #[test]
    fn chain6_table_values() {
        let gt = modal_ground_truth(&MdofSystem::chain6_paper()).unwrap();
        let f = [0.0384, 0.1129, 0.1808, 0.2383, 0.2818, 0.3091];
        let z = [1.2054e-3, 3.5460e-3, 5.6806e-3, 7.4851e-3, 8.8546e-3, 9.7094e-3];
        for i in 0..6 {
            assert!((gt.frequencies_hz[i] - f[i]).abs() < 5e-5, "{i}");
            assert!((gt.damping_ratios[i] - z[i]).abs() < 5e-8, "{i}: {}", gt.damping_ratios[i]);
        }
        let ortho = gt.mode_matrix.transpose() * &MdofSystem::chain6_paper().mass_matrix * &gt.mode_matrix;
        assert!((ortho - DMatrix::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn step_response_starts_at_rest_and_settles() {
        let sys = MdofSystem::chain6_paper();
        let gt = modal_ground_truth(&sys).unwrap();
        let x = mdof_step_response(&sys, &gt, &[0.0, 1e6]).unwrap();
        assert!(x.column(0).amax() < 1e-12);
        let stat = sys.stiffness_matrix.clone().lu().solve(&sys.force_pattern).unwrap();
        assert!((x.column(1) - stat).amax() < 1e-6);
    }

    #[test]
    fn receptance_at_zero_is_static_flexibility() {
        let sys = MdofSystem::chain6_paper();
        let h = receptance_frf(&sys, &[0.0]).unwrap();
        let stat = sys.stiffness_matrix.clone().lu().solve(&sys.force_pattern).unwrap();
        for i in 0..6 {
            assert!((h[(i, 0)].re - stat[i]).abs() < 1e-12 && h[(i, 0)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn noise_formula_and_identity() {
        assert!((perturb_sample(2.0, 1e-2, 0.5) - 2.01).abs() < 1e-15);
        let snap = sdof_paper_snapshots().unwrap();
        let same = inject_noise(&snap, 0.0, 3).unwrap();
        assert_eq!(same.data(), snap.data());
        let a = inject_noise(&snap, 1e-2, 7).unwrap();
        let b = inject_noise(&snap, 1e-2, 7).unwrap();
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), snap.data());
        assert!(inject_noise(&snap, -1.0, 0).is_err());
    }

    #[test]
    fn beam_shapes_vanish_at_clamp() {
        let mut cfg = BeamConfig::synthetic_camera();
        cfg.positions_m = vec![cfg.length_m, 0.0];
        let s = cfg.mode_shapes().unwrap();
        for k in 0..3 {
            assert!(s[(0, k)].abs() < 1e-9);
            assert!((s[(1, k)].abs() - 1.0).abs() < 1e-12);
        }
    }
}
