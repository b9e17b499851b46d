//! Ibrahim time domain method.
//!
//! Free responses are stacked into two time shifts, `X = [x_k; x_{k+1}]` and
//! `X~ = [x_{k+1}; x_{k+2}]`, and the propagator `A = X~ X^T (X X^T)^-1` is
//! eigendecomposed directly. The normal-equation inverse is kept on purpose:
//! it is the classical formulation and squares the condition number of `X`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dmd::discrete_to_continuous;
use crate::error::{Error, Result};
use crate::numkit::{self, normalize_phase, CMatrix, CVector};
use crate::snapshots::{build_pair, SnapshotMatrix};

/// `X X^T` is treated as singular below this reciprocal condition number.
pub const GRAM_RCOND_LIMIT: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ItdResult {
    pub discrete_eigs: Vec<Complex64>,
    pub continuous_eigs: Vec<Complex64>,
    /// Full 2m-long eigenvectors of the propagator, one per column.
    pub eigenvectors: CMatrix,
    /// First m rows of each eigenvector, unit-norm and phase-fixed.
    pub modes: CMatrix,
    pub frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<Option<f64>>,
    pub dt: f64,
    /// Reciprocal condition number of `X X^T`.
    pub gram_rcond: f64,
}

impl ItdResult {
    pub fn channels(&self) -> usize {
        self.modes.nrows()
    }
}

pub fn itd_extract(snap: &SnapshotMatrix) -> Result<ItdResult> {
    let m = snap.channels();
    let pair = build_pair(snap, true)?;
    if snap.data().iter().all(|v| *v == 0.0) {
        return Err(Error::NoSignal("all samples are zero".into()));
    }

    let gram = &pair.x * pair.x.transpose();
    let spectrum = SymmetricEigen::new(gram.clone()).eigenvalues;
    let lmax = spectrum.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let lmin = spectrum.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let rcond = if lmax > 0.0 { lmin / lmax } else { 0.0 };
    if !(rcond > GRAM_RCOND_LIMIT) {
        return Err(Error::RankDeficient(format!(
            "X X^T has reciprocal condition {rcond:.3e}; use DMD with a truncation policy instead"
        )));
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::RankDeficient("X X^T is not positive definite; use DMD with a truncation policy instead".into())
    })?;
    // A^T = (X X^T)^-1 X X~^T
    let a: DMatrix<f64> = chol.solve(&(&pair.x * pair.y.transpose())).transpose();

    let eig = numkit::eig_general(&numkit::to_complex(&a))?;
    let mut poles = Vec::with_capacity(eig.values.len());
    for &mu in &eig.values {
        poles.push(discrete_to_continuous(mu, snap.dt())?);
    }
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&a, &b| {
        poles[a].frequency_hz.total_cmp(&poles[b].frequency_hz).then(poles[b].s.im.total_cmp(&poles[a].s.im))
    });

    let eigenvectors = CMatrix::from_fn(2 * m, order.len(), |i, j| eig.vectors[(i, order[j])]);
    let mut modes = CMatrix::zeros(m, order.len());
    for j in 0..order.len() {
        let mut phi: CVector = eigenvectors.view((0, j), (m, 1)).column(0).into_owned();
        normalize_phase(&mut phi);
        modes.set_column(j, &phi);
    }

    Ok(ItdResult {
        discrete_eigs: order.iter().map(|&i| eig.values[i]).collect(),
        continuous_eigs: order.iter().map(|&i| poles[i].s).collect(),
        eigenvectors,
        modes,
        frequencies_hz: order.iter().map(|&i| poles[i].frequency_hz).collect(),
        damping_ratios: order.iter().map(|&i| poles[i].damping_ratio).collect(),
        dt: snap.dt(),
        gram_rcond: rcond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tone(n: usize) -> SnapshotMatrix {
        let dt = 0.01;
        let data = DMatrix::from_fn(1, n, |_, j| {
            let t = j as f64 * dt;
            (-0.4 * t).exp() * (2.0 * std::f64::consts::PI * 4.0 * t).cos()
        });
        SnapshotMatrix::from_data(data, dt).unwrap()
    }

    #[test]
    fn single_channel_damped_cosine() {
        let res = itd_extract(&two_tone(200)).unwrap();
        assert_eq!(res.discrete_eigs.len(), 2);
        let wn = ((2.0 * std::f64::consts::PI * 4.0f64).powi(2) + 0.16).sqrt();
        for f in &res.frequencies_hz {
            assert!((f - wn / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
        }
        assert!((res.discrete_eigs[0] - res.discrete_eigs[1].conj()).norm() < 1e-12);
    }

    #[test]
    fn geometric_offset_series() {
        // x_j = 1 + 0.5^j: a fixed point plus a decaying real mode
        let data = DMatrix::from_fn(1, 12, |_, j| 1.0 + 0.5f64.powi(j as i32));
        let snap = SnapshotMatrix::from_data(data, 0.1).unwrap();
        let res = itd_extract(&snap).unwrap();
        let mut mus: Vec<f64> = res.discrete_eigs.iter().map(|z| z.re).collect();
        mus.sort_by(f64::total_cmp);
        assert!((mus[0] - 0.5).abs() < 1e-10 && (mus[1] - 1.0).abs() < 1e-10, "{mus:?}");
        assert!(res.discrete_eigs.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn constant_series_is_rank_deficient() {
        let data = DMatrix::from_element(2, 10, 3.0);
        let snap = SnapshotMatrix::from_data(data, 0.1).unwrap();
        assert!(matches!(itd_extract(&snap), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn too_short_series() {
        let snap = SnapshotMatrix::from_data(DMatrix::from_element(1, 3, 1.0), 0.1).unwrap();
        assert!(matches!(itd_extract(&snap), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn zero_series_has_no_signal() {
        let snap = SnapshotMatrix::from_data(DMatrix::zeros(1, 10), 0.1).unwrap();
        assert!(matches!(itd_extract(&snap), Err(Error::NoSignal(_))));
    }
}
