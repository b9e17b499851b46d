//! Dense linear-algebra kernels shared by every identification method.
//!
//! The SVD is delegated to `faer`; the general eigensolver is a complex
//! Hessenberg QR iteration with Wilkinson shifts followed by triangular
//! back-substitution for the eigenvectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rank selection applied to the singular values of a snapshot matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Truncation {
    /// Keep the numerical rank: `sigma_i / sigma_1 > eps * max(m, n)`.
    FullRank,
    /// Keep the `k` largest singular values (clamped to the numerical rank).
    FixedRank(usize),
    /// Keep `sigma_i` with `sigma_i / sigma_1 > tau`, `tau` in (0, 1).
    RelativeThreshold(f64),
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Truncation::FullRank => Ok(()),
            Truncation::FixedRank(0) => Err(Error::OverTruncation),
            Truncation::FixedRank(_) => Ok(()),
            Truncation::RelativeThreshold(tau) if tau > 0.0 && tau < 1.0 => Ok(()),
            Truncation::RelativeThreshold(tau) => {
                Err(Error::InvalidInput(format!("relative threshold must lie in (0, 1), got {tau}")))
            }
        }
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncation::FullRank => write!(f, "full"),
            Truncation::FixedRank(k) => write!(f, "rank:{k}"),
            Truncation::RelativeThreshold(tau) => write!(f, "rel:{tau:e}"),
        }
    }
}

impl std::str::FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognised truncation '{s}' (expected full, rank:K or rel:TAU)"));
        let policy = if s == "full" {
            Truncation::FullRank
        } else if let Some(k) = s.strip_prefix("rank:") {
            Truncation::FixedRank(k.parse().map_err(|_| bad())?)
        } else if let Some(tau) = s.strip_prefix("rel:") {
            Truncation::RelativeThreshold(tau.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// m x r, orthonormal columns.
    pub left_vectors: CMatrix,
    /// Length r, descending, strictly positive.
    pub singular_values: Vec<f64>,
    /// n x r, orthonormal columns.
    pub right_vectors: CMatrix,
    /// Fraction of the total squared singular values that was dropped.
    pub discarded_energy: f64,
    /// Every singular value of the input, including discarded ones.
    pub all_singular_values: Vec<f64>,
    /// Set when a fixed rank was requested above the numerical rank.
    pub rank_clamped: bool,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U * Sigma * V^*`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.left_vectors.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.right_vectors.adjoint()
    }
}

fn is_real(matrix: &CMatrix) -> bool {
    matrix.iter().all(|z| z.im == 0.0)
}

fn check_finite(matrix: &CMatrix) -> Result<()> {
    if matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix contains non-finite entries".into()))
    }
}

pub fn to_complex(matrix: &DMatrix<f64>) -> CMatrix {
    matrix.map(|x| Complex64::new(x, 0.0))
}

/// Thin SVD with rank selection. Real-valued input takes a real-arithmetic path.
pub fn svd_truncate(matrix: &CMatrix, policy: Truncation) -> Result<TruncatedSvd> {
    let (m, n) = matrix.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    check_finite(matrix)?;
    policy.validate()?;

    let (u, sigma, v) = if is_real(matrix) {
        let re = faer::Mat::<f64>::from_fn(m, n, |i, j| matrix[(i, j)].re);
        let svd = re.thin_svd().map_err(|e| Error::NoConvergence(format!("real SVD: {e:?}")))?;
        let k = m.min(n);
        let u = CMatrix::from_fn(m, k, |i, j| Complex64::new(svd.U()[(i, j)], 0.0));
        let v = CMatrix::from_fn(n, k, |i, j| Complex64::new(svd.V()[(i, j)], 0.0));
        let sigma = (0..k).map(|i| svd.S().column_vector()[i]).collect::<Vec<_>>();
        (u, sigma, v)
    } else {
        let cm = faer::Mat::<faer::c64>::from_fn(m, n, |i, j| {
            let z = matrix[(i, j)];
            faer::c64::new(z.re, z.im)
        });
        let svd = cm.thin_svd().map_err(|e| Error::NoConvergence(format!("complex SVD: {e:?}")))?;
        let k = m.min(n);
        let u = CMatrix::from_fn(m, k, |i, j| {
            let z = svd.U()[(i, j)];
            Complex64::new(z.re, z.im)
        });
        let v = CMatrix::from_fn(n, k, |i, j| {
            let z = svd.V()[(i, j)];
            Complex64::new(z.re, z.im)
        });
        let sigma = (0..k).map(|i| svd.S().column_vector()[i].re).collect::<Vec<_>>();
        (u, sigma, v)
    };

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if sigma_max <= 0.0 {
        return Err(Error::NoSignal("all-zero matrix".into()));
    }
    let cutoff = f64::EPSILON * m.max(n) as f64;
    let numerical_rank = sigma.iter().take_while(|&&s| s / sigma_max > cutoff).count();

    let (rank, rank_clamped) = match policy {
        Truncation::FullRank => (numerical_rank, false),
        Truncation::FixedRank(k) => (k.min(numerical_rank), k > numerical_rank),
        Truncation::RelativeThreshold(tau) => {
            (sigma.iter().take_while(|&&s| s / sigma_max > tau).count().min(numerical_rank), false)
        }
    };
    if rank == 0 {
        return Err(Error::OverTruncation);
    }

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let kept: f64 = sigma[..rank].iter().map(|s| s * s).sum();
    let discarded_energy = ((total - kept) / total).clamp(0.0, 1.0);

    Ok(TruncatedSvd {
        left_vectors: u.columns(0, rank).into_owned(),
        singular_values: sigma[..rank].to_vec(),
        right_vectors: v.columns(0, rank).into_owned(),
        discarded_energy,
        all_singular_values: sigma,
        rank_clamped,
    })
}

/// `V * Sigma^-1 * U^*`.
pub fn pseudo_inverse(svd: &TruncatedSvd) -> CMatrix {
    let mut v_scaled = svd.right_vectors.clone();
    for (j, &s) in svd.singular_values.iter().enumerate() {
        v_scaled.column_mut(j).unscale_mut(s);
    }
    v_scaled * svd.left_vectors.adjoint()
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    /// Columns are unit-norm eigenvectors, phase-fixed.
    pub vectors: CMatrix,
}

/// Scale `v` to unit norm and rotate it so the largest-magnitude entry is real-positive.
pub fn normalize_phase(v: &mut CVector) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let mut pivot = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best {
            best = a;
            pivot = i;
        }
    }
    let phase = v[pivot] / v[pivot].norm();
    let scale = phase.conj() / norm;
    v.apply(|z| *z *= scale);
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

/// All eigenpairs of a general square matrix, ordered by descending modulus
/// with ties broken by ascending argument.
pub fn eig_general(matrix: &CMatrix) -> Result<EigenPairs> {
    let (p, q) = matrix.shape();
    if p != q {
        return Err(Error::InvalidInput(format!("eig_general needs a square matrix, got {p}x{q}")));
    }
    check_finite(matrix)?;
    if p == 0 {
        return Ok(EigenPairs { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let real_input = is_real(matrix);

    let mut a = matrix.clone();
    let scaling = balance(&mut a);
    let mut z = CMatrix::identity(p, p);
    hessenberg_reduce(&mut a, &mut z);
    schur_qr(&mut a, &mut z)?;
    let mut vectors = triangular_eigenvectors(&a);
    vectors = z * vectors;
    for (i, &d) in scaling.iter().enumerate() {
        vectors.row_mut(i).scale_mut(d);
    }

    let mut values: Vec<Complex64> = (0..p).map(|i| a[(i, i)]).collect();
    let mut cols: Vec<CVector> = (0..p).map(|j| vectors.column(j).into_owned()).collect();
    for c in cols.iter_mut() {
        normalize_phase(c);
    }

    if real_input {
        pair_conjugates(matrix, &mut values, &mut cols);
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        values[j].norm().total_cmp(&values[i].norm()).then(values[i].arg().total_cmp(&values[j].arg()))
    });
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = CMatrix::from_columns(&order.iter().map(|&i| cols[i].clone()).collect::<Vec<_>>());
    Ok(EigenPairs { values: sorted_values, vectors: sorted_vectors })
}

fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Snap nearly-real eigenvalues onto the real axis and make complex pairs exact conjugates.
fn pair_conjugates(matrix: &CMatrix, values: &mut [Complex64], vectors: &mut [CVector]) {
    let p = values.len();
    let tol = 100.0 * p as f64 * f64::EPSILON * frobenius(matrix).max(f64::MIN_POSITIVE);
    let mut used = vec![false; p];
    for i in 0..p {
        if values[i].im.abs() <= tol {
            values[i].im = 0.0;
            vectors[i].apply(|z| z.im = 0.0);
            normalize_phase(&mut vectors[i]);
            used[i] = true;
        }
    }
    let mut positives: Vec<usize> = (0..p).filter(|&i| !used[i] && values[i].im > 0.0).collect();
    positives.sort_by(|&i, &j| values[j].im.total_cmp(&values[i].im));
    for i in positives {
        let target = values[i].conj();
        let partner = (0..p)
            .filter(|&j| !used[j] && j != i && values[j].im < 0.0)
            .min_by(|&a, &b| (values[a] - target).norm().total_cmp(&(values[b] - target).norm()));
        used[i] = true;
        if let Some(j) = partner {
            values[j] = target;
            vectors[j] = vectors[i].map(|z| z.conj());
            used[j] = true;
        }
    }
}

/// Diagonal similarity scaling by powers of two; returns the scaling vector `d`
/// such that the balanced matrix is `D^-1 A D`.
fn balance(a: &mut CMatrix) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    let radix = 2.0_f64;
    let l1 = |z: &Complex64| z.re.abs() + z.im.abs();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += l1(&a[(j, i)]);
                    r += l1(&a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form, accumulating into `z`.
fn hessenberg_reduce(a: &mut CMatrix, z: &mut CMatrix) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let alpha = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let mut v = x.clone();
        v[0] += phase * alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // H = I - 2 v v^*, applied on the left to rows k+1.. and on the right to columns k+1..
        for j in 0..n {
            let mut dot = ZERO;
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[(k + 1 + t, j)];
            }
            dot *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vi * dot;
            }
        }
        for mat in [&mut *a, &mut *z] {
            for i in 0..n {
                let mut dot = ZERO;
                for (t, vi) in v.iter().enumerate() {
                    dot += mat[(i, k + 1 + t)] * vi;
                }
                dot *= 2.0;
                for (t, vi) in v.iter().enumerate() {
                    mat[(i, k + 1 + t)] -= dot * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `[c s; -conj(s) c]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// Complex single-shift QR on an upper Hessenberg matrix, reducing it to upper
/// triangular Schur form `T` with `A = Z T Z^*`.
fn schur_qr(h: &mut CMatrix, z: &mut CMatrix) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let norm = frobenius(h).max(f64::MIN_POSITIVE);
    let max_iter = 60 * n.max(10);
    let mut total_iter = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if scale == 0.0 {
                scale = norm;
            }
            if sub <= eps * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total_iter += 1;
        since_deflation += 1;
        if total_iter > max_iter {
            return Err(Error::NoConvergence(format!("QR iteration exceeded {max_iter} sweeps")));
        }

        let shift = if since_deflation % 11 == 0 {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { k };
            for j in col_start..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            for i in 0..n {
                let a = z[(i, k)];
                let b = z[(i, k + 1)];
                z[(i, k)] = a * c + b * s.conj();
                z[(i, k + 1)] = -a * s + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let r1 = mean + disc;
    let r2 = mean - disc;
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Eigenvectors of an upper triangular matrix by back-substitution.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let small = f64::EPSILON * frobenius(t).max(f64::MIN_POSITIVE);
    let mut vecs = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![ZERO; k + 1];
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut acc = ZERO;
            for l in j + 1..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[j] = -acc / denom;
            let big = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if big > 1e150 {
                for v in y.iter_mut() {
                    *v /= big;
                }
            }
        }
        for (i, v) in y.into_iter().enumerate() {
            vecs[(i, k)] = v;
        }
    }
    vecs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_real(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn max_abs(a: &CMatrix) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_full_rank() {
        let svd = svd_truncate(&CMatrix::identity(3, 3), Truncation::FullRank).unwrap();
        assert_eq!(svd.singular_values.len(), 3);
        for s in &svd.singular_values {
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(svd.discarded_energy, 0.0);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]);
        let x = to_complex(&(u * v.transpose()));
        let svd = svd_truncate(&x, Truncation::RelativeThreshold(1e-8)).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.singular_values[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_reference_spectrum() {
        let a = random_real(6, 100, 11);
        let svd = svd_truncate(&to_complex(&a), Truncation::FullRank).unwrap();
        assert_eq!(svd.rank(), 6);
        let err = max_abs(&(svd.reconstruct() - to_complex(&a)));
        assert!(err < 1e-10, "reconstruction error {err}");
        // independent reference: eigenvalues of the Gram matrix A A^T
        let gram = &a * a.transpose();
        let mut reference: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|l| l.sqrt()).collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (s, r) in svd.singular_values.iter().zip(&reference) {
            assert!((s - r).abs() < 1e-10 * r, "{s} vs {r}");
        }
        let eye = svd.left_vectors.adjoint() * &svd.left_vectors - CMatrix::identity(6, 6);
        assert!(max_abs(&eye) < 1e-10);
        let eye = svd.right_vectors.adjoint() * &svd.right_vectors - CMatrix::identity(6, 6);
        assert!(max_abs(&eye) < 1e-10);
    }

    #[test]
    fn complex_input_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CMatrix::from_fn(5, 7, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let svd = svd_truncate(&x, Truncation::FullRank).unwrap();
        let err = max_abs(&(svd.reconstruct() - &x));
        assert!(err < 7.0 * svd.singular_values[0] * 1e-12, "{err}");
    }

    #[test]
    fn zero_matrix_is_no_signal() {
        let err = svd_truncate(&CMatrix::zeros(3, 4), Truncation::FullRank).unwrap_err();
        assert!(matches!(err, Error::NoSignal(_)));
    }

    #[test]
    fn fixed_rank_is_clamped() {
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let v = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let x = to_complex(&(u * v.transpose()));
        let svd = svd_truncate(&x, Truncation::FixedRank(2)).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!(svd.rank_clamped);
    }

    #[test]
    fn truncation_parse_roundtrip() {
        for s in ["full", "rank:4", "rel:1e-10"] {
            let t: Truncation = s.parse().unwrap();
            let back: Truncation = t.to_string().parse().unwrap();
            assert_eq!(t, back);
        }
        assert!("rel:1.5".parse::<Truncation>().is_err());
        assert!("rank:0".parse::<Truncation>().is_err());
        assert!("bogus".parse::<Truncation>().is_err());
    }

    #[test]
    fn diagonal_eigenvalues() {
        let a = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
        let eig = eig_general(&a).unwrap();
        assert_eq!(eig.values, vec![c(3.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn rotation_spectrum() {
        let th: f64 = 0.3;
        let a = to_complex(&DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]));
        let eig = eig_general(&a).unwrap();
        // equal modulus, ascending argument
        assert!((eig.values[0] - c(th.cos(), -th.sin())).norm() < 1e-14);
        assert!((eig.values[1] - c(th.cos(), th.sin())).norm() < 1e-14);
        assert_eq!(eig.values[0], eig.values[1].conj());
    }

    #[test]
    fn eigen_residuals_and_norms() {
        let a = to_complex(&random_real(9, 9, 3));
        let eig = eig_general(&a).unwrap();
        let anorm = frobenius(&a);
        for (k, lambda) in eig.values.iter().enumerate() {
            let w = eig.vectors.column(k);
            assert!((w.norm() - 1.0).abs() < 1e-12);
            let r = (&a * w - w * *lambda).norm();
            assert!(r <= 9.0 * anorm * 1e-10, "residual {r}");
        }
    }

    #[test]
    fn complex_matrix_eigenpairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = CMatrix::from_fn(12, 12, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let eig = eig_general(&a).unwrap();
        let anorm = frobenius(&a);
        for (k, lambda) in eig.values.iter().enumerate() {
            let w = eig.vectors.column(k);
            let r = (&a * w - w * *lambda).norm();
            assert!(r <= 12.0 * anorm * 1e-10, "residual {r}");
        }
        for pair in eig.values.windows(2) {
            assert!(pair[0].norm() >= pair[1].norm());
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(eig_general(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn defective_jordan_block() {
        let a = to_complex(&DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]));
        let eig = eig_general(&a).unwrap();
        for v in &eig.values {
            assert!((v - c(1.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn pseudo_inverse_examples() {
        let eye = CMatrix::identity(3, 3);
        let pinv = pseudo_inverse(&svd_truncate(&eye, Truncation::FullRank).unwrap());
        assert!(max_abs(&(pinv - &eye)) < 1e-15);

        let d = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0])));
        let pinv = pseudo_inverse(&svd_truncate(&d, Truncation::FullRank).unwrap());
        let expected = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25])));
        assert!(max_abs(&(pinv - expected)) < 1e-15);
    }

    #[test]
    fn pseudo_inverse_left_inverse_and_penrose() {
        let x = to_complex(&random_real(8, 3, 23));
        let pinv = pseudo_inverse(&svd_truncate(&x, Truncation::FullRank).unwrap());
        assert!(max_abs(&(&pinv * &x - CMatrix::identity(3, 3))) < 1e-9);
        let back = &x * &pinv * &x;
        assert!(max_abs(&(back - &x)) < 1e-9 * max_abs(&x));
    }

    #[test]
    fn square_inverse_via_svd() {
        let a = random_real(5, 5, 99);
        let inv = a.clone().try_inverse().unwrap();
        let pinv = pseudo_inverse(&svd_truncate(&to_complex(&a), Truncation::FullRank).unwrap());
        let diff = (pinv - to_complex(&inv)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-8 * inv.norm());
    }
}
