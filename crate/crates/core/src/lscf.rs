//! Least-squares complex-frequency-domain fitting.
//!
//! FRFs are modelled as `H_o(w) = B_o(w) / A(w)` with a common denominator
//! `A(w) = sum_p a_p Omega^p`, `Omega = exp(-j w Ts)`. The numerators are
//! eliminated from the normal equations, leaving `M a = 0` with the highest
//! coefficient pinned to one; the poles are the roots of `A`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::{PoleCluster, StabilitySweep, SweepAxis, SweepPole, SweepStep};
use crate::numkit::{self, CMatrix};
use crate::snapshots::SnapshotMatrix;
use crate::synth::{receptance_frf, MdofSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct FrfSet {
    pub frequencies_hz: Vec<f64>,
    /// outputs x lines.
    pub responses: CMatrix,
    /// outputs x lines, in `[0, 1]`.
    pub weights: DMatrix<f64>,
    pub sampling_period: f64,
    pub channel_labels: Vec<String>,
}

impl FrfSet {
    pub fn new(
        frequencies_hz: Vec<f64>,
        responses: CMatrix,
        weights: DMatrix<f64>,
        sampling_period: f64,
        channel_labels: Vec<String>,
    ) -> Result<Self> {
        let nf = frequencies_hz.len();
        if nf == 0 {
            return Err(Error::InvalidInput("FRF has no frequency lines".into()));
        }
        if frequencies_hz.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("FRF frequencies must be strictly ascending".into()));
        }
        if responses.ncols() != nf || weights.shape() != responses.shape() {
            return Err(Error::InvalidInput("FRF responses and weights must be outputs x lines".into()));
        }
        if channel_labels.len() != responses.nrows() {
            return Err(Error::InvalidInput("one label per FRF output required".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) || responses.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("FRF contains non-finite values".into()));
        }
        if !(sampling_period > 0.0) {
            return Err(Error::InvalidInput("sampling period must be positive".into()));
        }
        Ok(Self { frequencies_hz, responses, weights, sampling_period, channel_labels })
    }

    /// Unit weights on every line.
    pub fn unweighted(frequencies_hz: Vec<f64>, responses: CMatrix, sampling_period: f64) -> Result<Self> {
        let weights = DMatrix::from_element(responses.nrows(), responses.ncols(), 1.0);
        let labels = (1..=responses.nrows()).map(|i| format!("h{i}")).collect();
        Self::new(frequencies_hz, responses, weights, sampling_period, labels)
    }

    pub fn outputs(&self) -> usize {
        self.responses.nrows()
    }

    pub fn lines(&self) -> usize {
        self.frequencies_hz.len()
    }

    /// Columns `freq_hz, <label>_re, <label>_im, <label>_weight, ...`.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        writeln!(out, "# sampling_period_s={:e}", self.sampling_period)?;
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::from("freq_hz")];
        for l in &self.channel_labels {
            header.extend([format!("{l}_re"), format!("{l}_im"), format!("{l}_weight")]);
        }
        w.write_record(&header)?;
        for (k, f) in self.frequencies_hz.iter().enumerate() {
            let mut rec = vec![format!("{f:e}")];
            for o in 0..self.outputs() {
                let z = self.responses[(o, k)];
                rec.extend([format!("{:e}", z.re), format!("{:e}", z.im), format!("{:e}", self.weights[(o, k)])]);
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let period = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .find_map(|l| l.trim().strip_prefix("sampling_period_s=").map(str::to_owned))
            .ok_or_else(|| Error::InvalidInput("FRF file lacks '# sampling_period_s=' metadata".into()))?;
        let sampling_period: f64 =
            period.trim().parse().map_err(|_| Error::InvalidInput(format!("bad sampling period '{period}'")))?;

        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.len() < 4 || (header.len() - 1) % 3 != 0 || &header[0] != "freq_hz" {
            return Err(Error::InvalidInput("FRF header must be freq_hz followed by re/im/weight triples".into()));
        }
        let outputs = (header.len() - 1) / 3;
        let labels: Vec<String> = (0..outputs).map(|o| header[1 + 3 * o].trim_end_matches("_re").to_owned()).collect();
        let mut freqs = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let vals = rec
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::InvalidData {
                        row,
                        column: header.get(c).unwrap_or("?").to_owned(),
                        reason: format!("'{cell}' is not a finite number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            freqs.push(vals[0]);
            cols.push(vals[1..].to_vec());
        }
        let nf = freqs.len();
        let responses = CMatrix::from_fn(outputs, nf, |o, k| Complex64::new(cols[k][3 * o], cols[k][3 * o + 1]));
        let weights = DMatrix::from_fn(outputs, nf, |o, k| cols[k][3 * o + 2]);
        Self::new(freqs, responses, weights, sampling_period, labels)
    }
}

/// Exact receptance FRFs of a system on a frequency grid, unit weights.
pub fn analytic_frf(system: &MdofSystem, frequencies_hz: Vec<f64>, sampling_period: f64) -> Result<FrfSet> {
    let h = receptance_frf(system, &frequencies_hz)?;
    let weights = DMatrix::from_element(h.nrows(), h.ncols(), 1.0);
    let labels = (1..=h.nrows()).map(|i| format!("x{i}")).collect();
    FrfSet::new(frequencies_hz, h, weights, sampling_period, labels)
}

/// `n` lines at `k * df`, `k = 1..=n`.
pub fn uniform_grid(df: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 * df).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    /// Samples per segment; `None` uses the whole record.
    pub length: Option<usize>,
    /// Overlap between consecutive segments as a fraction in `[0, 1)`.
    pub overlap: f64,
    pub window: Window,
}

impl Default for SegmentSpec {
    fn default() -> Self {
        Self { length: None, overlap: 0.5, window: Window::Hann }
    }
}

/// H1 estimate `S_fx / S_ff` with spectra averaged over windowed segments.
/// Weights are the ordinary coherence when two or more segments are averaged.
pub fn estimate_frf(force: &SnapshotMatrix, response: &SnapshotMatrix, spec: &SegmentSpec) -> Result<FrfSet> {
    if force.channels() != 1 {
        return Err(Error::IncompatibleRecords(format!("force must have one channel, got {}", force.channels())));
    }
    let rel = (force.dt() - response.dt()).abs() / force.dt();
    if rel > 1e-9 {
        return Err(Error::IncompatibleRecords(format!(
            "sampling intervals differ: {} s and {} s",
            force.dt(),
            response.dt()
        )));
    }
    let n = force.samples();
    if response.samples() != n {
        return Err(Error::IncompatibleRecords(format!("record lengths differ: {} and {}", n, response.samples())));
    }
    let len = spec.length.unwrap_or(n);
    if len > n {
        return Err(Error::Segmentation(format!("segment of {len} samples exceeds the {n}-sample record")));
    }
    if len < 2 {
        return Err(Error::Segmentation("segments need at least two samples".into()));
    }
    if !(0.0..1.0).contains(&spec.overlap) {
        return Err(Error::Segmentation(format!("overlap {} outside [0, 1)", spec.overlap)));
    }
    let hop = ((len as f64) * (1.0 - spec.overlap)).round().max(1.0) as usize;
    let starts: Vec<usize> = (0..).map(|i| i * hop).take_while(|s| s + len <= n).collect();

    let win = spec.window.coefficients(len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let lines = len / 2 + 1;
    let m = response.channels();
    let mut sff = vec![0.0; lines];
    let mut sfx = CMatrix::zeros(m, lines);
    let mut sxx = DMatrix::<f64>::zeros(m, lines);

    let spectrum = |row: nalgebra::RowDVector<f64>, start: usize| {
        let mut buf: Vec<Complex64> = (0..len).map(|i| Complex64::new(row[start + i] * win[i], 0.0)).collect();
        fft.process(&mut buf);
        buf.truncate(lines);
        buf
    };
    for &s in &starts {
        let f = spectrum(force.data().row(0).into_owned(), s);
        for k in 0..lines {
            sff[k] += f[k].norm_sqr();
        }
        for o in 0..m {
            let x = spectrum(response.data().row(o).into_owned(), s);
            for k in 0..lines {
                sfx[(o, k)] += f[k].conj() * x[k];
                sxx[(o, k)] += x[k].norm_sqr();
            }
        }
    }

    let averaged = starts.len() >= 2;
    let mut h = CMatrix::zeros(m, lines);
    let mut weights = DMatrix::zeros(m, lines);
    for o in 0..m {
        for k in 0..lines {
            if sff[k] > 0.0 {
                h[(o, k)] = sfx[(o, k)] / sff[k];
                weights[(o, k)] = if !averaged {
                    1.0
                } else if sxx[(o, k)] > 0.0 {
                    (sfx[(o, k)].norm_sqr() / (sff[k] * sxx[(o, k)])).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }
    let df = 1.0 / (len as f64 * force.dt());
    FrfSet::new((0..lines).map(|k| k as f64 * df).collect(), h, weights, force.dt(), response.channel_labels().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LscfPole {
    pub s: Complex64,
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    /// `Re(s) <= 0`.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LscfPoleSet {
    pub order: usize,
    /// Positive-frequency members only, ascending frequency.
    pub poles: Vec<LscfPole>,
}

/// Toeplitz generators of the per-output normal-equation blocks, one entry
/// per lag `d = p - q` in `-n..=n`.
struct Generators {
    r: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    max_order: usize,
}

impl Generators {
    fn new(frf: &FrfSet, max_order: usize) -> Self {
        let ts = frf.sampling_period;
        let lags = 2 * max_order + 1;
        let mut r = vec![vec![0.0; lags]; frf.outputs()];
        let mut s = vec![vec![0.0; lags]; frf.outputs()];
        let mut t = vec![vec![0.0; lags]; frf.outputs()];
        for (k, &f) in frf.frequencies_hz.iter().enumerate() {
            let theta = 2.0 * PI * f * ts;
            for o in 0..frf.outputs() {
                let w2 = frf.weights[(o, k)].powi(2);
                if w2 == 0.0 {
                    continue;
                }
                let hk = frf.responses[(o, k)];
                for (idx, lag) in (-(max_order as i64)..=max_order as i64).enumerate() {
                    let e = Complex64::from_polar(1.0, lag as f64 * theta);
                    r[o][idx] += w2 * e.re;
                    s[o][idx] -= w2 * (hk * e).re;
                    t[o][idx] += w2 * hk.norm_sqr() * e.re;
                }
            }
        }
        Self { r, s, t, max_order }
    }

    fn block(&self, gen: &[f64], order: usize) -> DMatrix<f64> {
        let n = order + 1;
        DMatrix::from_fn(n, n, |p, q| gen[(self.max_order as i64 + p as i64 - q as i64) as usize])
    }
}

fn reduced_normal_matrix(gens: &Generators, order: usize) -> Result<DMatrix<f64>> {
    let n = order + 1;
    let mut m = DMatrix::zeros(n, n);
    for o in 0..gens.r.len() {
        let r = gens.block(&gens.r[o], order);
        let s = gens.block(&gens.s[o], order);
        let t = gens.block(&gens.t[o], order);
        let chol = r.cholesky().ok_or_else(|| Error::IllConditionedFit {
            order,
            reason: format!("numerator block of output {o} is not positive definite"),
        })?;
        m += t - s.transpose() * chol.solve(&s);
    }
    Ok(m)
}

fn fit_with(gens: &Generators, frf: &FrfSet, order: usize) -> Result<LscfPoleSet> {
    let m = reduced_normal_matrix(gens, order)?;
    let n = order;
    let lhs = m.view((0, 0), (n, n)).into_owned();
    let rhs = -m.view((0, n), (n, 1)).column(0).into_owned();
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditionedFit { order, reason: "reduced normal equations are singular".into() })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditionedFit { order, reason: "non-finite denominator coefficients".into() });
    }
    let mut a = DVector::zeros(n + 1);
    a.rows_mut(0, n).copy_from(&sol);
    a[n] = 1.0;
    if a[0] == 0.0 {
        return Ok(LscfPoleSet { order, poles: Vec::new() });
    }

    // A(z) = z^-N sum_p a_p z^(N-p): companion matrix of the monic a_0..a_N polynomial
    let mut comp = CMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = Complex64::new(-a[j + 1] / a[0], 0.0);
    }
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let roots = numkit::eig_general(&comp)?.values;

    let ts = frf.sampling_period;
    let f_lo = frf.frequencies_hz[0];
    let f_hi = frf.frequencies_hz[frf.lines() - 1];
    let mut poles: Vec<LscfPole> = roots
        .into_iter()
        .filter(|z| z.norm() > 1e-8 && z.norm() <= 1.0 + 1e-6)
        .filter_map(|z| {
            let s = z.ln() / ts;
            if !(s.im > 0.0) {
                return None;
            }
            let mag = s.norm();
            let zeta = -s.re / mag;
            let f = mag / (2.0 * PI);
            (zeta <= 0.5 && f >= f_lo && f <= f_hi).then_some(LscfPole {
                s,
                frequency_hz: f,
                damping_ratio: zeta,
                stable: s.re <= 0.0,
            })
        })
        .collect();
    poles.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    Ok(LscfPoleSet { order, poles })
}

fn check_order(frf: &FrfSet, order: usize) -> Result<()> {
    if order < 1 {
        return Err(Error::InvalidInput("LSCF order must be at least 1".into()));
    }
    if frf.lines() <= 2 * (order + 1) {
        return Err(Error::IllConditionedFit {
            order,
            reason: format!("{} frequency lines cannot support order {order}", frf.lines()),
        });
    }
    Ok(())
}

/// Poles of the order-`order` common-denominator model, filtered to the
/// physical annulus, positive frequencies, `zeta <= 0.5`, and the fitted band.
pub fn lscf_fit(frf: &FrfSet, order: usize) -> Result<LscfPoleSet> {
    check_order(frf, order)?;
    fit_with(&Generators::new(frf, order), frf, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizationConfig {
    /// Relative frequency tolerance between consecutive orders.
    pub threshold: f64,
    /// Consecutive orders a cluster must persist through to count as stable.
    pub min_run: usize,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        Self { threshold: 0.01, min_run: 5 }
    }
}

/// LSCF fits for orders `1..=max_order`. A pole is stable when the previous
/// order has a pole within `threshold`; stable poles are clustered by
/// frequency and a cluster is stable when it persists for `min_run`
/// consecutive orders.
pub fn stabilization_diagram(frf: &FrfSet, max_order: usize, config: &StabilizationConfig) -> Result<StabilitySweep> {
    if max_order < 2 {
        return Err(Error::InvalidInput("stabilization diagram needs max_order >= 2".into()));
    }
    check_order(frf, max_order)?;
    let gens = Generators::new(frf, max_order);
    let fits: Vec<LscfPoleSet> =
        (1..=max_order).into_par_iter().map(|order| fit_with(&gens, frf, order)).collect::<Result<Vec<_>>>()?;

    let mut steps: Vec<SweepStep> = fits
        .iter()
        .map(|fit| SweepStep {
            axis_value: fit.order as f64,
            poles: fit
                .poles
                .iter()
                .map(|p| SweepPole {
                    frequency_hz: p.frequency_hz,
                    damping_ratio: p.damping_ratio,
                    amplitude: None,
                    source: "lscf".into(),
                    mode: None,
                    stable: false,
                    cluster: None,
                })
                .collect(),
            failure: None,
        })
        .collect();
    for i in 1..steps.len() {
        let (prev, rest) = steps.split_at_mut(i);
        let prev = &prev[i - 1];
        for p in &mut rest[0].poles {
            p.stable =
                prev.poles.iter().any(|q| (q.frequency_hz - p.frequency_hz).abs() <= config.threshold * p.frequency_hz);
        }
    }

    // cluster stable poles only
    let stable_view: Vec<SweepStep> = steps
        .iter()
        .map(|s| SweepStep {
            axis_value: s.axis_value,
            poles: s.poles.iter().filter(|p| p.stable).cloned().collect(),
            failure: None,
        })
        .collect();
    let index_map: Vec<Vec<usize>> =
        steps.iter().map(|s| s.poles.iter().enumerate().filter(|(_, p)| p.stable).map(|(i, _)| i).collect()).collect();
    let groups = crate::modal::cluster_by_frequency(&stable_view, config.threshold);

    let mut clusters = Vec::with_capacity(groups.len());
    for members in groups {
        let members: Vec<(usize, usize)> = members.into_iter().map(|(s, p)| (s, index_map[s][p])).collect();
        let mut orders: Vec<usize> = members.iter().map(|&(s, _)| s).collect();
        orders.sort_unstable();
        let mut best = 1;
        let mut run = 1;
        for w in orders.windows(2) {
            run = if w[1] == w[0] + 1 { run + 1 } else { 1 };
            best = best.max(run);
        }
        let freqs: Vec<f64> = members.iter().map(|&(s, p)| steps[s].poles[p].frequency_hz).collect();
        let zetas: Vec<f64> = members.iter().map(|&(s, p)| steps[s].poles[p].damping_ratio).collect();
        let k = members.len() as f64;
        let lo = freqs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let id = clusters.len();
        for &(s, p) in &members {
            steps[s].poles[p].cluster = Some(id);
        }
        clusters.push(PoleCluster {
            mean_frequency_hz: freqs.iter().sum::<f64>() / k,
            mean_damping_ratio: zetas.iter().sum::<f64>() / k,
            member_count: members.len(),
            spread_hz: hi - lo,
            members,
            stable: best >= config.min_run,
        });
    }
    Ok(StabilitySweep { axis: SweepAxis::PolynomialOrder, steps, clusters })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sdof_frf(f0: f64, zeta: f64, fs: f64, lines: usize) -> FrfSet {
        let w0 = 2.0 * PI * f0;
        let freqs: Vec<f64> = (1..=lines).map(|k| k as f64 * fs / 2.0 / lines as f64).collect();
        let h = CMatrix::from_fn(1, lines, |_, k| {
            let w = 2.0 * PI * freqs[k];
            Complex64::new(1.0, 0.0) / Complex64::new(w0 * w0 - w * w, 2.0 * zeta * w0 * w)
        });
        FrfSet::unweighted(freqs, h, 1.0 / fs).unwrap()
    }

    #[test]
    fn sine_ratio_and_phase() {
        let fs = 256.0;
        let n = 1024;
        let f0 = 16.0;
        let t = |j: usize| j as f64 / fs;
        let force = DMatrix::from_fn(1, n, |_, j| (2.0 * PI * f0 * t(j)).sin());
        let resp = DMatrix::from_fn(1, n, |_, j| 3.0 * (2.0 * PI * f0 * t(j) - PI / 4.0).sin());
        let force = SnapshotMatrix::from_data(force, 1.0 / fs).unwrap();
        let resp = SnapshotMatrix::from_data(resp, 1.0 / fs).unwrap();
        for window in [Window::Rectangular, Window::Hann] {
            let spec = SegmentSpec { length: None, overlap: 0.5, window };
            let frf = estimate_frf(&force, &resp, &spec).unwrap();
            let k = frf.frequencies_hz.iter().position(|&f| (f - f0).abs() < 1e-9).unwrap();
            assert!((frf.responses[(0, k)].norm() - 3.0).abs() < 1e-9);
            assert!((frf.responses[(0, k)].arg() + PI / 4.0).abs() < 1e-9);
            assert!(frf.weights.iter().all(|&w| w == 1.0));
        }
    }

    #[test]
    fn segmentation_errors() {
        let a = SnapshotMatrix::from_data(DMatrix::from_element(1, 64, 1.0), 0.1).unwrap();
        let b = SnapshotMatrix::from_data(DMatrix::from_element(1, 64, 1.0), 0.2).unwrap();
        let spec = SegmentSpec { length: Some(128), ..Default::default() };
        assert!(matches!(estimate_frf(&a, &a, &spec), Err(Error::Segmentation(_))));
        assert!(matches!(estimate_frf(&a, &b, &SegmentSpec::default()), Err(Error::IncompatibleRecords(_))));
    }

    #[test]
    fn single_pole_pair_order_four() {
        let frf = sdof_frf(50.0, 0.01, 1024.0, 512);
        let fit = lscf_fit(&frf, 4).unwrap();
        let p = fit
            .poles
            .iter()
            .min_by(|a, b| (a.frequency_hz - 50.0).abs().total_cmp(&(b.frequency_hz - 50.0).abs()))
            .unwrap();
        assert!((p.frequency_hz - 50.0).abs() / 50.0 < 1e-3);
        assert!((p.damping_ratio - 0.01).abs() / 0.01 < 0.05);
        assert!(p.stable);
    }

    #[test]
    fn overfit_keeps_true_pole() {
        let frf = sdof_frf(50.0, 0.01, 1024.0, 512);
        let fit = lscf_fit(&frf, 20).unwrap();
        assert!(fit.poles.iter().any(|p| (p.frequency_hz - 50.0).abs() / 50.0 < 1e-3));
        assert!(fit.poles.iter().all(|p| p.s.re <= 1e-6 / frf.sampling_period));
    }

    #[test]
    fn order_limits() {
        let frf = sdof_frf(50.0, 0.01, 1024.0, 10);
        assert!(matches!(lscf_fit(&frf, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(lscf_fit(&frf, 5), Err(Error::IllConditionedFit { .. })));
    }

    #[test]
    fn single_pole_single_cluster() {
        let frf = sdof_frf(50.0, 0.01, 1024.0, 512);
        let sweep = stabilization_diagram(&frf, 20, &StabilizationConfig::default()).unwrap();
        let stable: Vec<_> = sweep.stable_clusters().collect();
        assert_eq!(stable.len(), 1, "{:?}", sweep.clusters);
        assert!((stable[0].1.mean_frequency_hz - 50.0).abs() < 0.05);
    }

    #[test]
    fn csv_round_trip() {
        let sys = MdofSystem::chain6_paper();
        let freqs: Vec<f64> = (1..=50).map(|k| k as f64 * 0.01).collect();
        let h = receptance_frf(&sys, &freqs).unwrap();
        let frf = FrfSet::unweighted(freqs, h, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frf.csv");
        frf.write_csv(std::fs::File::create(&path).unwrap(), &["seed=0".into()]).unwrap();
        let back = FrfSet::read_csv(&path).unwrap();
        assert_eq!(back.sampling_period, 0.5);
        assert_eq!(back.channel_labels, frf.channel_labels);
        assert_eq!(back.frequencies_hz, frf.frequencies_hz);
        assert_eq!(back.responses, frf.responses);
    }
}
