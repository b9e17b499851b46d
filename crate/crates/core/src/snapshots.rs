//! Snapshot matrices: uniformly sampled multichannel histories stored column-wise.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on time-column spacing accepted by [`ingest_csv`].
pub const SPACING_JITTER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    dt: f64,
    channel_labels: Vec<String>,
    origin_time: f64,
}

impl SnapshotMatrix {
    /// `data` is channels x samples.
    pub fn new(data: DMatrix<f64>, dt: f64, channel_labels: Vec<String>, origin_time: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("sampling interval must be positive, got {dt}")));
        }
        if data.ncols() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: data.ncols() });
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidInput("snapshot matrix has no channels".into()));
        }
        if channel_labels.len() != data.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} channel labels for {} channels",
                channel_labels.len(),
                data.nrows()
            )));
        }
        if let Some(idx) = data.iter().position(|x| !x.is_finite()) {
            let (row, col) = (idx % data.nrows(), idx / data.nrows());
            return Err(Error::InvalidData {
                row: col,
                column: channel_labels[row].clone(),
                reason: "non-finite value".into(),
            });
        }
        Ok(Self { data, dt, channel_labels, origin_time })
    }

    /// Channels labelled `ch1..chm`, origin at t = 0.
    pub fn from_data(data: DMatrix<f64>, dt: f64) -> Result<Self> {
        let labels = (1..=data.nrows()).map(|i| format!("ch{i}")).collect();
        Self::new(data, dt, labels, 0.0)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sampling_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn time(&self, column: usize) -> f64 {
        self.origin_time + column as f64 * self.dt
    }

    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, self.dt, self.channel_labels.clone(), self.origin_time)
    }

    /// Subtract each channel's sample mean.
    pub fn remove_mean(&self) -> Self {
        let mut data = self.data.clone();
        for mut row in data.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        Self { data, ..self.clone() }
    }

    /// Columns `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples() {
            return Err(Error::InvalidInput(format!(
                "window {start}..{} exceeds {} samples",
                start + len,
                self.samples()
            )));
        }
        Self::new(self.data.columns(start, len).into_owned(), self.dt, self.channel_labels.clone(), self.time(start))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub dt: f64,
    pub augmented: bool,
    /// Physical channel count (rows of the upper block when augmented).
    pub channels: usize,
}

/// Forms `X = [x1..x(n-1)]`, `Y = [x2..xn]`, or with `augment` the two-block
/// time-shift stacking that lets real standing-wave data produce conjugate pairs.
pub fn build_pair(snap: &SnapshotMatrix, augment: bool) -> Result<SnapshotPair> {
    let n = snap.samples();
    let m = snap.channels();
    let d = snap.data();
    if augment {
        if n < 4 {
            return Err(Error::InsufficientData { needed: 4, got: n });
        }
        let q = n - 2;
        let mut x = DMatrix::zeros(2 * m, q);
        let mut y = DMatrix::zeros(2 * m, q);
        x.view_mut((0, 0), (m, q)).copy_from(&d.columns(0, q));
        x.view_mut((m, 0), (m, q)).copy_from(&d.columns(1, q));
        y.view_mut((0, 0), (m, q)).copy_from(&d.columns(1, q));
        y.view_mut((m, 0), (m, q)).copy_from(&d.columns(2, q));
        Ok(SnapshotPair { x, y, dt: snap.dt(), augmented: true, channels: m })
    } else {
        if n < 3 {
            return Err(Error::InsufficientData { needed: 3, got: n });
        }
        Ok(SnapshotPair {
            x: d.columns(0, n - 1).into_owned(),
            y: d.columns(1, n - 1).into_owned(),
            dt: snap.dt(),
            augmented: false,
            channels: m,
        })
    }
}

/// Keep every `factor`-th column starting with the first.
pub fn decimate(snap: &SnapshotMatrix, factor: usize) -> Result<SnapshotMatrix> {
    if factor == 0 {
        return Err(Error::InvalidInput("decimation factor must be >= 1".into()));
    }
    let n = snap.samples().div_ceil(factor);
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let cols: Vec<usize> = (0..n).map(|j| j * factor).collect();
    let data = snap.data().select_columns(&cols);
    SnapshotMatrix::new(data, snap.dt() * factor as f64, snap.channel_labels().to_vec(), snap.origin_time())
}

/// Where the sampling interval of a CSV file comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSource {
    Column(String),
    Dt(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time: TimeSource,
    /// Channel columns to keep, in order; `None` keeps every non-time column.
    pub channels: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn time_column(name: impl Into<String>) -> Self {
        Self { time: TimeSource::Column(name.into()), channels: None }
    }

    pub fn fixed_dt(dt: f64) -> Self {
        Self { time: TimeSource::Dt(dt), channels: None }
    }
}

/// Wide-layout CSV: header row, one column per channel, optional time column.
/// Lines starting with `#` are treated as comments.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SnapshotMatrix> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let time_idx = match &schema.time {
        TimeSource::Column(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidInput(format!("time column '{name}' not found in header")))?,
        ),
        TimeSource::Dt(_) => None,
    };
    let channel_idx: Vec<usize> = match &schema.channels {
        Some(names) => names
            .iter()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::InvalidInput(format!("channel column '{n}' not found in header")))
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| Some(i) != time_idx).collect(),
    };
    if channel_idx.is_empty() {
        return Err(Error::InvalidInput("no channel columns".into()));
    }

    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |idx: usize| -> Result<f64> {
            let cell = record.get(idx).unwrap_or("");
            let value: f64 = cell.parse().map_err(|_| Error::InvalidData {
                row: row + 1,
                column: headers[idx].clone(),
                reason: format!("cannot parse '{cell}' as a number"),
            })?;
            if value.is_nan() {
                return Err(Error::InvalidData { row: row + 1, column: headers[idx].clone(), reason: "NaN".into() });
            }
            Ok(value)
        };
        if let Some(t) = time_idx {
            times.push(parse(t)?);
        }
        columns.push(channel_idx.iter().map(|&c| parse(c)).collect::<Result<_>>()?);
    }
    let n = columns.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }

    let (dt, origin) = match &schema.time {
        TimeSource::Dt(dt) => (*dt, 0.0),
        TimeSource::Column(_) => {
            let mean = (times[n - 1] - times[0]) / (n - 1) as f64;
            if !(mean > 0.0) {
                return Err(Error::InvalidInput("time column is not increasing".into()));
            }
            for (i, w) in times.windows(2).enumerate() {
                let jitter = ((w[1] - w[0]) - mean).abs() / mean;
                if jitter > SPACING_JITTER_TOLERANCE {
                    return Err(Error::NonUniformSampling { row: i + 2, jitter, tolerance: SPACING_JITTER_TOLERANCE });
                }
            }
            (mean, times[0])
        }
    };

    let m = channel_idx.len();
    let data = DMatrix::from_fn(m, n, |i, j| columns[j][i]);
    let labels = channel_idx.iter().map(|&i| headers[i].clone()).collect();
    SnapshotMatrix::new(data, dt, labels, origin)
}

/// Write a snapshot matrix in the layout [`ingest_csv`] reads, with a `t` column.
/// `preamble` lines are emitted as `#` comments before the header.
pub fn write_csv<W: std::io::Write>(snap: &SnapshotMatrix, mut out: W, preamble: &[String]) -> Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(snap.channel_labels().iter().cloned());
    writer.write_record(&header)?;
    for j in 0..snap.samples() {
        let mut row = vec![format!("{:e}", snap.time(j))];
        row.extend(snap.data().column(j).iter().map(|v| format!("{v:e}")));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
