use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use dmdmodal::dmd::{dmd_decompose, DmdOptions};
use dmdmodal::io::{write_atomic, PoleRecord, ResultFile, SCHEMA_VERSION};
use dmdmodal::itd::itd_extract;
use dmdmodal::lscf::{
    analytic_frf, estimate_frf, lscf_fit, stabilization_diagram, uniform_grid, FrfSet, SegmentSpec,
    StabilizationConfig, Window,
};
use dmdmodal::modal::{
    match_to_reference, pseudo_stability_sweep, select_stable_poles, ClusterConfig, MacMatrix, PoleCluster,
    SelectedPole, StabilitySweep, SweepConfig, SweepMethod,
};
use dmdmodal::numkit::CMatrix;
use dmdmodal::snapshots::{build_pair, ingest_csv, write_csv, CsvSchema, SnapshotMatrix};
use dmdmodal::synth::{
    chain6_paper_snapshots, inject_noise, mdof_step_response, modal_ground_truth, sdof_paper_snapshots, BeamConfig,
    MdofSystem, ModalGroundTruth, SdofParams,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{
    Cli, Command, CompareArgs, FrfArgs, GenerateArgs, IdentifyArgs, LscfArgs, Method, MethodOptions, Preset,
    SnapshotInput, SweepArgs, WindowArg,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: dmdmodal::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use dmdmodal::Error as E;
        let CliError::Module { source, .. } = self else {
            return 2;
        };
        match source {
            E::Io(_) => 3,
            E::Csv(e) if e.is_io_error() => 3,
            E::Csv(_) => 4,
            E::Json(_) => 5,
            E::NoSignal(_) => 10,
            E::InvalidInput(_) => 11,
            E::InsufficientData { .. } => 12,
            E::NonUniformSampling { .. } => 13,
            E::InvalidData { .. } => 14,
            E::OverTruncation => 15,
            E::SingularEigenvalue => 16,
            E::RankDeficient(_) => 17,
            E::NotUnderdamped { .. } => 18,
            E::UnsupportedDamping(_) => 19,
            E::IncompatibleRecords(_) => 20,
            E::Segmentation(_) => 21,
            E::IllConditionedFit { .. } => 22,
            E::UndefinedMac => 23,
            E::InvalidSweep(_) => 24,
            E::Decimation { .. } => 25,
            E::PerturbationTooLarge(_) => 26,
            E::IncompatibleModes(_) => 27,
            E::NoConvergence(_) => 28,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T>;
}

impl<T> Context<T> for dmdmodal::Result<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T> {
        self.map_err(|source| CliError::Module { context: what.to_string(), source })
    }
}

/// Console output that tolerates a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Identify(a) => identify(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Frf(a) => frf(cli, a),
        Command::Lscf(a) => lscf(cli, a),
        Command::Compare(a) => compare(cli, a),
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Output {
    fn new(cli: &Cli) -> Self {
        Self { dir: cli.output_dir.clone(), files: Vec::new() }
    }

    fn add(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((self.dir.join(name), bytes));
    }

    /// Nothing touches the disk until every artifact has been computed.
    fn commit(self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(dmdmodal::Error::from).context(self.dir.display())?;
        for (path, bytes) in &self.files {
            write_atomic(path, bytes).context(path.display())?;
            say(&format!("wrote {}\n", path.display()));
        }
        Ok(())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
}

fn config_line(config: &Value) -> String {
    format!("config={config}")
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(dmdmodal::Error::from).context("serialize")?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Chain description accepted by `generate --system`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    masses: Vec<f64>,
    springs: Vec<f64>,
    alpha: f64,
    force: Vec<f64>,
    sampling_rate_hz: f64,
    duration_s: f64,
}

fn sdof_truth() -> ModalGroundTruth {
    let p = SdofParams::paper();
    ModalGroundTruth {
        frequencies_hz: vec![p.natural_frequency_hz()],
        damping_ratios: vec![p.damping_ratio()],
        mode_matrix: DMatrix::from_element(1, 1, 1.0),
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    if !(a.noise >= 0.0) || !a.noise.is_finite() {
        return Err(usage(format!("--noise must be a finite non-negative number, got {}", a.noise)));
    }
    let (name, source, snap, truth) = match (a.preset, &a.system) {
        (Some(Preset::SdofPaper), _) => {
            ("sdof-paper".to_string(), json!("sdof-paper"), sdof_paper_snapshots().context("sdof-paper")?, sdof_truth())
        }
        (Some(Preset::Chain6Paper), _) => {
            let (_, truth, snap) = chain6_paper_snapshots().context("chain6-paper")?;
            ("chain6-paper".to_string(), json!("chain6-paper"), snap, truth)
        }
        (Some(Preset::BeamSynthetic), _) => {
            let cfg = BeamConfig::synthetic_camera();
            let snap = cfg.snapshots().context("beam-synthetic")?;
            let truth = ModalGroundTruth {
                frequencies_hz: cfg.frequencies_hz.clone(),
                damping_ratios: cfg.damping_ratios.clone(),
                mode_matrix: cfg.mode_shapes().context("beam-synthetic")?,
            };
            ("beam-synthetic".to_string(), json!("beam-synthetic"), snap, truth)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(dmdmodal::Error::from).context(path.display())?;
            let spec: ChainFile = serde_json::from_str(&text).map_err(dmdmodal::Error::from).context(path.display())?;
            let system = MdofSystem::chain(&spec.masses, &spec.springs, spec.alpha, DVector::from_vec(spec.force))
                .context(path.display())?;
            let truth = modal_ground_truth(&system).context(path.display())?;
            if !(spec.sampling_rate_hz > 0.0) || !(spec.duration_s > 0.0) {
                return Err(usage("sampling_rate_hz and duration_s must be positive"));
            }
            let dt = 1.0 / spec.sampling_rate_hz;
            let n = (spec.duration_s * spec.sampling_rate_hz).round() as usize;
            let times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
            let x = mdof_step_response(&system, &truth, &times).context(path.display())?;
            let labels = (1..=system.dof()).map(|i| format!("x{i}")).collect();
            let snap = SnapshotMatrix::new(x, dt, labels, 0.0).context(path.display())?;
            (stem(path), json!(path.display().to_string()), snap, truth)
        }
        (None, None) => return Err(usage("one of --preset or --system is required")),
    };
    let snap = inject_noise(&snap, a.noise, cli.seed).context("noise injection")?;
    let config = json!({
        "command": "generate",
        "source": source,
        "noise": a.noise,
        "seed": cli.seed,
        "dt": snap.dt(),
        "samples": snap.samples(),
    });

    let mut csv = Vec::new();
    write_csv(&snap, &mut csv, &[config_line(&config)]).context("snapshot CSV")?;
    let truth_file = ResultFile::from_ground_truth(&truth, snap.channel_labels().to_vec(), config);
    let mut out = Output::new(cli);
    out.add(format!("{name}.csv"), csv);
    out.add(format!("{name}_truth.json"), truth_file.to_json().context("ground truth")?.into_bytes());
    out.commit()
}

fn load_snapshots(input: &SnapshotInput) -> Result<SnapshotMatrix> {
    let schema = match input.dt {
        Some(dt) if dt > 0.0 => CsvSchema::fixed_dt(dt),
        Some(dt) => return Err(usage(format!("--dt must be positive, got {dt}"))),
        None => CsvSchema::time_column(input.time_column.clone()),
    };
    let snap = ingest_csv(&input.input, &schema).context(input.input.display())?;
    if input.window_start == 0 && input.window_length.is_none() {
        return Ok(snap);
    }
    let len = input.window_length.unwrap_or(snap.samples().saturating_sub(input.window_start));
    snap.window(input.window_start, len).context(input.input.display())
}

fn dmd_options(o: &MethodOptions) -> Result<DmdOptions> {
    o.truncation.validate().context("--truncation")?;
    Ok(DmdOptions { truncation: o.truncation, augment: o.augment.on(), ..DmdOptions::default() })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Dmd => "dmd",
        Method::Itd => "itd",
    }
}

fn method_config(o: &MethodOptions) -> Value {
    json!({
        "method": method_name(o.method),
        "augment": o.augment.on(),
        "truncation": o.truncation.to_string(),
        "mean_removal": o.mean_removal.on(),
    })
}

fn summary_table(file: &ResultFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>5} {:>14} {:>12} {:>10} {:>12}", "pole", "f [Hz]", "zeta", "|mu|", "amplitude");
    let fmt = |v: Option<f64>, w: usize| v.map(|x| format!("{x:>w$.6e}")).unwrap_or_else(|| format!("{:>w$}", "-"));
    for p in file.poles.iter().filter(|p: &&PoleRecord| p.s.is_none_or(|s| s[1] >= 0.0)) {
        let _ = writeln!(
            s,
            "{:>5} {:>14.8} {} {} {}",
            p.index,
            p.frequency_hz,
            fmt(p.damping_ratio, 12),
            p.abs_mu.map(|x| format!("{x:>10.6}")).unwrap_or_else(|| format!("{:>10}", "-")),
            fmt(p.amplitude, 12)
        );
    }
    s
}

fn identify(cli: &Cli, a: &IdentifyArgs) -> Result<()> {
    let options = dmd_options(&a.options)?;
    let snap = load_snapshots(&a.input)?;
    let snap = if a.options.mean_removal.on() { snap.remove_mean() } else { snap };
    let mut config = method_config(&a.options);
    config["command"] = json!("identify");
    config["input"] = json!(a.input.input.display().to_string());
    config["window_start"] = json!(a.input.window_start);
    config["window_length"] = json!(snap.samples());
    config["seed"] = json!(cli.seed);
    let ctx = a.input.input.display();
    let labels = snap.channel_labels().to_vec();
    let file = match a.options.method {
        Method::Dmd => {
            let pair = build_pair(&snap, options.augment).context(&ctx)?;
            ResultFile::from_dmd(&dmd_decompose(&pair, &options).context(&ctx)?, labels, config)
        }
        Method::Itd => ResultFile::from_itd(&itd_extract(&snap).context(&ctx)?, labels, config),
    };
    let table = summary_table(&file);
    say(&table);
    let name = format!("{}_{}", stem(&a.input.input), method_name(a.options.method));
    let mut out = Output::new(cli);
    out.add(format!("{name}.json"), file.to_json().context("result")?.into_bytes());
    out.add(format!("{name}_summary.txt"), table.into_bytes());
    out.commit()
}

#[derive(Debug, Serialize)]
struct SweepReport {
    schema_version: u32,
    axis: &'static str,
    selected_poles: Vec<SelectedPole>,
    clusters: Vec<PoleCluster>,
    config: Value,
}

enum Grid {
    Rates(Vec<f64>),
    Divisors(usize),
}

fn parse_grid(text: &str) -> Result<Grid> {
    let text = text.trim();
    if let Some(k) = text.strip_prefix("div:") {
        return match k.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Grid::Divisors(k)),
            _ => Err(usage(format!("--fs-grid div:K needs a positive integer, got '{k}'"))),
        };
    }
    let rates = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(usage(format!("--fs-grid entry '{s}' is not a positive rate"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    if rates.is_empty() {
        return Err(usage("--fs-grid is empty"));
    }
    Ok(Grid::Rates(rates))
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    if !(a.threshold > 0.0 && a.threshold < 100.0) {
        return Err(usage(format!("--threshold must lie in (0, 100) percent, got {}", a.threshold)));
    }
    let tol = a.threshold / 100.0;
    let ctx = a.input.display();
    let mut config = json!({
        "command": "sweep",
        "input": a.input.display().to_string(),
        "threshold_pct": a.threshold,
        "seed": cli.seed,
    });
    let result: StabilitySweep = if let Some(grid) = &a.fs_grid {
        let grid = parse_grid(grid)?;
        let options = dmd_options(&a.options)?;
        let snap = ingest_csv(&a.input, &CsvSchema::time_column(a.time_column.clone())).context(&ctx)?;
        let master = snap.sampling_rate();
        let mut rates = match grid {
            Grid::Rates(r) => r,
            Grid::Divisors(k) => (1..=k).map(|d| master / d as f64).collect(),
        };
        rates.sort_by(f64::total_cmp);
        rates.dedup();
        let method = match a.options.method {
            Method::Dmd => SweepMethod::Dmd,
            Method::Itd => SweepMethod::Itd,
        };
        let sweep_config = SweepConfig {
            cluster: ClusterConfig { tolerance: tol, ..ClusterConfig::default() },
            remove_mean: a.options.mean_removal.on(),
        };
        for (k, v) in method_config(&a.options).as_object().into_iter().flatten() {
            config[k] = v.clone();
        }
        config["fs_grid_hz"] = json!(rates);
        pseudo_stability_sweep(&snap, &rates, method, &options, &sweep_config).context(&ctx)?
    } else {
        let max_order = a.max_order.ok_or_else(|| usage("one of --fs-grid or --max-order is required"))?;
        let frf = FrfSet::read_csv(&a.input).context(&ctx)?;
        config["method"] = json!("lscf");
        config["max_order"] = json!(max_order);
        let stab = StabilizationConfig { threshold: tol, ..StabilizationConfig::default() };
        config["min_run"] = json!(stab.min_run);
        stabilization_diagram(&frf, max_order, &stab).context(&ctx)?
    };

    let mut csv = Vec::new();
    result.write_csv(&mut csv, &[config_line(&config)]).context("sweep CSV")?;
    let selected = select_stable_poles(&result);
    for p in &selected {
        say(&format!(
            "cluster {:>3}: f = {:.8} Hz, zeta = {:.6e} (axis {})\n",
            p.cluster, p.frequency_hz, p.damping_ratio, p.axis_value
        ));
    }
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        axis: result.axis.name(),
        selected_poles: selected,
        clusters: result.clusters.clone(),
        config,
    };
    let name = stem(&a.input);
    let mut out = Output::new(cli);
    out.add(format!("{name}_sweep.csv"), csv);
    out.add(format!("{name}_selected.json"), json_bytes(&report)?);
    out.commit()
}

fn sdof_system() -> Result<MdofSystem> {
    let p = SdofParams::paper();
    let one = |v| DMatrix::from_element(1, 1, v);
    MdofSystem::new(one(p.mass), one(p.damping), one(p.stiffness), DVector::from_element(1, 1.0)).context("sdof-paper")
}

fn frf(cli: &Cli, a: &FrfArgs) -> Result<()> {
    let (name, set, config) = if let Some(preset) = a.preset {
        let system = match preset {
            Preset::SdofPaper => sdof_system()?,
            Preset::Chain6Paper => MdofSystem::chain6_paper(),
            Preset::BeamSynthetic => return Err(usage("beam-synthetic has no analytic FRF")),
        };
        if !(a.df > 0.0) || a.lines == 0 || !(a.sampling_period > 0.0) {
            return Err(usage("--df, --lines and --sampling-period must be positive"));
        }
        let set = analytic_frf(&system, uniform_grid(a.df, a.lines), a.sampling_period).context(preset.name())?;
        let config = json!({
            "command": "frf",
            "preset": preset.name(),
            "df_hz": a.df,
            "lines": a.lines,
            "sampling_period_s": a.sampling_period,
            "seed": cli.seed,
        });
        (preset.name().to_string(), set, config)
    } else {
        let (Some(input), Some(force)) = (&a.input, &a.force) else {
            return Err(usage("--input needs --force"));
        };
        let schema = CsvSchema::time_column(a.time_column.clone());
        let response = ingest_csv(input, &schema).context(input.display())?;
        let force_rec = ingest_csv(force, &schema).context(force.display())?;
        let spec = SegmentSpec {
            length: a.segment_length,
            overlap: a.overlap,
            window: match a.window {
                WindowArg::Rectangular => Window::Rectangular,
                WindowArg::Hann => Window::Hann,
            },
        };
        let set = estimate_frf(&force_rec, &response, &spec).context(input.display())?;
        let config = json!({
            "command": "frf",
            "input": input.display().to_string(),
            "force": force.display().to_string(),
            "segment": spec,
            "seed": cli.seed,
        });
        (stem(input), set, config)
    };
    let mut csv = Vec::new();
    set.write_csv(&mut csv, &[config_line(&config)]).context("FRF CSV")?;
    let mut out = Output::new(cli);
    out.add(format!("{name}_frf.csv"), csv);
    out.commit()
}

fn lscf(cli: &Cli, a: &LscfArgs) -> Result<()> {
    let ctx = a.input.display();
    let set = FrfSet::read_csv(&a.input).context(&ctx)?;
    let fit = lscf_fit(&set, a.max_order).context(&ctx)?;
    let config = json!({
        "command": "lscf",
        "input": a.input.display().to_string(),
        "order": a.max_order,
        "seed": cli.seed,
    });
    let file = ResultFile::from_lscf(&fit, set.channel_labels.clone(), config);
    let table = summary_table(&file);
    say(&table);
    let name = format!("{}_lscf", stem(&a.input));
    let mut out = Output::new(cli);
    out.add(format!("{name}.json"), file.to_json().context("result")?.into_bytes());
    out.add(format!("{name}_summary.txt"), table.into_bytes());
    out.commit()
}

fn mode_matrix(modes: &[Option<dmdmodal::numkit::CVector>], channels: usize) -> Option<CMatrix> {
    let cols: Option<Vec<_>> = modes.iter().cloned().collect();
    let cols = cols?;
    if cols.is_empty() {
        return None;
    }
    Some(CMatrix::from_fn(channels, cols.len(), |i, j| cols[j][i]))
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<()> {
    let ident = ResultFile::read(&a.input).context(a.input.display())?;
    let refs = ResultFile::read(&a.reference).context(a.reference.display())?;
    if ident.channels.len() != refs.channels.len() {
        return Err(CliError::Module {
            context: format!("{} vs {}", a.input.display(), a.reference.display()),
            source: dmdmodal::Error::IncompatibleModes(format!(
                "{} channels against {}",
                ident.channels.len(),
                refs.channels.len()
            )),
        });
    }
    let ctx = format!("{} vs {}", a.input.display(), a.reference.display());
    let ip = ident.comparable_poles();
    let rp = refs.comparable_poles();
    let cmp = match_to_reference(&ip, &rp).context(&ctx)?;
    let config = json!({
        "command": "compare",
        "input": a.input.display().to_string(),
        "reference": a.reference.display().to_string(),
        "seed": cli.seed,
    });
    let preamble = format!("# {}\n", config_line(&config));

    let mut errors = preamble.clone().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut errors);
        let header = [
            "mode",
            "reference_f_hz",
            "identified_f_hz",
            "f_error_pct",
            "reference_zeta",
            "identified_zeta",
            "zeta_error_pct",
            "mac_pct",
        ];
        w.write_record(header).map_err(dmdmodal::Error::from).context("error table")?;
        say(&format!(
            "{:>5} {:>14} {:>14} {:>12} {:>12} {:>12} {:>10}\n",
            "mode", "f_ref [Hz]", "f_id [Hz]", "f err %", "zeta_ref", "zeta err %", "MAC %"
        ));
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for c in &cmp {
            let r = &rp[c.reference_index];
            let i = c.identified_index.map(|i| &ip[i]);
            w.write_record([
                format!("{}", c.reference_index + 1),
                format!("{:e}", r.frequency_hz),
                opt(i.map(|p| p.frequency_hz)),
                opt(c.frequency_error_pct),
                format!("{:e}", r.damping_ratio),
                opt(i.map(|p| p.damping_ratio)),
                opt(c.damping_error_pct),
                opt(c.mac.map(|m| 100.0 * m)),
            ])
            .map_err(dmdmodal::Error::from)
            .context("error table")?;
            let show = |v: Option<f64>, prec: usize| v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into());
            say(&format!(
                "{:>5} {:>14.8} {:>14} {:>12} {:>12.4e} {:>12} {:>10}\n",
                c.reference_index + 1,
                r.frequency_hz,
                show(i.map(|p| p.frequency_hz), 8),
                show(c.frequency_error_pct, 4),
                r.damping_ratio,
                show(c.damping_error_pct, 4),
                show(c.mac.map(|m| 100.0 * m), 2)
            ));
        }
        w.flush().map_err(dmdmodal::Error::from).context("error table")?;
    }

    let name = format!("{}_vs_{}", stem(&a.input), stem(&a.reference));
    let mut out = Output::new(cli);
    out.add(format!("{name}_errors.csv"), errors);

    let channels = ident.channels.len();
    let im: Vec<_> = ip.iter().map(|p| p.mode.clone()).collect();
    let rm: Vec<_> = rp.iter().map(|p| p.mode.clone()).collect();
    if let (Some(im), Some(rm)) = (mode_matrix(&im, channels), mode_matrix(&rm, channels)) {
        let il = (1..=im.ncols()).map(|i| format!("id{i}")).collect();
        let rl = (1..=rm.ncols()).map(|i| format!("ref{i}")).collect();
        let mac = MacMatrix::compute(&im, il, &rm, rl).context(&ctx)?;
        let mut bytes = preamble.into_bytes();
        mac.write_csv(&mut bytes).context("MAC CSV")?;
        out.add(format!("{name}_mac.csv"), bytes);
    } else {
        eprintln!("note: mode shapes missing from one file; MAC matrix skipped");
    }
    out.commit()
}
