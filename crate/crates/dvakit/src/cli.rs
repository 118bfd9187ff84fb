//! Command-line surface. Every subcommand returns an exit code; failures
//! are printed to stderr as one JSON error record per line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dvakit_core::batch::{correlate, summarize, summarize_by_batch, BatchSummary, CellRecord, Metric};
use dvakit_core::curves::{capacity_at_rate_check, differentiate, resample, smooth};
use dvakit_core::features::{correct_to_true, Anchor, CorrectionInputs};
use dvakit_core::model::{predict_dvdq_components, predict_voltage};
use dvakit_core::synth::{degrade, generate, CurveFamily, DegradationSpec, SynthSpec};
use dvakit_core::{CapacityUnit, ElectrodeParams, FeatureSet, SmoothingConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{direction_warnings, LoadedConfig};
use crate::csv_io::{parse_full_cell, parse_full_cell_file, write_full_cell, write_reference, Metadata};
use crate::error::{ToolError, EXIT_OK};
use crate::json::{to_canonical_string, to_line};
use crate::pipeline::{cell_record, features_for, fit_file, report_status, Ids};
use crate::report::{DesignFeatures, Report};

#[derive(Debug, Parser)]
#[command(name = "dvakit", version, about = "Differential voltage analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit full-cell curves and write one report per input
    Fit(FitArgs),
    /// Recompute features from a stored report
    Features(FeaturesArgs),
    /// Summaries and correlations over a set of reports
    Batch(BatchArgs),
    /// Write a synthetic dataset with its ground truth
    Synth(SynthArgs),
    /// Map window-relative capacities to the true scale
    Correct(CorrectArgs),
    /// Smoothed curve and dV/dq series for plotting
    Smooth(SmoothArgs),
    /// Compare full capacity at two C-rates
    CheckRate(CheckRateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Report directory (default: the configured output directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only valid with a single input
    #[arg(long)]
    pub cell_id: Option<String>,
    #[arg(long)]
    pub batch_id: Option<String>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    pub report: PathBuf,
    /// Adds design-based quantities from this configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coated area in cm², overriding the one stored in the report
    #[arg(long)]
    pub areal_basis: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated metric names (default: every metric all reports carry)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON synthesis spec
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference curves for a `from_reference` family
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    pub report: PathBuf,
    #[arg(long)]
    pub x_min: f64,
    #[arg(long)]
    pub x_max: f64,
    #[arg(long)]
    pub y_min: f64,
    #[arg(long)]
    pub y_max: f64,
    /// Also report absolute stoichiometries, assuming the window endpoints
    /// coincide with tilde 0 and 1
    #[arg(long)]
    pub anchor_window_endpoints: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    pub input: PathBuf,
    /// Smoothing and grid size from this configuration; with --report also
    /// the reference curves for the model columns
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "config")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Uniform grid size (default: the configured resample points)
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckRateArgs {
    /// Curve measured at the faster rate
    pub measured: PathBuf,
    /// Reference curve at the slower rate
    pub reference: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { crate::error::EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e, None);
            e.exit_code()
        }
    }
}

pub fn report_error(e: &ToolError, input: Option<&str>) {
    eprintln!("{}", to_line(&serde_json::json!({ "error": e.record(input) })));
}

pub fn run(cli: Cli) -> Result<i32, ToolError> {
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Features(a) => cmd_features(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Correct(a) => cmd_correct(a),
        Command::Smooth(a) => cmd_smooth(a),
        Command::CheckRate(a) => cmd_check_rate(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ToolError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ToolError> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn canonical<T: Serialize>(v: &T) -> Result<String, ToolError> {
    to_canonical_string(v).map_err(|e| ToolError::Input(e.to_string()))
}

fn cmd_fit(a: FitArgs) -> Result<i32, ToolError> {
    let cfg = LoadedConfig::load(&a.config)?;
    if a.cell_id.is_some() && a.inputs.len() > 1 {
        return Err(ToolError::Config("--cell-id needs exactly one input".into()));
    }
    let out_dir = a.out.clone().unwrap_or_else(|| cfg.output_dir());
    let ids = Ids {
        cell_id: a.cell_id.clone(),
        batch_id: a.batch_id.clone(),
    };
    // fits run concurrently; writes happen afterwards in input order
    let results: Vec<_> = a.inputs.par_iter().map(|p| fit_file(&cfg, p, &ids)).collect();

    let mut code = EXIT_OK;
    let mut seen = BTreeMap::new();
    for (input, res) in a.inputs.iter().zip(results) {
        let name = input.display().to_string();
        let outcome = res.and_then(|(report, _)| {
            if let Some(prev) = seen.insert(report.cell_id.clone(), name.clone()) {
                return Err(ToolError::Input(format!(
                    "cell id {} already used by {prev}",
                    report.cell_id
                )));
            }
            let path = out_dir.join(format!("{}.report.json", report.cell_id));
            write_text(&path, &report.to_json()?)?;
            println!("{}", path.display());
            Ok(report_status(&report))
        });
        let err = match outcome {
            Ok(status) => status,
            Err(e) => Some(e),
        };
        if let Some(e) = err {
            report_error(&e, Some(&name));
            if code == EXIT_OK {
                code = e.exit_code();
            }
        }
    }
    Ok(code)
}

/// Output of the `features` subcommand.
#[derive(Debug, Serialize, Deserialize)]
struct FeaturesOutput {
    cell_id: String,
    batch_id: String,
    theta: ElectrodeParams,
    areal_basis_cm2: Option<f64>,
    features: FeatureSet,
    design: Option<DesignFeatures>,
}

fn cmd_features(a: FeaturesArgs) -> Result<i32, ToolError> {
    let r = Report::load(&a.report)?;
    let basis = a.areal_basis.or(r.areal_basis_cm2);
    let features = features_for(&r.theta, basis)?;
    let design = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| ToolError::Config(format!("{}: {e}", p.display())))?;
            let c: crate::config::ToolkitConfig =
                serde_json::from_str(&text).map_err(|e| ToolError::Config(format!("{}: {e}", p.display())))?;
            c.design
                .as_ref()
                .map(|d| DesignFeatures::compute(d, &r.theta, basis))
                .transpose()?
        }
        None => r.design,
    };
    let out = FeaturesOutput {
        cell_id: r.cell_id,
        batch_id: r.batch_id,
        theta: r.theta,
        areal_basis_cm2: basis,
        features,
        design,
    };
    emit(a.out.as_deref(), &canonical(&out)?)?;
    Ok(EXIT_OK)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn summary_row(out: &mut String, scope: &str, s: &BatchSummary) {
    let _ = writeln!(
        out,
        "{scope},{},{},{:?},{},{:?},{:?},{:?},{:?},{:?}",
        s.metric.name(),
        s.count,
        s.mean,
        fmt_opt(s.std),
        s.min,
        s.q1,
        s.median,
        s.q3,
        s.max
    );
}

#[derive(Debug, Serialize)]
struct BatchOutput {
    records: usize,
    metrics: Vec<Metric>,
    overall: Vec<BatchSummary>,
    by_batch: BTreeMap<String, Vec<BatchSummary>>,
    correlation: Option<dvakit_core::batch::CorrelationMatrix>,
}

fn cmd_batch(a: BatchArgs) -> Result<i32, ToolError> {
    let reports: Vec<Report> = a.reports.iter().map(|p| Report::load(p)).collect::<Result<_, _>>()?;
    let records: Vec<CellRecord> = reports.iter().map(cell_record).collect();
    let metrics: Vec<Metric> = if a.metrics.is_empty() {
        let all_areal = records.iter().all(|r| r.areal_basis.is_some());
        Metric::ALL
            .iter()
            .copied()
            .filter(|m| all_areal || !m.is_areal())
            .collect()
    } else {
        a.metrics
            .iter()
            .map(|n| Metric::from_name(n.trim()).ok_or_else(|| ToolError::Config(format!("unknown metric `{n}`"))))
            .collect::<Result<_, _>>()?
    };

    let mut csv = String::from("scope,metric,count,mean,std,min,q1,median,q3,max\n");
    let mut overall = Vec::new();
    let mut by_batch: BTreeMap<String, Vec<BatchSummary>> = BTreeMap::new();
    for &m in &metrics {
        let s = summarize(&records, m)?;
        summary_row(&mut csv, "all", &s);
        overall.push(s);
    }
    for &m in &metrics {
        for (batch, s) in summarize_by_batch(&records, m)? {
            by_batch.entry(batch).or_default().push(s);
        }
    }
    for (batch, sums) in &by_batch {
        for s in sums {
            summary_row(&mut csv, &format!("batch:{batch}"), s);
        }
    }

    let correlation = if records.len() >= 3 {
        Some(correlate(&records, &metrics)?)
    } else {
        None
    };
    let mut corr_csv = String::from("metric");
    for m in &metrics {
        let _ = write!(corr_csv, ",{}", m.name());
    }
    corr_csv.push('\n');
    if let Some(c) = &correlation {
        for (i, m) in metrics.iter().enumerate() {
            corr_csv.push_str(m.name());
            for j in 0..metrics.len() {
                let _ = write!(corr_csv, ",{}", fmt_opt(c.get(i, j)));
            }
            corr_csv.push('\n');
        }
    }

    fs::create_dir_all(&a.out).map_err(|e| ToolError::io(&a.out, e))?;
    write_text(&a.out.join("summary.csv"), &csv)?;
    write_text(&a.out.join("correlation.csv"), &corr_csv)?;
    let out = BatchOutput {
        records: records.len(),
        metrics: metrics.clone(),
        overall,
        by_batch,
        correlation,
    };
    write_text(&a.out.join("batch.json"), &canonical(&out)?)?;
    println!("{}", a.out.display());
    Ok(EXIT_OK)
}

/// `synth --spec` file: a synthesis spec plus an optional degradation to
/// apply to the generated cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthFile {
    #[serde(default = "default_cell_id")]
    pub cell_id: String,
    #[serde(flatten)]
    pub spec: SynthSpec,
    #[serde(default)]
    pub degradation: Option<DegradationSpec>,
}

fn default_cell_id() -> String {
    "synthetic".into()
}

#[derive(Debug, Serialize, Deserialize)]
struct Truth {
    cell_id: String,
    theta: ElectrodeParams,
    features: FeatureSet,
    spec: SynthSpec,
    degradation: Option<DegradationSpec>,
}

fn cmd_synth(a: SynthArgs) -> Result<i32, ToolError> {
    let text = fs::read_to_string(&a.spec).map_err(|e| ToolError::Config(format!("{}: {e}", a.spec.display())))?;
    let sf: SynthFile =
        serde_json::from_str(&text).map_err(|e| ToolError::Config(format!("{}: {e}", a.spec.display())))?;
    let (u_pos, u_neg, analytic) = match (&sf.spec.family, &a.config) {
        (CurveFamily::Analytic(fam), _) => {
            let (p, n) = fam.build()?;
            (p, n, true)
        }
        (CurveFamily::FromReference, Some(c)) => {
            let cfg = LoadedConfig::load(c)?;
            (cfg.u_pos, cfg.u_neg, false)
        }
        (CurveFamily::FromReference, None) => {
            return Err(ToolError::Config("a from_reference family needs --config".into()))
        }
    };
    fs::create_dir_all(&a.out).map_err(|e| ToolError::io(&a.out, e))?;
    let (series, theta) = generate(&sf.spec, &u_pos, &u_neg)?;
    let write_cell = |id: &str, series, theta: &ElectrodeParams, spec: &SynthSpec, d| -> Result<(), ToolError> {
        let mut meta = Metadata::new();
        meta.insert("cell_id".into(), id.to_string());
        write_full_cell(&a.out.join(format!("{id}.csv")), series, &meta)?;
        let truth = Truth {
            cell_id: id.to_string(),
            theta: *theta,
            features: FeatureSet::from_theta_unchecked(theta),
            spec: spec.clone(),
            degradation: d,
        };
        write_text(&a.out.join(format!("{id}.truth.json")), &canonical(&truth)?)
    };
    write_cell(&sf.cell_id, &series, &theta, &sf.spec, None)?;

    if let Some(d) = sf.degradation {
        let (v_min, v_max) = sf
            .spec
            .window
            .ok_or_else(|| ToolError::Config("degradation needs a voltage window".into()))?;
        let aged = degrade(&theta, &d, &u_pos, &u_neg, v_min, v_max)?;
        let aged_spec = SynthSpec {
            theta_true: aged,
            window: None,
            seed: sf.spec.seed.wrapping_add(1),
            ..sf.spec.clone()
        };
        let (aged_series, aged_theta) = generate(&aged_spec, &u_pos, &u_neg)?;
        write_cell(&format!("{}_aged", sf.cell_id), &aged_series, &aged_theta, &aged_spec, Some(d))?;
    }

    if analytic {
        write_reference(&a.out.join("positive_reference.csv"), &u_pos)?;
        write_reference(&a.out.join("negative_reference.csv"), &u_neg)?;
        let cfg = serde_json::json!({
            "positive_reference": "positive_reference.csv",
            "negative_reference": "negative_reference.csv",
            "output_dir": "reports",
        });
        write_text(&a.out.join("config.json"), &canonical(&cfg)?)?;
    }
    println!("{}", a.out.display());
    Ok(EXIT_OK)
}

fn cmd_correct(a: CorrectArgs) -> Result<i32, ToolError> {
    let r = Report::load(&a.report)?;
    let c = CorrectionInputs {
        x_min: a.x_min,
        x_max: a.x_max,
        y_min: a.y_min,
        y_max: a.y_max,
    };
    let anchor = a.anchor_window_endpoints.then_some(Anchor::WindowEndpoints);
    let corrected = correct_to_true(&r.theta, &c, anchor)?;
    let out = serde_json::json!({
        "cell_id": r.cell_id,
        "window": c,
        "corrected": corrected,
    });
    emit(a.out.as_deref(), &canonical(&out)?)?;
    Ok(EXIT_OK)
}

fn cmd_smooth(a: SmoothArgs) -> Result<i32, ToolError> {
    let cfg = a.config.as_deref().map(LoadedConfig::load).transpose()?;
    let fit_cfg = cfg.as_ref().map(|c| c.config.fit.clone()).unwrap_or_default();
    let sm = SmoothingConfig {
        window_length: a.window.unwrap_or(fit_cfg.smoothing.window_length),
        poly_order: a.order.unwrap_or(fit_cfg.smoothing.poly_order),
        enabled: true,
    };
    sm.validate()?;
    let raw = parse_full_cell(&a.input)?;
    let series = resample(&raw, a.points.unwrap_or(fit_cfg.resample_points))?;
    let smoothed = smooth(&series, &sm)?;
    let dvdq = differentiate(&series, &sm)?;

    let model = match (&a.report, &cfg) {
        (Some(rp), Some(c)) => {
            let r = Report::load(rp)?;
            for w in direction_warnings(series.meta(), &c.u_pos, &c.u_neg) {
                report_error(&ToolError::Input(w), Some(&a.input.display().to_string()));
            }
            let v = predict_voltage(&r.theta, series.q(), &c.u_pos, &c.u_neg)?;
            let (pos, neg) = predict_dvdq_components(&r.theta, series.q(), &c.u_pos, &c.u_neg)?;
            Some((v, pos, neg))
        }
        _ => None,
    };

    let (qcol, dcol) = match series.meta().unit {
        CapacityUnit::AmpHour => ("capacity_ah", "v_per_ah"),
        CapacityUnit::MilliAmpHourPerCm2 => ("capacity_mah_per_cm2", "v_per_mah_per_cm2"),
    };
    let mut out = format!("{qcol},voltage_v,voltage_smoothed_v,dvdq_{dcol}");
    if model.is_some() {
        let _ = write!(out, ",model_voltage_v,model_dvdq_{dcol},positive_dvdq_{dcol},negative_dvdq_{dcol}");
    }
    out.push('\n');
    for i in 0..series.len() {
        let _ = write!(out, "{:?},{:?},{:?},{:?}", series.q()[i], series.v()[i], smoothed.v()[i], dvdq[i]);
        if let Some((v, p, n)) = &model {
            let _ = write!(out, ",{:?},{:?},{:?},{:?}", v[i], p[i] + n[i], p[i], n[i]);
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RateCheckOutput {
    pub ratio: f64,
    pub pass: bool,
    pub tol: f64,
    pub q_full_measured: f64,
    pub q_full_reference: f64,
    pub warnings: Vec<String>,
}

fn cmd_check_rate(a: CheckRateArgs) -> Result<i32, ToolError> {
    if !(a.tol >= 0.0) {
        return Err(ToolError::Config(format!("tolerance {} must be non-negative", a.tol)));
    }
    let measured = parse_full_cell_file(&a.measured)?.series;
    let reference = parse_full_cell_file(&a.reference)?.series;
    let mut warnings = Vec::new();
    if measured.meta().direction != reference.meta().direction {
        warnings.push("the two curves were recorded in opposite current directions".into());
    }
    if measured.meta().unit != reference.meta().unit {
        return Err(ToolError::Input("the two curves use different capacity units".into()));
    }
    let r = capacity_at_rate_check(&measured, &reference, a.tol);
    let out = RateCheckOutput {
        ratio: r.ratio,
        pass: r.pass,
        tol: a.tol,
        q_full_measured: measured.q_full(),
        q_full_reference: reference.q_full(),
        warnings,
    };
    emit(a.out.as_deref(), &canonical(&out)?)?;
    Ok(EXIT_OK)
}
