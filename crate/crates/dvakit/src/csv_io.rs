//! Reference-curve and full-cell CSV files.
//!
//! Metadata travels as `# key=value` comment lines above the header, or in
//! a sidecar `<file>.meta` holding the same `key=value` lines. Keys in the
//! file itself win over the sidecar.
//!
//! | file | header | metadata |
//! |------|--------|----------|
//! | reference | `capacity_mah,potential_v` | `role`, `direction`, `c_rate`, `v_lo`, `v_hi` |
//! | full cell | `capacity_ah,voltage_v` | `direction`, `c_rate`, optional `temperature`, `cell_id`, `batch_id` |
//! | full cell, areal | `capacity_mah_per_cm2,voltage_v` | as above |
//! | full cell, cycler log | `time_s,current_a,voltage_v` | as above |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dvakit_core::curves::build_reference_curve;
use dvakit_core::{
    CapacityUnit, CapacityVoltageSeries, CurrentDirection, CurveError, ElectrodeRole,
    ReferenceMeta, ReferencePotentialCurve, SeriesMeta, SweepDirection,
};

use crate::error::ToolError;

pub type Metadata = BTreeMap<String, String>;

/// A parsed full-cell file with its metadata block.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCellFile {
    pub series: CapacityVoltageSeries,
    pub metadata: Metadata,
}

/// Rows of a numeric CSV body plus the file line each row came from.
struct Table {
    header: Vec<String>,
    header_line: usize,
    columns: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn read_text(path: &Path) -> Result<String, ToolError> {
    fs::read_to_string(path).map_err(|e| ToolError::io(path, e))
}

fn parse_meta_line(line: &str, into: &mut Metadata) {
    if let Some((k, v)) = line.split_once('=') {
        let k = k.trim();
        if !k.is_empty() {
            into.insert(k.to_ascii_lowercase(), v.trim().to_string());
        }
    }
}

/// Sidecar metadata first, then the leading comment block of `text`.
fn collect_metadata(path: &Path, text: &str) -> Result<Metadata, ToolError> {
    let mut meta = Metadata::new();
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        for line in read_text(&sidecar)?.lines() {
            let line = line.trim();
            if !line.starts_with('#') {
                parse_meta_line(line, &mut meta);
            }
        }
    }
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.strip_prefix('#') {
            Some(rest) => parse_meta_line(rest, &mut meta),
            None => break,
        }
    }
    Ok(meta)
}

fn read_table(name: &str, text: &str) -> Result<Table, ToolError> {
    let schema = |line: usize, message: String| ToolError::Schema {
        path: name.to_string(),
        line,
        message,
    };
    let header_line = text
        .lines()
        .position(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|i| i + 1)
        .ok_or_else(|| schema(1, "no header row".into()))?;

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| schema(header_line, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();

    let mut columns = vec![Vec::new(); header.len()];
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(header_line, |p| p.line() as usize);
            schema(line, format!("expected {} fields: {e}", header.len()))
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        for (j, field) in rec.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                schema(line, format!("column `{}`: `{field}` is not a number", header[j]))
            })?;
            columns[j].push(x);
        }
        lines.push(line);
    }
    Ok(Table {
        header,
        header_line,
        columns,
        lines,
    })
}

/// Attaches a file line to errors that name a data row.
fn curve_error(name: &str, lines: &[usize], e: CurveError) -> ToolError {
    let row = match &e {
        CurveError::NonFinite { row } => Some(*row),
        CurveError::Retrograde { rows, .. } => rows.first().copied(),
        _ => None,
    };
    match row.and_then(|r| lines.get(r)) {
        Some(&line) => ToolError::Schema {
            path: name.to_string(),
            line,
            message: e.to_string(),
        },
        None => ToolError::Input(format!("{name}: {e}")),
    }
}

fn require<'a>(name: &str, meta: &'a Metadata, key: &str) -> Result<&'a str, ToolError> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| ToolError::Input(format!("{name}: missing metadata key `{key}`")))
}

fn require_f64(name: &str, meta: &Metadata, key: &str) -> Result<f64, ToolError> {
    let s = require(name, meta, key)?;
    s.parse()
        .map_err(|_| ToolError::Input(format!("{name}: metadata `{key}={s}` is not a number")))
}

fn unknown(name: &str, key: &str, value: &str) -> ToolError {
    ToolError::Input(format!("{name}: unrecognised metadata `{key}={value}`"))
}

pub fn role_name(r: ElectrodeRole) -> &'static str {
    match r {
        ElectrodeRole::Positive => "positive",
        ElectrodeRole::Negative => "negative",
    }
}

pub fn sweep_name(d: SweepDirection) -> &'static str {
    match d {
        SweepDirection::Lithiation => "lithiation",
        SweepDirection::Delithiation => "delithiation",
    }
}

pub fn direction_name(d: CurrentDirection) -> &'static str {
    match d {
        CurrentDirection::Charge => "charge",
        CurrentDirection::Discharge => "discharge",
    }
}

fn reference_meta(name: &str, meta: &Metadata) -> Result<ReferenceMeta, ToolError> {
    let role = match require(name, meta, "role")? {
        "positive" | "pos" => ElectrodeRole::Positive,
        "negative" | "neg" => ElectrodeRole::Negative,
        other => return Err(unknown(name, "role", other)),
    };
    let direction = match require(name, meta, "direction")? {
        "lithiation" => SweepDirection::Lithiation,
        "delithiation" => SweepDirection::Delithiation,
        other => return Err(unknown(name, "direction", other)),
    };
    Ok(ReferenceMeta {
        role,
        direction,
        c_rate: require_f64(name, meta, "c_rate")?,
        window: (require_f64(name, meta, "v_lo")?, require_f64(name, meta, "v_hi")?),
    })
}

fn series_meta(name: &str, meta: &Metadata, unit: CapacityUnit) -> Result<SeriesMeta, ToolError> {
    let direction = match require(name, meta, "direction")? {
        "charge" => CurrentDirection::Charge,
        "discharge" => CurrentDirection::Discharge,
        other => return Err(unknown(name, "direction", other)),
    };
    Ok(SeriesMeta {
        temperature_label: meta.get("temperature").cloned().unwrap_or_default(),
        unit,
        ..SeriesMeta::new(direction, require_f64(name, meta, "c_rate")?)
    })
}

fn header_error(name: &str, t: &Table, expected: &str) -> ToolError {
    ToolError::Schema {
        path: name.to_string(),
        line: t.header_line,
        message: format!("header `{}` does not match {expected}", t.header.join(",")),
    }
}

/// Parses a half-cell reference curve from CSV text. `path` locates the
/// optional sidecar and names the file in errors.
pub fn parse_reference_str(path: &Path, text: &str) -> Result<ReferencePotentialCurve, ToolError> {
    let name = path.display().to_string();
    let meta = collect_metadata(path, text)?;
    let t = read_table(&name, text)?;
    if t.header != ["capacity_mah", "potential_v"] {
        return Err(header_error(&name, &t, "`capacity_mah,potential_v`"));
    }
    let m = reference_meta(&name, &meta)?;
    build_reference_curve(&t.columns[0], &t.columns[1], m).map_err(|e| curve_error(&name, &t.lines, e))
}

pub fn parse_reference(path: &Path) -> Result<ReferencePotentialCurve, ToolError> {
    parse_reference_str(path, &read_text(path)?)
}

/// `|∫ I dt|` in Ah by the trapezoid rule.
pub fn integrate_current(time_s: &[f64], current_a: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(time_s.len());
    let mut acc = 0.0;
    for i in 0..time_s.len() {
        if i > 0 {
            acc += 0.5 * (current_a[i] + current_a[i - 1]) * (time_s[i] - time_s[i - 1]);
        }
        q.push(acc);
    }
    q.iter().map(|c| c.abs() / 3600.0).collect()
}

/// Parses a full-cell file in any of the three declared schemas.
pub fn parse_full_cell_str(path: &Path, text: &str) -> Result<FullCellFile, ToolError> {
    let name = path.display().to_string();
    let metadata = collect_metadata(path, text)?;
    let t = read_table(&name, text)?;
    let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
    let (unit, capacity, voltage) = match header.as_slice() {
        ["capacity_ah", "voltage_v"] => (CapacityUnit::AmpHour, t.columns[0].clone(), &t.columns[1]),
        ["capacity_mah_per_cm2", "voltage_v"] => {
            (CapacityUnit::MilliAmpHourPerCm2, t.columns[0].clone(), &t.columns[1])
        }
        ["time_s", "current_a", "voltage_v"] => {
            let time = &t.columns[0];
            if let Some(i) = (1..time.len()).find(|&i| time[i] < time[i - 1]) {
                return Err(ToolError::Schema {
                    path: name,
                    line: t.lines[i],
                    message: format!("time runs backwards ({} s after {} s)", time[i], time[i - 1]),
                });
            }
            (CapacityUnit::AmpHour, integrate_current(time, &t.columns[1]), &t.columns[2])
        }
        _ => {
            return Err(header_error(
                &name,
                &t,
                "`capacity_ah,voltage_v`, `capacity_mah_per_cm2,voltage_v` or `time_s,current_a,voltage_v`",
            ))
        }
    };
    let meta = series_meta(&name, &metadata, unit)?;
    let series = CapacityVoltageSeries::from_raw(&capacity, voltage, meta)
        .map_err(|e| curve_error(&name, &t.lines, e))?;
    Ok(FullCellFile { series, metadata })
}

pub fn parse_full_cell_file(path: &Path) -> Result<FullCellFile, ToolError> {
    parse_full_cell_str(path, &read_text(path)?)
}

pub fn parse_full_cell(path: &Path) -> Result<CapacityVoltageSeries, ToolError> {
    Ok(parse_full_cell_file(path)?.series)
}

/// Full-cell CSV text. Values use the shortest representation that parses
/// back to the same `f64`.
pub fn format_full_cell(series: &CapacityVoltageSeries, extra: &Metadata) -> String {
    let m = series.meta();
    let mut out = String::new();
    let _ = writeln!(out, "# direction={}", direction_name(m.direction));
    let _ = writeln!(out, "# c_rate={:?}", m.c_rate);
    if !m.temperature_label.is_empty() {
        let _ = writeln!(out, "# temperature={}", m.temperature_label);
    }
    for (k, v) in extra {
        if !matches!(k.as_str(), "direction" | "c_rate" | "temperature") {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
    out.push_str(match m.unit {
        CapacityUnit::AmpHour => "capacity_ah,voltage_v\n",
        CapacityUnit::MilliAmpHourPerCm2 => "capacity_mah_per_cm2,voltage_v\n",
    });
    for (q, v) in series.q().iter().zip(series.v()) {
        let _ = writeln!(out, "{q:?},{v:?}");
    }
    out
}

pub fn write_full_cell(path: &Path, series: &CapacityVoltageSeries, extra: &Metadata) -> Result<(), ToolError> {
    fs::write(path, format_full_cell(series, extra)).map_err(|e| ToolError::io(path, e))
}

/// Reference CSV text: capacity is the stoichiometry grid times the curve's
/// capacity basis.
pub fn format_reference(curve: &ReferencePotentialCurve) -> String {
    let m = curve.meta();
    let mut out = String::new();
    let _ = writeln!(out, "# role={}", role_name(m.role));
    let _ = writeln!(out, "# direction={}", sweep_name(m.direction));
    let _ = writeln!(out, "# c_rate={:?}", m.c_rate);
    let _ = writeln!(out, "# v_lo={:?}", m.window.0);
    let _ = writeln!(out, "# v_hi={:?}", m.window.1);
    out.push_str("capacity_mah,potential_v\n");
    let basis = curve.capacity_basis();
    for (s, u) in curve.stoich_grid().iter().zip(curve.potential()) {
        let _ = writeln!(out, "{:?},{u:?}", s * basis);
    }
    out
}

pub fn write_reference(path: &Path, curve: &ReferencePotentialCurve) -> Result<(), ToolError> {
    fs::write(path, format_reference(curve)).map_err(|e| ToolError::io(path, e))
}
