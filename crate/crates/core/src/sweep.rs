//! Batch runs: one-parameter sweeps, figure curve families and the oracle
//! comparison suite, with CSV/JSON emitters.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ClockError, Result};
use crate::model::{effective_coupling, ClockParams, Machines, TopLevelProfile};
use crate::oracle::{build_oracle, oracle_dimension, ORACLE_DIM_LIMIT};
use crate::tick_stats::{clock_metrics, TickMoments};

/// Format a float with 17 significant digits; infinities as `inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Parse a float, accepting `inf`/`infinity`.
pub fn parse_f64(s: &str) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| ClockError::Config(format!("not a number: `{t}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "d")]
    D,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "g")]
    G,
}

impl FromStr for Axis {
    type Err = ClockError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "d" => Ok(Axis::D),
            "M" | "m" => Ok(Axis::M),
            "c" => Ok(Axis::C),
            "g" => Ok(Axis::G),
            other => Err(ClockError::Config(format!("unknown axis `{other}` (expected d, M, c or g)"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::D => "d",
            Axis::M => "M",
            Axis::C => "c",
            Axis::G => "g",
        })
    }
}

impl Axis {
    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &ClockParams, value: f64) -> Result<ClockParams> {
        let mut p = *base;
        match self {
            Axis::D => p.d = as_count("d", value)?,
            Axis::M => {
                p.machines = if value == f64::INFINITY {
                    Machines::Infinite
                } else {
                    Machines::Finite(as_count("M", value)?)
                }
            }
            Axis::C => p.c = value,
            Axis::G => p.g = value,
        }
        p.validate()?;
        Ok(p)
    }
}

fn as_count(name: &'static str, v: f64) -> Result<u64> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(ClockError::InvalidParameter {
            name,
            reason: format!("expected a non-negative integer, got {v}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    N,
    R,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "t_bar")]
    TBar,
    #[serde(rename = "delta_t")]
    DeltaT,
    #[serde(rename = "C_M")]
    CM,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::N, Metric::R, Metric::Epsilon, Metric::TBar, Metric::DeltaT, Metric::CM];

    pub fn name(self) -> &'static str {
        match self {
            Metric::N => "N",
            Metric::R => "R",
            Metric::Epsilon => "epsilon",
            Metric::TBar => "t_bar",
            Metric::DeltaT => "delta_t",
            Metric::CM => "C_M",
        }
    }
}

impl FromStr for Metric {
    type Err = ClockError;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ClockError::Config(format!("unknown output `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ClockError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(ClockError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Parse an axis value list: `a,b,c`, or inclusive `start:stop:step`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ClockError::Config("values must be non-empty".into()));
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(ClockError::Config(format!("range must be start:stop:step, got `{s}`")));
        }
        let (a, b, step) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
        if !(step > 0.0 && a.is_finite() && b.is_finite()) || b < a {
            return Err(ClockError::Config(format!("invalid range `{s}`")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * step).collect());
    }
    s.split(',').map(parse_f64).collect()
}

/// Flat key/value configuration as read from JSON or the command line.
/// Every field is optional so that flags can override a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub d: Option<u64>,
    #[serde(rename = "M")]
    pub m: Option<Value>,
    pub g: Option<f64>,
    pub c: Option<f64>,
    pub beta_c: Option<Value>,
    pub beta_h: Option<f64>,
    pub e_c: Option<f64>,
    pub e_h: Option<f64>,
    pub axis: Option<String>,
    pub values: Option<Value>,
    pub outputs: Option<Vec<String>>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub seed: Option<u64>,
}

fn value_to_f64(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ClockError::Config(format!("bad number {n}"))),
        Value::String(s) => parse_f64(s),
        other => Err(ClockError::Config(format!("expected a number or \"inf\", got {other}"))),
    }
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ClockError::Config(e.to_string()))
    }

    /// Fields set in `other` replace the ones in `self`.
    pub fn overridden_by(self, other: RawConfig) -> RawConfig {
        RawConfig {
            d: other.d.or(self.d),
            m: other.m.or(self.m),
            g: other.g.or(self.g),
            c: other.c.or(self.c),
            beta_c: other.beta_c.or(self.beta_c),
            beta_h: other.beta_h.or(self.beta_h),
            e_c: other.e_c.or(self.e_c),
            e_h: other.e_h.or(self.e_h),
            axis: other.axis.or(self.axis),
            values: other.values.or(self.values),
            outputs: other.outputs.or(self.outputs),
            format: other.format.or(self.format),
            out: other.out.or(self.out),
            seed: other.seed.or(self.seed),
        }
    }

    /// Clock parameters with defaults `d = 2`, `M = inf`, `g = c = 1`,
    /// `beta_C = inf`, `beta_H = 0`, `E_C = 1`, `E_H = 2`.
    pub fn params(&self) -> Result<ClockParams> {
        let machines = match &self.m {
            None => Machines::Infinite,
            Some(v) => {
                let x = value_to_f64(v)?;
                if x == f64::INFINITY {
                    Machines::Infinite
                } else {
                    Machines::Finite(as_count("M", x)?)
                }
            }
        };
        let beta_c = self.beta_c.as_ref().map(value_to_f64).transpose()?.unwrap_or(f64::INFINITY);
        ClockParams::new(
            self.d.unwrap_or(2),
            machines,
            self.g.unwrap_or(1.0),
            self.c.unwrap_or(1.0),
            beta_c,
            self.beta_h.unwrap_or(0.0),
            self.e_c.unwrap_or(1.0),
            self.e_h.unwrap_or(2.0),
        )
    }

    pub fn into_sweep(self) -> Result<SweepConfig> {
        let base = self.params()?;
        let axis: Axis = self
            .axis
            .as_deref()
            .ok_or_else(|| ClockError::Config("missing `axis`".into()))?
            .parse()?;
        let values = match &self.values {
            None => return Err(ClockError::Config("missing `values`".into())),
            Some(Value::String(s)) => parse_values(s)?,
            Some(Value::Array(items)) => items.iter().map(value_to_f64).collect::<Result<_>>()?,
            Some(other) => return Err(ClockError::Config(format!("bad `values`: {other}"))),
        };
        let outputs = match &self.outputs {
            None => Metric::ALL.to_vec(),
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        };
        let format = self.format.as_deref().map(str::parse).transpose()?.unwrap_or(OutputFormat::Csv);
        let config = SweepConfig {
            base,
            axis,
            values,
            outputs,
            format,
            out_path: self.out.map(PathBuf::from),
            seed: self.seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}

/// A validated one-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ClockParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub outputs: Vec<Metric>,
    pub format: OutputFormat,
    pub out_path: Option<PathBuf>,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(ClockError::Config("values must be non-empty".into()));
        }
        if self.outputs.is_empty() {
            return Err(ClockError::Config("outputs must be non-empty".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The clock practically never ticks: `R = 0`, `N` undefined.
    Degenerate,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: RowStatus,
    pub metrics: Option<TickMoments>,
    pub c_m: Option<f64>,
    pub message: String,
}

impl SweepRow {
    pub fn get(&self, m: Metric) -> Option<f64> {
        if m == Metric::CM {
            return self.c_m;
        }
        match (self.status, &self.metrics) {
            (RowStatus::Ok, Some(t)) => Some(match m {
                Metric::N => t.n,
                Metric::R => t.r,
                Metric::Epsilon => t.epsilon,
                Metric::TBar => t.t_bar,
                Metric::DeltaT => t.delta_t,
                Metric::CM => unreachable!(),
            }),
            (RowStatus::Degenerate, _) if matches!(m, Metric::R | Metric::Epsilon) => Some(0.0),
            _ => None,
        }
    }
}

/// Metrics for one parameter set, turning a never-ticking clock into a
/// degenerate row instead of an error.
pub fn evaluate_point(params: &ClockParams, value: f64) -> SweepRow {
    let c_m = effective_coupling(params).ok();
    match clock_metrics(params) {
        Ok(t) => SweepRow {
            value,
            status: RowStatus::Ok,
            metrics: Some(t),
            c_m,
            message: String::new(),
        },
        Err(e @ ClockError::DegenerateProfile { .. }) => SweepRow {
            value,
            status: RowStatus::Degenerate,
            metrics: None,
            c_m,
            message: e.to_string(),
        },
        Err(e) => SweepRow {
            value,
            status: RowStatus::Error,
            metrics: None,
            c_m,
            message: e.to_string(),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

/// Evaluate every axis value independently and in parallel; rows keep axis
/// order and failures become error rows.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let rows = config
        .values
        .par_iter()
        .map(|&v| match config.axis.apply(&config.base, v) {
            Ok(p) => evaluate_point(&p, v),
            Err(e) => SweepRow {
                value: v,
                status: RowStatus::Error,
                metrics: None,
                c_m: None,
                message: e.to_string(),
            },
        })
        .collect();
    Ok(SweepTable {
        config: config.clone(),
        rows,
    })
}

fn params_metadata(p: &ClockParams) -> Vec<(String, String)> {
    vec![
        ("d".into(), p.d.to_string()),
        ("M".into(), p.machines.to_string()),
        ("g".into(), fmt_f64(p.g)),
        ("c".into(), fmt_f64(p.c)),
        ("beta_c".into(), fmt_f64(p.beta_c)),
        ("beta_h".into(), fmt_f64(p.beta_h)),
        ("e_c".into(), fmt_f64(p.e_c)),
        ("e_h".into(), fmt_f64(p.e_h)),
    ]
}

fn axis_value_text(axis: Axis, v: f64) -> String {
    match axis {
        Axis::D | Axis::M if v.is_finite() => format!("{}", v as u64),
        _ => fmt_f64(v),
    }
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let cfg = &self.config;
        for (k, v) in params_metadata(&cfg.base) {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "# axis={}", cfg.axis)?;
        writeln!(out, "# seed={}", cfg.seed)?;
        writeln!(out, "# tool_version={}", env!("CARGO_PKG_VERSION"))?;
        let mut header = vec![cfg.axis.to_string()];
        header.extend(cfg.outputs.iter().map(|m| m.name().to_string()));
        header.push("status".into());
        header.push("message".into());
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let mut cells = vec![axis_value_text(cfg.axis, row.value)];
            for &m in &cfg.outputs {
                cells.push(row.get(m).map(fmt_f64).unwrap_or_default());
            }
            cells.push(status_name(row.status).into());
            cells.push(csv_text(&row.message));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let cfg = &self.config;
        let meta: serde_json::Map<String, Value> = params_metadata(&cfg.base)
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                obj.insert(cfg.axis.to_string(), Value::String(axis_value_text(cfg.axis, row.value)));
                for &m in &cfg.outputs {
                    obj.insert(m.name().into(), row.get(m).map(|x| json!(x)).unwrap_or(Value::Null));
                }
                obj.insert("status".into(), json!(status_name(row.status)));
                obj.insert("message".into(), json!(row.message));
                Value::Object(obj)
            })
            .collect();
        json!({
            "metadata": meta,
            "axis": cfg.axis.to_string(),
            "seed": cfg.seed,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "rows": rows,
        })
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        match self.config.format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => {
                let text = serde_json::to_string_pretty(&self.to_json())
                    .map_err(|e| ClockError::Io(e.to_string()))?;
                writeln!(out, "{text}")?;
                Ok(())
            }
        }
    }
}

fn status_name(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::Degenerate => "degenerate",
        RowStatus::Error => "error",
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---------------------------------------------------------------------------
// Figure presets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePreset {
    Fig4,
    Fig5,
    Fig6,
    Fig8a,
    Fig8b,
    Fig9,
}

impl FromStr for FigurePreset {
    type Err = ClockError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig4" => Ok(FigurePreset::Fig4),
            "fig5" => Ok(FigurePreset::Fig5),
            "fig6" => Ok(FigurePreset::Fig6),
            "fig8a" => Ok(FigurePreset::Fig8a),
            "fig8b" => Ok(FigurePreset::Fig8b),
            "fig9" => Ok(FigurePreset::Fig9),
            other => Err(ClockError::Config(format!("unknown figure preset `{other}`"))),
        }
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
            FigurePreset::Fig8a => "fig8a",
            FigurePreset::Fig8b => "fig8b",
            FigurePreset::Fig9 => "fig9",
        })
    }
}

/// Quantity plotted on a figure axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    D,
    N,
    R,
    Epsilon,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::D => "d",
            Quantity::N => "N",
            Quantity::R => "R",
            Quantity::Epsilon => "epsilon",
        }
    }
}

/// One curve: fixed parameters except `d`, which runs over `d_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub id: String,
    pub base: ClockParams,
    pub d_values: Vec<u64>,
}

/// Curve family and axes of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub preset: FigurePreset,
    pub x: Quantity,
    pub y: Quantity,
    pub curves: Vec<CurveSpec>,
    /// Drop sub-optimal trailing points (where growing `d` lowers both `N`
    /// and `R`).
    pub exclude_suboptimal: bool,
    /// Parameters that had to be chosen because the source figure does not
    /// state them.
    pub reconstructed: Vec<&'static str>,
}

fn log_grid(max: u64) -> Vec<u64> {
    let mut v: Vec<u64> = vec![2, 3, 4, 5, 6, 7, 8, 10];
    let mut x = 10.0f64;
    while (x as u64) < max {
        x *= 10f64.powf(0.1);
        v.push((x.round() as u64).min(max));
    }
    v.dedup();
    v
}

fn zt(d: u64, m: Machines, g: f64, c: f64) -> ClockParams {
    ClockParams {
        d,
        machines: m,
        g,
        c,
        beta_c: f64::INFINITY,
        beta_h: 0.0,
        e_c: 1.0,
        e_h: 2.0,
    }
}

fn m_label(m: Machines) -> String {
    format!("M={m}")
}

impl FigurePreset {
    /// Default curve family. All figures use `T_C = 0`, `T_H -> inf`.
    pub fn spec(self) -> FigureSpec {
        use Machines::{Finite, Infinite};
        let range = |a: u64, b: u64| (a..=b).collect::<Vec<u64>>();
        match self {
            FigurePreset::Fig4 => {
                let mut curves = Vec::new();
                for c in [1e2, 1e3, 1e4] {
                    curves.push(CurveSpec {
                        id: format!("M=inf,c={c}"),
                        base: zt(2, Infinite, 1.0, c),
                        d_values: log_grid(1000),
                    });
                }
                for m in [1, 5] {
                    curves.push(CurveSpec {
                        id: format!("M={m},c=1000"),
                        base: zt(2, Finite(m), 1.0, 1e3),
                        d_values: range(2, 40),
                    });
                }
                FigureSpec {
                    preset: self,
                    x: Quantity::D,
                    y: Quantity::N,
                    curves,
                    exclude_suboptimal: false,
                    reconstructed: vec!["c values {1e2,1e3,1e4}", "finite M {1,5} at c=1e3", "d grid", "g=1"],
                }
            }
            FigurePreset::Fig5 => {
                let mut curves: Vec<CurveSpec> = [Finite(1), Finite(2), Finite(5), Finite(10), Infinite]
                    .into_iter()
                    .map(|m| CurveSpec {
                        id: format!("{},c=25", m_label(m)),
                        base: zt(2, m, 1.0, 25.0),
                        d_values: range(2, 60),
                    })
                    .collect();
                curves.push(CurveSpec {
                    id: "M=inf,c=100".into(),
                    base: zt(2, Infinite, 1.0, 100.0),
                    d_values: range(2, 200),
                });
                FigureSpec {
                    preset: self,
                    x: Quantity::R,
                    y: Quantity::N,
                    curves,
                    exclude_suboptimal: false,
                    reconstructed: vec!["finite M values {1,2,5,10}", "extra M=inf curve at c=100", "d grid"],
                }
            }
            FigurePreset::Fig6 => FigureSpec {
                preset: self,
                x: Quantity::Epsilon,
                y: Quantity::N,
                curves: [Finite(1), Finite(2), Finite(5), Finite(10), Finite(20), Infinite]
                    .into_iter()
                    .map(|m| CurveSpec {
                        id: m_label(m),
                        base: zt(2, m, 1.0, 1e5),
                        d_values: range(2, 60),
                    })
                    .collect(),
                exclude_suboptimal: true,
                reconstructed: vec!["M values {1,2,5,10,20,inf}", "d grid", "g=1"],
            },
            FigurePreset::Fig8a => FigureSpec {
                preset: self,
                x: Quantity::D,
                y: Quantity::N,
                curves: [0.1, 0.5, 1.0, 2.0]
                    .into_iter()
                    .map(|g| CurveSpec {
                        id: format!("g={g}"),
                        base: zt(2, Infinite, g, 10.0),
                        d_values: range(2, 80),
                    })
                    .collect(),
                exclude_suboptimal: false,
                reconstructed: vec!["g values {0.1,0.5,1,2}", "M=inf", "d grid"],
            },
            FigurePreset::Fig8b => FigureSpec {
                preset: self,
                x: Quantity::D,
                y: Quantity::R,
                curves: [Finite(1), Finite(2), Finite(5), Finite(10), Infinite]
                    .into_iter()
                    .map(|m| CurveSpec {
                        id: m_label(m),
                        base: zt(2, m, 1.0, 1e3),
                        d_values: range(2, 60),
                    })
                    .collect(),
                exclude_suboptimal: false,
                reconstructed: vec!["finite M values {1,2,5,10}", "d grid"],
            },
            FigurePreset::Fig9 => FigureSpec {
                preset: self,
                x: Quantity::R,
                y: Quantity::N,
                curves: [0.5, 1.0, 2.0, 5.0]
                    .into_iter()
                    .map(|g| CurveSpec {
                        id: format!("g={g}"),
                        base: zt(2, Infinite, g, 25.0),
                        d_values: range(2, 80),
                    })
                    .collect(),
                exclude_suboptimal: false,
                reconstructed: vec!["g values {0.5,1,2,5}", "d grid"],
            },
        }
    }
}

/// One long-format data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub curve: String,
    pub d: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub spec: FigureSpec,
    pub points: Vec<FigurePoint>,
    /// `(curve, d, reason)` for points that could not be plotted.
    pub skipped: Vec<(String, u64, String)>,
}

fn quantity(q: Quantity, d: u64, row: &SweepRow) -> Option<f64> {
    match q {
        Quantity::D => Some(d as f64),
        Quantity::N => row.get(Metric::N),
        Quantity::R => row.get(Metric::R),
        Quantity::Epsilon => row.get(Metric::Epsilon),
    }
}

/// Keep points up to (not including) the first `d` at which both `N` and
/// `R` drop relative to the previous `d`.
pub fn exclude_suboptimal(rows: &[(u64, f64, f64)]) -> usize {
    for i in 1..rows.len() {
        let (_, n0, r0) = rows[i - 1];
        let (_, n1, r1) = rows[i];
        if n1 < n0 && r1 < r0 {
            return i;
        }
    }
    rows.len()
}

pub fn run_figure_spec(spec: &FigureSpec) -> FigureTable {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for curve in &spec.curves {
        let rows: Vec<SweepRow> = curve
            .d_values
            .par_iter()
            .map(|&d| evaluate_point(&curve.base.with_d(d), d as f64))
            .collect();
        let mut pts: Vec<(u64, &SweepRow)> = curve.d_values.iter().copied().zip(rows.iter()).collect();
        if spec.exclude_suboptimal {
            let ok: Vec<(u64, &SweepRow)> = pts.iter().copied().filter(|(_, r)| r.status == RowStatus::Ok).collect();
            let nr: Vec<(u64, f64, f64)> = ok
                .iter()
                .map(|(d, r)| (*d, r.get(Metric::N).unwrap(), r.get(Metric::R).unwrap()))
                .collect();
            let keep = exclude_suboptimal(&nr);
            for (d, _) in &ok[keep..] {
                skipped.push((curve.id.clone(), *d, "sub-optimal".to_string()));
            }
            let cutoff = ok.get(keep).map(|(d, _)| *d);
            pts.retain(|(d, _)| cutoff.map_or(true, |c| *d < c));
        }
        for (d, row) in pts {
            match (quantity(spec.x, d, row), quantity(spec.y, d, row)) {
                (Some(x), Some(y)) => points.push(FigurePoint {
                    curve: curve.id.clone(),
                    d,
                    x,
                    y,
                }),
                _ => skipped.push((curve.id.clone(), d, status_name(row.status).to_string())),
            }
        }
    }
    FigureTable {
        spec: spec.clone(),
        points,
        skipped,
    }
}

pub fn run_figure(preset: FigurePreset) -> FigureTable {
    run_figure_spec(&preset.spec())
}

impl FigureTable {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# figure={}", self.spec.preset)?;
        writeln!(out, "# x={}", self.spec.x.name())?;
        writeln!(out, "# y={}", self.spec.y.name())?;
        writeln!(out, "# beta_c=inf")?;
        writeln!(out, "# beta_h=0")?;
        writeln!(out, "# e_c=1")?;
        writeln!(out, "# e_h=2")?;
        for c in &self.spec.curves {
            writeln!(
                out,
                "# curve {}: M={} g={} c={}",
                c.id,
                c.base.machines,
                fmt_f64(c.base.g),
                fmt_f64(c.base.c)
            )?;
        }
        for r in &self.spec.reconstructed {
            writeln!(out, "# reconstructed={r}")?;
        }
        writeln!(out, "# tool_version={}", env!("CARGO_PKG_VERSION"))?;
        for (c, d, why) in &self.skipped {
            writeln!(out, "# skipped {c} d={d}: {why}")?;
        }
        writeln!(out, "curve_id,x,y")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", csv_text(&p.curve), fmt_f64(p.x), fmt_f64(p.y))?;
        }
        Ok(())
    }

    pub fn curve(&self, id: &str) -> Vec<&FigurePoint> {
        self.points.iter().filter(|p| p.curve == id).collect()
    }
}

// ---------------------------------------------------------------------------
// Oracle comparison

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub d: u64,
    pub machines: String,
    pub beta_c: f64,
    pub beta_h: f64,
    pub dim: Option<u128>,
    /// Largest deviation of any applicable closed form from the oracle.
    pub max_error: Option<f64>,
    pub status: CheckStatus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tolerance: f64,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != CheckStatus::Fail)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# tolerance={}", fmt_f64(self.tolerance))?;
        writeln!(out, "# tool_version={}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "d,M,beta_c,beta_h,dim,max_error,status,message")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.d,
                r.machines,
                fmt_f64(r.beta_c),
                fmt_f64(r.beta_h),
                r.dim.map(|x| x.to_string()).unwrap_or_default(),
                r.max_error.map(fmt_f64).unwrap_or_default(),
                match r.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "fail",
                    CheckStatus::Skipped => "skipped",
                },
                csv_text(&r.message)
            )?;
        }
        Ok(())
    }
}

pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Five small `(d, M)` instances, each at zero cold temperature with an
/// infinitely hot bath and at `beta_C E_C = 3`, `beta_H E_H = 0.2`.
pub fn default_oracle_grid() -> Vec<ClockParams> {
    let mut grid = Vec::new();
    for (d, m) in [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1)] {
        for (bc, bh) in [(f64::INFINITY, 0.0), (3.0, 0.1)] {
            grid.push(ClockParams {
                d,
                machines: Machines::Finite(m),
                g: 1.0,
                c: 1.0,
                beta_c: bc,
                beta_h: bh,
                e_c: 1.0,
                e_h: 2.0,
            });
        }
    }
    grid
}

/// Largest deviation between every closed form applicable to `params` and
/// the oracle on `times` evenly spaced points over two periods.
fn check_instance(params: &ClockParams, times: usize) -> Result<(u128, f64)> {
    let system = build_oracle(params)?;
    let span = 2.0 * PI / params.g;
    let ts: Vec<f64> = (0..times)
        .map(|i| span * i as f64 / (times.max(2) - 1) as f64)
        .collect();
    let exact = system.evolve(&ts);

    let mut forms = vec![TopLevelProfile::general(params)?];
    if params.d == 2 {
        forms.push(TopLevelProfile::horizontal_finite_t(params)?);
        if params.machines == Machines::Finite(1) {
            forms.push(TopLevelProfile::two_qubit(params)?);
        }
    }
    let mut worst: f64 = 0.0;
    for prof in &forms {
        for (t, p) in ts.iter().zip(&exact.p_top) {
            worst = worst.max((prof.evaluate(*t) - p).abs());
        }
    }
    Ok((system.dim as u128, worst))
}

pub fn run_oracle_check(grid: &[ClockParams], times: usize) -> OracleReport {
    let rows = grid
        .par_iter()
        .map(|p| {
            let mut row = OracleRow {
                d: p.d,
                machines: p.machines.to_string(),
                beta_c: p.beta_c,
                beta_h: p.beta_h,
                dim: oracle_dimension(p.d, p.machines),
                max_error: None,
                status: CheckStatus::Skipped,
                message: String::new(),
            };
            if row.dim.map_or(true, |d| d > ORACLE_DIM_LIMIT as u128) {
                row.message = format!(
                    "dimension {} exceeds the dense limit {ORACLE_DIM_LIMIT}",
                    row.dim.map(|d| d.to_string()).unwrap_or_else(|| "unbounded".into())
                );
                return row;
            }
            match check_instance(p, times) {
                Ok((_, err)) => {
                    row.max_error = Some(err);
                    row.status = if err <= ORACLE_TOLERANCE {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                }
                Err(e) => {
                    row.status = CheckStatus::Fail;
                    row.message = e.to_string();
                }
            }
            row
        })
        .collect();
    OracleReport {
        tolerance: ORACLE_TOLERANCE,
        rows,
    }
}
