//! Parameter sweeps over one or two config axes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{death_time, find_peak, DEFAULT_DEATH_EPS};
use crate::dde::{integrate, SolverSettings, Trajectory};
use crate::error::{ConfigError, Error};
use crate::model::{AmplitudePair, SystemConfig};
use crate::scalar::wrap_phase;

mod emit;
mod preset;

pub use emit::{emit, format_number, read_csv, render_csv, render_json, render_svg, write_tables, Format};
pub use preset::{fig4b_bound, run_preset, PresetId, PresetOptions, PRESET_IDS};

/// Breakpoint cap used by sweeps; small delays over long horizons need many.
pub const SWEEP_BREAKPOINT_CAP: usize = 1_000_000;

/// A config field a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    /// Chirality `γ_R/γ_L`, keeping `γ_L + γ_R` fixed.
    Ratio,
    Theta1,
    ThetaD,
    TauFb,
    TauDd,
    Delta,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Ratio => "ratio",
            Param::Theta1 => "theta1",
            Param::ThetaD => "theta_d",
            Param::TauFb => "tau_fb",
            Param::TauDd => "tau_dd",
            Param::Delta => "delta",
        }
    }

    /// Returns `config` with this parameter set to `value`.
    pub fn apply(self, config: &SystemConfig<f64>, value: f64) -> Result<SystemConfig<f64>, ConfigError> {
        let mut c = *config;
        match self {
            Param::Ratio => {
                let unit = SystemConfig::<f64>::from_chirality(value)?;
                let g = config.gamma();
                c.gamma_l = unit.gamma_l * g;
                c.gamma_r = unit.gamma_r * g;
            }
            Param::Theta1 => c.theta1 = wrap_phase(value),
            Param::ThetaD => c.theta_d = wrap_phase(value),
            Param::TauFb => c.tau_fb = value,
            Param::TauDd => c.tau_dd = value,
            Param::Delta => c.delta = value,
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ratio" | "gamma_ratio" | "r" => Param::Ratio,
            "theta1" => Param::Theta1,
            "theta_d" | "thetad" => Param::ThetaD,
            "tau_fb" | "t_d" => Param::TauFb,
            "tau_dd" | "dt" => Param::TauDd,
            "delta" => Param::Delta,
            other => return Err(ConfigError::InvalidSweep(format!("unknown parameter `{other}`"))),
        })
    }
}

/// One sweep dimension: a parameter and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
    /// Values are logarithmically spaced; plots use a log axis.
    pub log: bool,
}

impl Axis {
    /// `count` evenly spaced values; the endpoints are exact.
    pub fn linear(param: Param, min: f64, max: f64, count: usize) -> Self {
        let values = spaced(min, max, count, |a, b, f| a + (b - a) * f);
        Self { param, values, log: false }
    }

    pub fn log(param: Param, min: f64, max: f64, count: usize) -> Self {
        let values = spaced(min, max, count, |a, b, f| (a.ln() + (b.ln() - a.ln()) * f).exp());
        Self { param, values, log: true }
    }

    pub fn list(param: Param, values: &[f64]) -> Self {
        Self { param, values: values.to_vec(), log: false }
    }

    pub fn with_log_plot(mut self, log: bool) -> Self {
        self.log = log;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::InvalidSweep(format!("axis {}: {m}", self.param)));
        if self.values.len() < 2 {
            return bad(format!("needs at least 2 points, got {}", self.values.len()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite".into());
        }
        if self.log && self.values.iter().any(|&v| v <= 0.0) {
            return bad("log spacing needs positive values".into());
        }
        Ok(())
    }
}

fn spaced(min: f64, max: f64, count: usize, at: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let last = count.saturating_sub(1).max(1);
    (0..count)
        .map(|i| match i {
            0 => min,
            i if i == last => max,
            i => at(min, max, i as f64 / last as f64),
        })
        .collect()
}

/// Parses `param:min:max:count[:log]` or `param=v1,v2,...`.
impl FromStr for Axis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            ConfigError::InvalidSweep(format!("expected `param:min:max:count[:log]` or `param=v1,v2,...`, got `{s}`"))
        };
        let num = |p: &str| crate::config_file::parse_value(p).ok_or_else(bad);
        let axis = if let Some((param, list)) = s.split_once('=') {
            let values = list.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Axis::list(param.parse()?, &values)
        } else {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if !(4..=5).contains(&parts.len()) {
                return Err(bad());
            }
            let (param, min, max) = (parts[0].parse()?, num(parts[1])?, num(parts[2])?);
            let count = parts[3].parse().map_err(|_| bad())?;
            match parts.get(4).map(|p| p.to_ascii_lowercase()).as_deref() {
                None | Some("lin") | Some("linear") => Axis::linear(param, min, max, count),
                Some("log") => {
                    if !(min > 0.0 && max > 0.0) {
                        return Err(ConfigError::InvalidSweep(format!(
                            "axis {param}: log spacing needs positive bounds"
                        )));
                    }
                    Axis::log(param, min, max, count)
                }
                Some(_) => return Err(bad()),
            }
        };
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    CMax,
    TauPeak,
    TDeath,
    /// Sampled concurrence and amplitudes; turns the table into one row per
    /// grid point and time sample.
    Trajectory,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::CMax => "c_max",
            Metric::TauPeak => "tau_peak",
            Metric::TDeath => "t_death",
            Metric::Trajectory => "trajectory",
        }
    }
}

impl FromStr for Metric {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "c_max" | "cmax" => Metric::CMax,
            "tau_peak" | "tau" => Metric::TauPeak,
            "t_death" | "death" => Metric::TDeath,
            "trajectory" | "traj" => Metric::Trajectory,
            other => return Err(ConfigError::InvalidSweep(format!("unknown metric `{other}`"))),
        })
    }
}

/// Integration horizon for each sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    /// `extended` for points with chirality below `threshold`, else `base`.
    ByChirality {
        base: f64,
        extended: f64,
        threshold: f64,
    },
}

impl Horizon {
    pub fn for_config(&self, config: &SystemConfig<f64>) -> f64 {
        match *self {
            Horizon::Fixed(t) => t,
            Horizon::ByChirality { base, extended, threshold } => {
                if config.chirality() < threshold {
                    extended
                } else {
                    base
                }
            }
        }
    }

    fn max(&self) -> f64 {
        match *self {
            Horizon::Fixed(t) => t,
            Horizon::ByChirality { base, extended, .. } => base.max(extended),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig<f64>,
    pub axes: Vec<Axis>,
    pub metrics: Vec<Metric>,
    pub horizon: Horizon,
    /// Step override; `None` uses the per-point default.
    pub step: Option<f64>,
    pub death_eps: f64,
    /// Sampling interval of trajectory rows.
    pub sample_dt: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(base: SystemConfig<f64>, axes: Vec<Axis>) -> Self {
        Self {
            base,
            axes,
            metrics: vec![Metric::CMax, Metric::TauPeak, Metric::TDeath],
            horizon: Horizon::Fixed(40.0),
            step: None,
            death_eps: DEFAULT_DEATH_EPS,
            sample_dt: 0.05,
            threads: None,
        }
    }

    pub fn with_metrics(mut self, metrics: Vec<Metric>) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_step(mut self, step: Option<f64>) -> Self {
        self.step = step;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(ConfigError::InvalidSweep(format!("need 1 or 2 axes, got {}", self.axes.len())));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(ConfigError::InvalidSweep(format!("axis {} given twice", self.axes[0].param)));
        }
        if self.metrics.is_empty() {
            return Err(ConfigError::InvalidSweep("no metrics requested".into()));
        }
        if !(self.horizon.max() > 0.0 && self.horizon.max().is_finite()) {
            return Err(ConfigError::InvalidSettings("horizon must be positive".into()));
        }
        if !(self.death_eps > 0.0) {
            return Err(ConfigError::InvalidSweep("death threshold must be positive".into()));
        }
        if self.metrics.contains(&Metric::Trajectory) && !(self.sample_dt > 0.0) {
            return Err(ConfigError::InvalidSweep("sample interval must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::InvalidSweep("thread count must be at least 1".into()));
        }
        Ok(())
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            let values = &axis.values;
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

/// How a table is best drawn.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PlotHint {
    #[default]
    None,
    /// `y` against `x`, one curve per distinct value of the `series` columns.
    Lines {
        x: String,
        y: String,
        series: Vec<String>,
        log_x: bool,
    },
    Heatmap {
        x: String,
        y: String,
        z: String,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub plot: PlotHint,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), plot: PlotHint::None }
    }

    pub fn with_plot(mut self, plot: PlotHint) -> Self {
        self.plot = plot;
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn append(&mut self, other: Table) {
        assert_eq!(self.columns, other.columns, "cannot append tables with different headers");
        self.rows.extend(other.rows);
    }
}

/// A table and the file stem it is written under.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTable {
    pub name: String,
    pub table: Table,
}

/// Outcome of one grid point.
enum PointResult {
    Ok { trajectory: Trajectory<f64>, horizon: f64 },
    Failed(String),
}

/// Integrates `config` from the first emitter excited, with the sweep
/// breakpoint cap and an optional step override.
pub fn solve(config: &SystemConfig<f64>, horizon: f64, step: Option<f64>) -> Result<Trajectory<f64>, Error> {
    let mut settings = SolverSettings::for_config(config, horizon).with_breakpoint_cap(SWEEP_BREAKPOINT_CAP);
    if let Some(h) = step {
        settings = settings.with_step(h);
    }
    Ok(integrate(config, &settings, AmplitudePair::first_excited())?)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub(crate) fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, ConfigError> {
    match threads {
        None => Ok(f()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::InvalidSweep(format!("cannot start {n} worker threads: {e}")))?
            .install(f)),
    }
}

fn solve_point(spec: &SweepSpec, values: &[f64]) -> PointResult {
    let config = spec.axes.iter().zip(values).try_fold(spec.base, |cfg, (axis, &v)| axis.param.apply(&cfg, v));
    let config = match config {
        Ok(c) => c,
        Err(e) => return PointResult::Failed(e.to_string()),
    };
    let horizon = spec.horizon.for_config(&config);
    match solve(&config, horizon, spec.step) {
        Ok(trajectory) => PointResult::Ok { trajectory, horizon },
        Err(e) => PointResult::Failed(e.to_string()),
    }
}

fn scalar_cells(spec: &SweepSpec, result: &PointResult) -> Vec<Cell> {
    let scalars = spec.metrics.iter().filter(|m| **m != Metric::Trajectory);
    match result {
        PointResult::Failed(_) => scalars.map(|_| Cell::Missing).collect(),
        PointResult::Ok { trajectory, .. } => {
            let peak = find_peak(trajectory);
            scalars
                .map(|m| match m {
                    Metric::CMax => Cell::Num(peak.c_max),
                    Metric::TauPeak => Cell::Num(peak.tau_peak),
                    Metric::TDeath => death_time(trajectory, spec.death_eps).time().into(),
                    Metric::Trajectory => unreachable!(),
                })
                .collect()
        }
    }
}

fn status(result: &PointResult) -> Cell {
    match result {
        PointResult::Ok { .. } => Cell::from("ok"),
        PointResult::Failed(msg) => Cell::Text(format!("failed: {msg}")),
    }
}

/// Uniform sample times `0, dt, 2dt, …` up to `horizon`.
pub fn sample_times(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

fn header(spec: &SweepSpec) -> Vec<String> {
    let mut cols: Vec<String> = spec.axes.iter().map(|a| a.param.name().to_string()).collect();
    if spec.metrics.contains(&Metric::Trajectory) {
        cols.extend(["t", "concurrence", "alpha_re", "alpha_im", "beta_re", "beta_im"].map(String::from));
    }
    cols.extend(spec.metrics.iter().filter(|m| **m != Metric::Trajectory).map(|m| m.name().to_string()));
    cols.push("status".into());
    cols
}

/// Evaluates every grid point, in parallel when the pool allows.
///
/// Rows come out in row-major axis order whatever the scheduling. A point
/// whose config is invalid or whose integration fails keeps its row, with
/// empty metric cells and the reason in the `status` column.
pub fn run_sweep(spec: &SweepSpec) -> Result<Table, Error> {
    spec.validate()?;
    let points = spec.points();
    let eval = || -> Vec<Vec<Vec<Cell>>> { points.par_iter().map(|p| point_rows(spec, p)).collect() };
    let rows = with_pool(spec.threads, eval)?;
    let mut table = Table::new(header(spec));
    for row in rows.into_iter().flatten() {
        table.push(row);
    }
    table.plot = default_plot(spec);
    Ok(table)
}

fn point_rows(spec: &SweepSpec, point: &[f64]) -> Vec<Vec<Cell>> {
    let result = solve_point(spec, point);
    let axes: Vec<Cell> = point.iter().map(|&v| Cell::Num(v)).collect();
    let scalars = scalar_cells(spec, &result);
    let finish = |mut row: Vec<Cell>| {
        row.extend(scalars.iter().cloned());
        row.push(status(&result));
        row
    };
    if !spec.metrics.contains(&Metric::Trajectory) {
        return vec![finish(axes)];
    }
    match &result {
        PointResult::Failed(_) => {
            let mut row = axes;
            row.extend(std::iter::repeat_n(Cell::Missing, 6));
            vec![finish(row)]
        }
        PointResult::Ok { trajectory, horizon } => sample_times(*horizon, spec.sample_dt)
            .into_iter()
            .map(|t| {
                let y = trajectory.at(t);
                let mut row = axes.clone();
                row.extend(
                    [t, crate::analysis::concurrence(&y), y.alpha.re, y.alpha.im, y.beta.re, y.beta.im].map(Cell::Num),
                );
                finish(row)
            })
            .collect(),
    }
}

fn default_plot(spec: &SweepSpec) -> PlotHint {
    let names: Vec<String> = spec.axes.iter().map(|a| a.param.name().to_string()).collect();
    let first_scalar = spec.metrics.iter().find(|m| **m != Metric::Trajectory).map(|m| m.name().to_string());
    if spec.metrics.contains(&Metric::Trajectory) {
        if names.len() == 1 {
            return PlotHint::Heatmap { x: "t".into(), y: names[0].clone(), z: "concurrence".into() };
        }
        return PlotHint::Lines { x: "t".into(), y: "concurrence".into(), series: names, log_x: false };
    }
    let Some(y) = first_scalar else { return PlotHint::None };
    PlotHint::Lines {
        x: names[names.len() - 1].clone(),
        y,
        series: names[..names.len() - 1].to_vec(),
        log_x: spec.axes[spec.axes.len() - 1].log,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        assert_eq!(Axis::linear(Param::Delta, -1.0, 1.0, 5).values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let v = Axis::log(Param::TauDd, 1e-3, 1e-1, 3).values;
        assert_eq!(v[0], 1e-3);
        assert!((v[1] - 1e-2).abs() < 1e-15);
        assert_eq!(v[2], 1e-1);
    }

    #[test]
    fn axis_parse() {
        let a: Axis = "ratio:1.1:2:4:log".parse().unwrap();
        assert_eq!((a.param, a.values.len(), a.log), (Param::Ratio, 4, true));
        assert_eq!((a.values[0], a.values[3]), (1.1, 2.0));
        let b: Axis = "theta_d:0:pi:3".parse().unwrap();
        assert_eq!(b.values[2], std::f64::consts::PI);
        let c: Axis = "ratio=1.1, 1.5,2".parse().unwrap();
        assert_eq!(c.values, vec![1.1, 1.5, 2.0]);
        assert!("ratio=1.1".parse::<Axis>().is_err());
        assert!("ratio:1:2:1".parse::<Axis>().is_err());
        assert!("ratio:0:2:3:log".parse::<Axis>().is_err());
        assert!("gamma:0:2:3".parse::<Axis>().is_err());
    }

    #[test]
    fn spec_validation() {
        let base = SystemConfig::<f64>::from_chirality(2.0).unwrap();
        let axis = Axis::linear(Param::Ratio, 1.1, 2.0, 2);
        assert!(SweepSpec::new(base, vec![]).validate().is_err());
        assert!(SweepSpec::new(base, vec![axis.clone(), axis.clone(), axis.clone()]).validate().is_err());
        assert!(SweepSpec::new(base, vec![axis.clone(), axis.clone()]).validate().is_err());
        assert!(SweepSpec::new(base, vec![axis.clone()]).with_threads(Some(0)).validate().is_err());
        assert!(SweepSpec::new(base, vec![axis]).validate().is_ok());
    }

    #[test]
    fn points_row_major() {
        let base = SystemConfig::<f64>::from_chirality(2.0).unwrap();
        let spec = SweepSpec::new(
            base,
            vec![Axis::linear(Param::Ratio, 1.0, 2.0, 2), Axis::linear(Param::Delta, 0.0, 1.0, 3)],
        );
        let p = spec.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![1.0, 0.5]);
        assert_eq!(p[3], vec![2.0, 0.0]);
    }

    #[test]
    fn ratio_keeps_total_rate() {
        let base = SystemConfig::<f64>::new(1.0, 1.0).unwrap();
        let c = Param::Ratio.apply(&base, 3.0).unwrap();
        assert!((c.gamma_l - 0.5).abs() < 1e-15 && (c.gamma_r - 1.5).abs() < 1e-15);
        assert!(Param::Ratio.apply(&base, -1.0).is_err());
        assert!(Param::TauFb.apply(&base, -1.0).is_err());
    }

    #[test]
    fn failed_point_is_flagged() {
        let base = SystemConfig::<f64>::from_chirality(2.0).unwrap();
        let spec =
            SweepSpec::new(base, vec![Axis::linear(Param::TauDd, -1.0, 0.0, 2)]).with_horizon(Horizon::Fixed(2.0));
        let table = run_sweep(&spec).unwrap();
        assert_eq!(table.rows.len(), 2);
        let st = table.column_index("status").unwrap();
        assert!(matches!(&table.rows[0][st], Cell::Text(s) if s.starts_with("failed")));
        assert_eq!(table.rows[0][1], Cell::Missing);
        assert_eq!(table.rows[1][st], Cell::from("ok"));
    }
}
