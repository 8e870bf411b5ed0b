//! Figure presets: fixed sweeps that regenerate the standard panels.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{run_sweep, solve, with_pool, Axis, Cell, Horizon, Metric, NamedTable, Param, PlotHint, SweepSpec, Table};
use crate::analysis::{concurrence, find_peak};
use crate::error::{ConfigError, Error};
use crate::model::{SystemConfig, Variant};

pub const PRESET_IDS: [&str; 9] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig4d"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    /// Revivals for three separations at `γt_d = 5`, non-chiral coupling.
    Fig2a,
    /// Entanglement preservation at `d = λ₀/8`, `t_d ≈ τ`.
    Fig2b,
    /// Concurrence against chirality and time at zero delay.
    Fig3a,
    /// Peak concurrence and its time against chirality.
    Fig3b,
    /// Peak concurrence against the emitter-emitter delay.
    Fig3c,
    /// Peak concurrence against the mirror delay.
    Fig4a,
    /// Peak concurrence against the separation near one wavelength.
    Fig4b,
    /// Peak concurrence against detuning.
    Fig4c,
    /// Detuning robustness: near-unidirectional mirror vs mirrorless.
    Fig4d,
}

impl PresetId {
    pub const ALL: [PresetId; 9] = [
        PresetId::Fig2a,
        PresetId::Fig2b,
        PresetId::Fig3a,
        PresetId::Fig3b,
        PresetId::Fig3c,
        PresetId::Fig4a,
        PresetId::Fig4b,
        PresetId::Fig4c,
        PresetId::Fig4d,
    ];

    pub fn name(self) -> &'static str {
        PRESET_IDS[self as usize]
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        PresetId::ALL.into_iter().find(|p| p.name() == s).ok_or(ConfigError::UnknownPreset(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    /// Replaces the preset's horizon rule for every point.
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub threads: Option<usize>,
    /// Mirror delay for fig2b; defaults to each chirality's mirrorless peak time.
    pub feedback_delay: Option<f64>,
    /// Sampling interval of trajectory tables.
    pub sample_dt: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { horizon: None, step: None, threads: None, feedback_delay: None, sample_dt: 0.05 }
    }
}

/// Chiralities drawn as separate curves in the fig3c/fig4 panels.
const CURVE_RATIOS: [f64; 3] = [1.1, 1.5, 2.0];

fn long_for_small_ratio() -> Horizon {
    Horizon::ByChirality { base: 40.0, extended: 80.0, threshold: 1.5 }
}

fn zero_delay(r: f64) -> Result<SystemConfig<f64>, ConfigError> {
    SystemConfig::from_chirality(r)
}

/// Runs a preset and returns its tables; the first is named after the preset.
pub fn run_preset(id: PresetId, opts: &PresetOptions) -> Result<Vec<NamedTable>, Error> {
    if let Some(h) = opts.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ConfigError::InvalidSettings(format!("horizon must be positive, got {h}")).into());
        }
    }
    let horizon = |rule: Horizon| opts.horizon.map_or(rule, Horizon::Fixed);
    let sweep = |base: SystemConfig<f64>, axes: Vec<Axis>, metrics: Vec<Metric>, rule: Horizon| {
        SweepSpec::new(base, axes)
            .with_metrics(metrics)
            .with_horizon(horizon(rule))
            .with_step(opts.step)
            .with_threads(opts.threads)
            .with_sample_dt(opts.sample_dt)
    };
    let peaks = vec![Metric::CMax, Metric::TauPeak];
    let named = |table: Table| vec![NamedTable { name: id.name().to_string(), table }];

    let tables = match id {
        PresetId::Fig2a => {
            let mut out: Option<Table> = None;
            for variant in [Variant::SemiInfinite, Variant::Infinite] {
                let base = SystemConfig::new(0.5, 0.5)?.with_delays(5.0, 0.0).with_variant(variant);
                let axis = Axis::list(Param::ThetaD, &[FRAC_PI_4, FRAC_PI_2, PI]);
                let t = run_sweep(&sweep(base, vec![axis], vec![Metric::Trajectory], Horizon::Fixed(40.0)))?;
                let t =
                    prepend(map_column(t, "theta_d", "d_over_lambda", |th| th / TAU), "variant", variant_cell(variant));
                out = Some(match out {
                    None => t,
                    Some(mut acc) => {
                        acc.append(t);
                        acc
                    }
                });
            }
            named(out.expect("two variants").with_plot(PlotHint::Lines {
                x: "t".into(),
                y: "concurrence".into(),
                series: vec!["variant".into(), "d_over_lambda".into()],
                log_x: false,
            }))
        }
        PresetId::Fig2b => named(fig2b(opts, horizon(Horizon::Fixed(40.0)))?),
        PresetId::Fig3a => {
            let axis = Axis::log(Param::Ratio, 1.05, 20.0, 40);
            let spec = sweep(zero_delay(2.0)?, vec![axis], vec![Metric::Trajectory], Horizon::Fixed(80.0))
                .with_sample_dt(opts.sample_dt.max(0.5));
            named(run_sweep(&spec)?)
        }
        PresetId::Fig3b => {
            let axis = Axis::log(Param::Ratio, 1.05, 20.0, 40);
            named(run_sweep(&sweep(zero_delay(2.0)?, vec![axis], peaks, long_for_small_ratio()))?)
        }
        PresetId::Fig3c => {
            let axes = vec![Axis::list(Param::Ratio, &CURVE_RATIOS), Axis::log(Param::TauDd, 1e-3, 1e-1, 9)];
            named(run_sweep(&sweep(zero_delay(2.0)?, axes, peaks, long_for_small_ratio()))?)
        }
        PresetId::Fig4a => {
            let delays = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0];
            let axes =
                vec![Axis::list(Param::Ratio, &CURVE_RATIOS), Axis::list(Param::TauFb, &delays).with_log_plot(true)];
            named(run_sweep(&sweep(zero_delay(2.0)?, axes, peaks, long_for_small_ratio()))?)
        }
        PresetId::Fig4b => {
            let phases: Vec<f64> = Axis::linear(Param::ThetaD, 0.85, 1.15, 61).values.iter().map(|d| d * TAU).collect();
            let axes = vec![Axis::list(Param::Ratio, &CURVE_RATIOS), Axis::list(Param::ThetaD, &phases)];
            let table = run_sweep(&sweep(zero_delay(2.0)?, axes, peaks, long_for_small_ratio()))?;
            let table = map_column(table, "theta_d", "d_over_lambda", |th| {
                let d = th / TAU;
                if d < 0.5 {
                    d + 1.0
                } else {
                    d
                }
            });
            let table = table.with_plot(PlotHint::Lines {
                x: "d_over_lambda".into(),
                y: "c_max".into(),
                series: vec!["ratio".into()],
                log_x: false,
            });
            let bounds = fig4b_bounds(opts, horizon(long_for_small_ratio()))?;
            vec![
                NamedTable { name: id.name().to_string(), table },
                NamedTable { name: format!("{}_bounds", id.name()), table: bounds },
            ]
        }
        PresetId::Fig4c => {
            let axes =
                vec![Axis::list(Param::Ratio, &[1.1, 1.5, 2.0, 20.0]), Axis::linear(Param::Delta, -1.0, 1.0, 81)];
            named(run_sweep(&sweep(zero_delay(2.0)?, axes, peaks, long_for_small_ratio()))?)
        }
        PresetId::Fig4d => {
            let mut out: Option<Table> = None;
            for (variant, r) in [(Variant::SemiInfinite, 100.0), (Variant::Infinite, 19.0)] {
                let base = zero_delay(r)?.with_variant(variant);
                let axes = vec![Axis::linear(Param::Delta, -1.0, 1.0, 81)];
                let t = run_sweep(&sweep(base, axes, peaks.clone(), long_for_small_ratio()))?;
                let t = prepend(prepend(t, "ratio", Cell::Num(r)), "variant", variant_cell(variant));
                out = Some(match out {
                    None => t,
                    Some(mut acc) => {
                        acc.append(t);
                        acc
                    }
                });
            }
            named(out.expect("two variants").with_plot(PlotHint::Lines {
                x: "delta".into(),
                y: "c_max".into(),
                series: vec!["variant".into()],
                log_x: false,
            }))
        }
    };
    Ok(tables)
}

fn variant_cell(v: Variant) -> Cell {
    Cell::Text(v.to_string())
}

fn prepend(mut table: Table, name: &str, value: Cell) -> Table {
    table.columns.insert(0, name.to_string());
    for row in &mut table.rows {
        row.insert(0, value.clone());
    }
    table
}

fn map_column(mut table: Table, old: &str, new: &str, f: impl Fn(f64) -> f64) -> Table {
    let i = table.column_index(old).expect("column present");
    table.columns[i] = new.to_string();
    for row in &mut table.rows {
        if let Cell::Num(x) = row[i] {
            row[i] = Cell::Num(f(x));
        }
    }
    table
}

fn sample_rows(
    labels: &[Cell],
    result: &Result<crate::dde::Trajectory<f64>, Error>,
    horizon: f64,
    dt: f64,
) -> Vec<Vec<Cell>> {
    match result {
        Err(e) => {
            let mut row = labels.to_vec();
            row.extend([Cell::Missing, Cell::Missing, Cell::Text(format!("failed: {e}"))]);
            vec![row]
        }
        Ok(traj) => super::sample_times(horizon, dt)
            .into_iter()
            .map(|t| {
                let mut row = labels.to_vec();
                row.extend([Cell::Num(t), Cell::Num(concurrence(&traj.at(t))), Cell::from("ok")]);
                row
            })
            .collect(),
    }
}

/// Mirror and mirrorless curves at `d = λ₀/8` for `r ∈ {1, 2, 20}`. The
/// mirror delay defaults to the mirrorless peak time of the same `r`.
fn fig2b(opts: &PresetOptions, rule: Horizon) -> Result<Table, Error> {
    let ratios = [1.0, 2.0, 20.0];
    let configs: Vec<SystemConfig<f64>> = ratios
        .iter()
        .map(|&r| Ok(SystemConfig::from_chirality(r)?.with_phases(0.0, FRAC_PI_4)))
        .collect::<Result<_, ConfigError>>()?;
    let run = || -> Vec<Vec<Vec<Cell>>> {
        configs
            .par_iter()
            .zip(ratios.par_iter())
            .map(|(base, &r)| {
                let inf = base.with_variant(Variant::Infinite);
                let h_inf = rule.for_config(&inf);
                let reference = solve(&inf, h_inf, opts.step);
                let tau = reference.as_ref().ok().map(|tr| find_peak(tr).tau_peak);
                let mut rows = sample_rows(
                    &[variant_cell(Variant::Infinite), Cell::Num(r), Cell::Missing],
                    &reference,
                    h_inf,
                    opts.sample_dt,
                );
                let semi = match opts.feedback_delay.or(tau) {
                    Some(t_d) => {
                        let cfg = base.with_delays(t_d, 0.0).with_variant(Variant::SemiInfinite);
                        let h = rule.for_config(&cfg);
                        let res = solve(&cfg, h, opts.step);
                        sample_rows(
                            &[variant_cell(Variant::SemiInfinite), Cell::Num(r), Cell::Num(t_d)],
                            &res,
                            h,
                            opts.sample_dt,
                        )
                    }
                    None => vec![vec![
                        variant_cell(Variant::SemiInfinite),
                        Cell::Num(r),
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        Cell::from("failed: no reference peak time"),
                    ]],
                };
                rows.extend(semi);
                rows
            })
            .collect()
    };
    let mut table =
        Table::new(["variant", "ratio", "tau_fb", "t", "concurrence", "status"]).with_plot(PlotHint::Lines {
            x: "t".into(),
            y: "concurrence".into(),
            series: vec!["variant".into(), "ratio".into()],
            log_x: false,
        });
    for row in with_pool(opts.threads, run)?.into_iter().flatten() {
        table.push(row);
    }
    Ok(table)
}

/// Largest relative displacement `Δd/λ₀` of the second emitter from one
/// wavelength (towards larger `d` for `side > 0`, smaller otherwise) that
/// keeps the peak concurrence at or above `target`, by bisection on
/// `[0, 1/4]`. `None` when the optimum itself is below target or the whole
/// interval stays above it.
pub fn fig4b_bound(
    ratio: f64,
    side: f64,
    target: f64,
    horizon: Horizon,
    step: Option<f64>,
) -> Result<Option<f64>, Error> {
    let base = zero_delay(ratio)?;
    let c_max = |u: f64| -> Result<f64, Error> {
        let cfg = base.with_phases(0.0, TAU * (1.0 + side.signum() * u));
        Ok(find_peak(&solve(&cfg, horizon.for_config(&cfg), step)?).c_max)
    };
    let (mut lo, mut hi) = (0.0, 0.25);
    if c_max(lo)? < target || c_max(hi)? >= target {
        return Ok(None);
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if c_max(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn fig4b_bounds(opts: &PresetOptions, rule: Horizon) -> Result<Table, Error> {
    let jobs: Vec<(f64, f64)> = CURVE_RATIOS.iter().flat_map(|&r| [(r, -1.0), (r, 1.0)]).collect();
    let run = || -> Vec<Result<Option<f64>, Error>> {
        jobs.par_iter().map(|&(r, side)| fig4b_bound(r, side, 0.9, rule, opts.step)).collect()
    };
    let results = with_pool(opts.threads, run)?;
    let mut table =
        Table::new(["ratio", "bound_minus", "bound_plus", "bound_over_lambda", "lambda_over_bound", "status"]);
    for (k, &r) in CURVE_RATIOS.iter().enumerate() {
        let (minus, plus) = (&results[2 * k], &results[2 * k + 1]);
        let status = match (minus, plus) {
            (Err(e), _) | (_, Err(e)) => Cell::Text(format!("failed: {e}")),
            _ => Cell::from("ok"),
        };
        let minus = minus.as_ref().ok().copied().flatten();
        let plus = plus.as_ref().ok().copied().flatten();
        let bound = minus.zip(plus).map(|(a, b)| a.min(b));
        table.push(vec![Cell::Num(r), minus.into(), plus.into(), bound.into(), bound.map(|b| 1.0 / b).into(), status]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in PresetId::ALL {
            assert_eq!(id.name().parse::<PresetId>().unwrap(), id);
        }
        assert_eq!("FIG3B".parse::<PresetId>().unwrap(), PresetId::Fig3b);
        assert!(matches!("fig5".parse::<PresetId>(), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn map_and_prepend() {
        let mut t = Table::new(["theta_d", "status"]);
        t.push(vec![Cell::Num(PI), Cell::from("ok")]);
        let t = prepend(map_column(t, "theta_d", "d_over_lambda", |x| x / TAU), "variant", Cell::from("infinite"));
        assert_eq!(t.columns, vec!["variant", "d_over_lambda", "status"]);
        assert_eq!(t.rows[0][1], Cell::Num(0.5));
    }
}
