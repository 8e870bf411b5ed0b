//! Method-of-steps integration of the delay equations.
//!
//! Classical RK4 on a grid that contains every propagated breakpoint
//! `n₁·τ_dd + n₂·τ_fb`. Heaviside factors are frozen at the start of each
//! step, and the history keeps one-sided derivatives at the nodes where a
//! coupling switches on, so both the stepper and the Hermite interpolant
//! only ever see smooth pieces.

use crate::analysis::concurrence;
use crate::error::{ConfigError, IntegrationError};
use crate::model::{f64_of, AmplitudePair, DelayModel, SystemConfig, Variant};
use crate::scalar::Real;

/// How delayed values are reconstructed between stored nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    CubicHermite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    /// Largest step; the grid is refined further so breakpoints are nodes.
    pub step: T,
    pub horizon: T,
    pub interpolation: Interpolation,
    pub breakpoint_cap: usize,
}

impl<T: Real> SolverSettings<T> {
    pub const DEFAULT_BREAKPOINT_CAP: usize = 10_000;

    /// Default settings for `config`: step `min(10⁻³, τ_min/16)` where
    /// `τ_min` is the smallest positive delay in play.
    pub fn for_config(config: &SystemConfig<T>, horizon: T) -> Self {
        Self {
            step: Self::default_step(config),
            horizon,
            interpolation: Interpolation::default(),
            breakpoint_cap: Self::DEFAULT_BREAKPOINT_CAP,
        }
    }

    pub fn default_step(config: &SystemConfig<T>) -> T {
        let base = T::lit(1e-3);
        independent_delays(config).into_iter().filter(|&d| d > T::zero()).fold(base, |h, d| h.min(d / T::lit(16.0)))
    }

    pub fn with_step(mut self, step: T) -> Self {
        self.step = step;
        self
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn with_breakpoint_cap(mut self, cap: usize) -> Self {
        self.breakpoint_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.step.is_finite() && self.step > T::zero()) {
            return Err(ConfigError::InvalidSettings(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon.is_finite() && self.horizon > T::zero()) {
            return Err(ConfigError::InvalidSettings(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.step > self.horizon {
            return Err(ConfigError::InvalidSettings(format!("step {} exceeds horizon {}", self.step, self.horizon)));
        }
        if self.breakpoint_cap == 0 {
            return Err(ConfigError::InvalidSettings("breakpoint cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// The independent delays `(τ_dd, τ_fb)` used by the config's variant.
fn independent_delays<T: Real>(config: &SystemConfig<T>) -> Vec<T> {
    match config.variant {
        Variant::SemiInfinite => vec![config.tau_dd, config.tau_fb],
        Variant::Infinite => vec![config.tau_dd],
        Variant::MarkovLimit => Vec::new(),
    }
}

/// Sorted times `n₁·τ_dd + n₂·τ_fb ≤ horizon` (including 0) at which
/// derivative discontinuities can appear, deduplicated to within the time
/// tolerance. Delays the variant does not use are ignored.
pub fn breakpoints<T: Real>(config: &SystemConfig<T>, horizon: T, cap: usize) -> Result<Vec<T>, ConfigError> {
    let tol = T::time_tol(horizon);
    let mut delays: Vec<T> = independent_delays(config).into_iter().filter(|&d| d > T::zero()).collect();
    delays.sort_by(|a, b| a.partial_cmp(b).expect("finite delays"));
    delays.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let multiples = |d: T| -> Result<usize, ConfigError> {
        let n = ((horizon + tol) / d).floor();
        let n = n.to_usize().filter(|&n| n < cap).ok_or(ConfigError::BreakpointCap {
            count: n.to_usize().map_or(usize::MAX, |n| n.saturating_add(1)),
            cap,
        })?;
        Ok(n + 1)
    };

    let mut out = vec![T::zero()];
    match delays.as_slice() {
        [] => {}
        [d] => {
            let n = multiples(*d)?;
            out = (0..n).map(|k| T::count(k) * *d).collect();
        }
        [short, long, ..] => {
            let rows = multiples(*long)?;
            let row_len = multiples(*short)?;
            for n2 in 0..rows {
                let base = T::count(n2) * *long;
                let row: Vec<T> =
                    (0..row_len).map(|n1| base + T::count(n1) * *short).take_while(|&t| t <= horizon + tol).collect();
                out = merge_dedup(&out, &row, tol);
                if out.len() > cap {
                    return Err(ConfigError::BreakpointCap { count: out.len(), cap });
                }
            }
        }
    }
    if out.len() > cap {
        return Err(ConfigError::BreakpointCap { count: out.len(), cap });
    }
    Ok(out)
}

fn merge_dedup<T: Real>(a: &[T], b: &[T], tol: T) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&last) if next - last <= tol => {}
            _ => out.push(next),
        }
    }
    out
}

/// Step grid: every breakpoint is a node and no step exceeds `step`.
fn step_grid<T: Real>(bps: &[T], step: T, horizon: T) -> Vec<T> {
    let tol = T::time_tol(horizon);
    let mut anchors: Vec<T> = bps.iter().copied().filter(|&b| b < horizon - tol).collect();
    anchors.push(horizon);
    let mut grid = vec![anchors[0]];
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let m = (len / step - T::lit(1e-9)).ceil().max(T::one());
        let m = m.to_usize().expect("finite step count");
        let h = len / T::count(m);
        grid.extend((1..m).map(|i| a + T::count(i) * h));
        grid.push(b);
    }
    grid
}

/// Stored solution with derivatives at every node for dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer<T> {
    times: Vec<T>,
    values: Vec<AmplitudePair<T>>,
    /// Right-sided derivative at each node.
    derivs: Vec<AmplitudePair<T>>,
    /// Left-sided derivatives at the nodes where they differ, sorted by node.
    left_derivs: Vec<(usize, AmplitudePair<T>)>,
    interpolation: Interpolation,
}

impl<T: Real> HistoryBuffer<T> {
    pub fn new(t0: T, y0: AmplitudePair<T>, dy0: AmplitudePair<T>, interpolation: Interpolation) -> Self {
        Self { times: vec![t0], values: vec![y0], derivs: vec![dy0], left_derivs: Vec::new(), interpolation }
    }

    pub fn with_capacity(mut self, n: usize) -> Self {
        self.times.reserve(n);
        self.values.reserve(n);
        self.derivs.reserve(n);
        self
    }

    /// Appends a node. `left` is the derivative approaching from the
    /// previous step when it differs from the right-sided one.
    pub fn push(&mut self, t: T, y: AmplitudePair<T>, right: AmplitudePair<T>, left: Option<AmplitudePair<T>>) {
        debug_assert!(t > *self.times.last().expect("non-empty"), "history grid must increase");
        if let Some(l) = left {
            self.left_derivs.push((self.times.len(), l));
        }
        self.times.push(t);
        self.values.push(y);
        self.derivs.push(right);
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[AmplitudePair<T>] {
        &self.values
    }

    pub fn derivatives(&self) -> &[AmplitudePair<T>] {
        &self.derivs
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        *self.times.last().expect("non-empty")
    }

    fn left_deriv(&self, node: usize) -> AmplitudePair<T> {
        match self.left_derivs.binary_search_by_key(&node, |&(i, _)| i) {
            Ok(k) => self.left_derivs[k].1,
            Err(_) => self.derivs[node],
        }
    }

    /// Value at `s`; exact at stored nodes.
    ///
    /// # Panics
    /// If `s` lies outside the stored time range.
    pub fn interpolate(&self, s: T) -> AmplitudePair<T> {
        let tol = T::time_tol(self.end());
        assert!(
            s >= self.start() - tol && s <= self.end() + tol,
            "interpolation at {s} outside history [{}, {}]",
            self.start(),
            self.end()
        );
        let j = self.times.partition_point(|&t| t <= s).max(1) - 1;
        if self.times[j] == s || j + 1 == self.times.len() {
            return self.values[j];
        }
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let h = t1 - t0;
        let x = (s - t0) / h;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        match self.interpolation {
            Interpolation::Linear => y0 + (y1 - y0) * x,
            Interpolation::CubicHermite => {
                let one = T::one();
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                let x2 = x * x;
                let x3 = x2 * x;
                let h00 = two * x3 - three * x2 + one;
                let h10 = x3 - two * x2 + x;
                let h01 = three * x2 - two * x3;
                let h11 = x3 - x2;
                y0 * h00 + self.derivs[j] * (h10 * h) + y1 * h01 + self.left_deriv(j + 1) * (h11 * h)
            }
        }
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A solved trajectory: amplitudes on the step grid, dense history and the
/// concurrence series.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    history: HistoryBuffer<T>,
    pub concurrence: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn from_history(history: HistoryBuffer<T>) -> Self {
        let concurrence = history.values().iter().map(concurrence).collect();
        Self { history, concurrence }
    }

    pub fn times(&self) -> &[T] {
        self.history.times()
    }

    pub fn amps(&self) -> &[AmplitudePair<T>] {
        self.history.values()
    }

    pub fn history(&self) -> &HistoryBuffer<T> {
        &self.history
    }

    /// Dense output at `s` within the solved range.
    pub fn at(&self, s: T) -> AmplitudePair<T> {
        self.history.interpolate(s)
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn end_time(&self) -> T {
        self.history.end()
    }
}

/// Integrates the config's own equations from `initial` at `t = 0`.
pub fn integrate<T: Real>(
    config: &SystemConfig<T>,
    settings: &SolverSettings<T>,
    initial: AmplitudePair<T>,
) -> Result<Trajectory<T>, IntegrationError> {
    integrate_model(&DelayModel::from_config(config), config, settings, initial)
}

/// Integrates an explicit model; `config` supplies the delays that set the
/// breakpoint grid.
pub fn integrate_model<T: Real>(
    model: &DelayModel<T>,
    config: &SystemConfig<T>,
    settings: &SolverSettings<T>,
    initial: AmplitudePair<T>,
) -> Result<Trajectory<T>, IntegrationError> {
    config.validate()?;
    settings.validate()?;
    if !initial.is_finite() || initial.population() > T::one() + T::lit(1e-9).max(T::epsilon() * T::lit(8.0)) {
        return Err(ConfigError::InvalidSettings(format!(
            "initial state must be finite with |alpha|^2 + |beta|^2 <= 1, got {}",
            initial.population()
        ))
        .into());
    }

    let bps = breakpoints(config, settings.horizon, settings.breakpoint_cap)?;
    let grid = step_grid(&bps, settings.step, settings.horizon);
    let switches: Vec<T> = model.active_delays().into_iter().filter(|&d| d > T::zero()).collect();
    let open_count = |gate: T| {
        let tol = T::time_tol(gate);
        switches.iter().filter(|&&d| gate + tol >= d).count()
    };

    let t0 = grid[0];
    let dy0 = {
        let lookup = |_: T| initial;
        model.derivative_gated(t0, t0, &initial, &lookup)
    };
    let mut history = HistoryBuffer::new(t0, initial, dy0, settings.interpolation).with_capacity(grid.len());
    let two = T::lit(2.0);
    let six = T::lit(6.0);

    for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let h = t_next - t;
        let half = h / two;
        let y = *history.values().last().expect("non-empty");
        let k1 = *history.derivatives().last().expect("non-empty");
        let (y_next, left) = {
            let lookup = |s: T| history.interpolate(s);
            let f = |tt: T, yy: &AmplitudePair<T>| model.derivative_gated(tt, t, yy, &lookup);
            let k2 = f(t + half, &(y + k1 * half));
            let k3 = f(t + half, &(y + k2 * half));
            let k4 = f(t_next, &(y + k3 * h));
            let y_next = y + (k1 + k2 * two + k3 * two + k4) * (h / six);
            let left = (history.interpolation() == Interpolation::CubicHermite && open_count(t_next) != open_count(t))
                .then(|| f(t_next, &y_next));
            (y_next, left)
        };
        if !y_next.is_finite() {
            return Err(IntegrationError::NonFinite { time: f64_of(t_next) });
        }
        let right = {
            let lookup = |s: T| history.interpolate(s);
            model.derivative_gated(t_next, t_next, &y_next, &lookup)
        };
        history.push(t_next, y_next, right, left);
    }
    Ok(Trajectory::from_history(history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn cfg(tau_dd: f64, tau_fb: f64) -> SystemConfig<f64> {
        SystemConfig::new(0.4, 0.6).unwrap().with_delays(tau_fb, tau_dd)
    }

    #[test]
    fn breakpoints_zero_delays() {
        assert_eq!(breakpoints(&cfg(0.0, 0.0), 10.0, 100).unwrap(), vec![0.0]);
    }

    #[test]
    fn breakpoints_overlapping_combinations() {
        let bps = breakpoints(&cfg(1.0, 2.0), 5.0, 100).unwrap();
        assert_eq!(bps, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn breakpoints_incommensurate() {
        // Independent enumeration of n1*0.3 + n2*5 <= 6.
        let mut expected: Vec<f64> = Vec::new();
        for n2 in 0..=1 {
            for n1 in 0..=20 {
                let t = f64::from(n1) * 0.3 + f64::from(n2) * 5.0;
                if t <= 6.0 + 1e-12 {
                    expected.push(t);
                }
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let bps = breakpoints(&cfg(0.3, 5.0), 6.0, 100).unwrap();
        assert_eq!(bps.len(), expected.len());
        for (a, b) in bps.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(bps.iter().any(|&t| (t - 5.9).abs() < 1e-12));
        assert!(bps.iter().any(|&t| (t - 6.0).abs() < 1e-12));
    }

    #[test]
    fn breakpoints_respect_variant() {
        let c = cfg(1.0, 0.7).with_variant(Variant::Infinite);
        assert_eq!(breakpoints(&c, 3.0, 100).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        let c = cfg(1.0, 0.7).with_variant(Variant::MarkovLimit);
        assert_eq!(breakpoints(&c, 3.0, 100).unwrap(), vec![0.0]);
    }

    #[test]
    fn breakpoint_cap_reported() {
        let err = breakpoints(&cfg(0.001, 0.0), 80.0, 10_000).unwrap_err();
        assert!(matches!(err, ConfigError::BreakpointCap { cap: 10_000, .. }));
        let err = breakpoints(&cfg(0.01, 0.013), 80.0, 10_000).unwrap_err();
        assert!(matches!(err, ConfigError::BreakpointCap { .. }));
    }

    #[test]
    fn default_step_rule() {
        assert_eq!(SolverSettings::default_step(&cfg(0.0, 0.0)), 1e-3);
        assert_eq!(SolverSettings::default_step(&cfg(0.008, 5.0)), 0.0005);
        assert_eq!(SolverSettings::default_step(&cfg(0.0, 0.004)), 0.00025);
        let inf = cfg(0.0, 0.004).with_variant(Variant::Infinite);
        assert_eq!(SolverSettings::default_step(&inf), 1e-3);
    }

    #[test]
    fn grid_contains_breakpoints_and_respects_step() {
        let bps = vec![0.0, 0.3, 0.6, 0.9, 1.0];
        let grid = step_grid(&bps, 0.07, 1.25);
        for b in &bps {
            assert!(grid.contains(b), "missing {b}");
        }
        assert_eq!(*grid.last().unwrap(), 1.25);
        for w in grid.windows(2) {
            assert!(w[1] > w[0] && w[1] - w[0] <= 0.07 + 1e-15);
        }
    }

    #[test]
    fn settings_validation() {
        let s = SolverSettings::for_config(&cfg(0.0, 0.0), 1.0);
        assert!(s.validate().is_ok());
        assert!(s.with_step(0.0).validate().is_err());
        assert!(s.with_step(2.0).validate().is_err());
        assert!(SolverSettings { horizon: -1.0, ..s }.validate().is_err());
        assert!(s.with_breakpoint_cap(0).validate().is_err());
    }

    fn exp_history(interp: Interpolation) -> HistoryBuffer<f64> {
        let h = 1e-3;
        let f = |t: f64| AmplitudePair::new(Complex::new((-t / 2.0).exp(), 0.0), Complex::new(0.0, 0.0));
        let df = |t: f64| AmplitudePair::new(Complex::new(-0.5 * (-t / 2.0).exp(), 0.0), Complex::new(0.0, 0.0));
        let mut hist = HistoryBuffer::new(0.0, f(0.0), df(0.0), interp);
        for i in 1..=1000 {
            let t = f64::from(i) * h;
            hist.push(t, f(t), df(t), None);
        }
        hist
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        for interp in [Interpolation::Linear, Interpolation::CubicHermite] {
            let hist = exp_history(interp);
            for i in [0usize, 1, 500, 1000] {
                assert_eq!(hist.interpolate(hist.times()[i]), hist.values()[i]);
            }
        }
    }

    #[test]
    fn hermite_accuracy_mid_interval() {
        let hist = exp_history(Interpolation::CubicHermite);
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let s = (f64::from(i) + 0.5) * 1e-3;
            let err = (hist.interpolate(s).alpha.re - (-s / 2.0).exp()).abs();
            worst = worst.max(err);
        }
        assert!(worst < 1e-12, "worst {worst}");
    }

    #[test]
    fn constant_history_interpolates_to_constant() {
        let c = AmplitudePair::new(Complex::new(0.3, -0.1), Complex::new(0.2, 0.4));
        let mut hist = HistoryBuffer::new(0.0, c, AmplitudePair::zero(), Interpolation::CubicHermite);
        hist.push(0.5, c, AmplitudePair::zero(), None);
        hist.push(0.7, c, AmplitudePair::zero(), Some(AmplitudePair::zero()));
        for s in [0.0, 0.1, 0.33, 0.5, 0.61, 0.7] {
            assert!(hist.interpolate(s).max_abs_diff(&c) < 1e-15);
        }
    }

    #[test]
    #[should_panic(expected = "outside history")]
    fn interpolation_outside_coverage_panics() {
        exp_history(Interpolation::Linear).interpolate(1.5);
    }

    #[test]
    fn rejects_overpopulated_initial_state() {
        let c = cfg(0.0, 0.0);
        let s = SolverSettings::for_config(&c, 1.0);
        let y0 = AmplitudePair::new(Complex::new(1.0, 0.0), Complex::new(0.5, 0.0));
        assert!(matches!(integrate(&c, &s, y0), Err(IntegrationError::Config(_))));
    }

    #[test]
    fn trajectory_starts_at_zero_and_ends_at_horizon() {
        let c = cfg(0.25, 1.0);
        let s = SolverSettings::for_config(&c, 3.0);
        let traj = integrate(&c, &s, AmplitudePair::first_excited()).unwrap();
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(traj.end_time(), 3.0);
        assert_eq!(traj.times().len(), traj.amps().len());
        assert_eq!(traj.concurrence.len(), traj.amps().len());
    }
}
