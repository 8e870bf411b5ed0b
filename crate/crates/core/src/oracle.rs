//! Brute-force reference: the emitters coupled to an explicitly discretised
//! band of waveguide modes.
//!
//! Modes are labelled by their detuning `Δ = v(k − k₀)` from the carrier on
//! a uniform grid `[−K, K]`. Each emitter `m` at `x_m` couples to mode `Δ`
//! through the phase `k·x_m = θ_m + Δ·x_m/v`. In the mirror geometry one
//! standing-wave continuum carries both the left-moving amplitude and the
//! right-moving one with the reflection phase π; the mirrorless baseline
//! uses two independent travelling-wave continua. Nothing here uses the
//! delay equations, so agreement is a genuine check of them.

use num_complex::Complex;

use crate::dde::{HistoryBuffer, Interpolation, Trajectory};
use crate::error::{ConfigError, OracleError};
use crate::model::{f64_of, AmplitudePair, SystemConfig, Variant};
use crate::scalar::{polar, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings<T> {
    /// Half-width `K` of the mode band, in units of `γ`.
    pub bandwidth: T,
    /// Number of modes per continuum; odd so the carrier is a grid point.
    pub n_modes: usize,
    pub step: T,
    pub horizon: T,
    /// When false the second emitter is detached from the field.
    pub couple_second: bool,
}

impl<T: Real> OracleSettings<T> {
    pub const DEFAULT_BANDWIDTH: f64 = 160.0;
    pub const DEFAULT_MODES: usize = 6401;
    pub const DEFAULT_STEP: f64 = 2e-4;

    pub fn new(horizon: T) -> Self {
        Self {
            bandwidth: T::lit(Self::DEFAULT_BANDWIDTH),
            n_modes: Self::DEFAULT_MODES,
            step: T::lit(Self::DEFAULT_STEP),
            horizon,
            couple_second: true,
        }
    }

    pub fn with_resolution(mut self, bandwidth: T, n_modes: usize) -> Self {
        self.bandwidth = bandwidth;
        self.n_modes = n_modes;
        self
    }

    pub fn with_step(mut self, step: T) -> Self {
        self.step = step;
        self
    }

    pub fn single_emitter(mut self) -> Self {
        self.couple_second = false;
        self
    }

    /// Mode spacing `2K/(n − 1)`.
    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.bandwidth / T::count(self.n_modes - 1)
    }

    /// Period `2π/ΔΔ` after which the discrete comb rephases.
    pub fn recurrence_time(&self) -> T {
        T::TAU() / self.spacing()
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |msg: String| Err(ConfigError::InvalidSettings(msg).into());
        if self.n_modes < 3 || self.n_modes.is_multiple_of(2) {
            return bad(format!("n_modes must be odd and >= 3, got {}", self.n_modes));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > T::zero()) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.horizon.is_finite() && self.horizon > T::zero()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.step.is_finite() && self.step > T::zero() && self.step <= self.horizon) {
            return bad(format!("step must lie in (0, horizon], got {}", self.step));
        }
        // RK4 is stable for |hλ| up to ~2.8 on the imaginary axis.
        if self.step * self.bandwidth > T::lit(2.0) {
            return bad(format!(
                "step {} too large for bandwidth {} (step * bandwidth must be <= 2)",
                self.step, self.bandwidth
            ));
        }
        if self.horizon >= self.recurrence_time() {
            return Err(OracleError::BeyondRecurrence {
                horizon: f64_of(self.horizon),
                recurrence: f64_of(self.recurrence_time()),
            });
        }
        Ok(())
    }
}

/// One continuum of modes with its couplings to the two emitters.
///
/// `phi` is the amplitude density, so `Σ|φ|²·weight` is the photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<T> {
    pub detunings: Vec<T>,
    pub phi: Vec<Complex<T>>,
    pub weight: T,
    /// `g₁(Δ)`: emitter 1 sees `−i Σ g₁ φ w`.
    pub coupling1: Vec<Complex<T>>,
    pub coupling2: Vec<Complex<T>>,
}

impl<T: Real> FieldGrid<T> {
    fn vacuum(settings: &OracleSettings<T>) -> Self {
        let n = settings.n_modes;
        let w = settings.spacing();
        let detunings = (0..n).map(|j| T::count(j) * w - settings.bandwidth).collect();
        let zero = Complex::new(T::zero(), T::zero());
        Self { detunings, phi: vec![zero; n], weight: w, coupling1: vec![zero; n], coupling2: vec![zero; n] }
    }

    pub fn photon_number(&self) -> T {
        self.phi.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr()) * self.weight
    }
}

/// Builds the continua for `config`: one standing-wave line for the mirror
/// geometry, right- and left-moving lines for the mirrorless one.
pub fn field_grids<T: Real>(config: &SystemConfig<T>, settings: &OracleSettings<T>) -> Vec<FieldGrid<T>> {
    let two = T::lit(2.0);
    let x1 = config.tau_fb / two;
    let x2 = x1 + config.tau_dd;
    let theta = [config.theta1, config.theta1 + config.theta_d];
    let pos = [x1, x2];
    let norm = T::one() / T::TAU().sqrt();
    let (sl, sr) = (config.gamma_l.sqrt() * norm, config.gamma_r.sqrt() * norm);
    let i = Complex::new(T::zero(), T::one());
    let second = if settings.couple_second { T::one() } else { T::zero() };

    let kx = |m: usize, d: T| theta[m] + d * pos[m];
    let build = |coupling: &dyn Fn(usize, T) -> Complex<T>| {
        let mut grid = FieldGrid::vacuum(settings);
        for (j, &d) in grid.detunings.iter().enumerate() {
            grid.coupling1[j] = coupling(0, d);
            grid.coupling2[j] = coupling(1, d) * second;
        }
        grid
    };
    match config.variant {
        Variant::SemiInfinite | Variant::MarkovLimit => {
            // Left-mover e^{-ikx} minus the mirror-reflected right-mover e^{ikx}.
            vec![build(&|m, d| i * (polar(sl, -kx(m, d)) - polar(sr, kx(m, d))))]
        }
        Variant::Infinite => vec![build(&|m, d| i * polar(sr, kx(m, d))), build(&|m, d| i * polar(sl, -kx(m, d)))],
    }
}

/// Result of a k-space integration.
#[derive(Debug, Clone)]
pub struct OracleRun<T> {
    pub trajectory: Trajectory<T>,
    /// `|α|² + |β|² + Σ|φ|²w` at every sample.
    pub norm: Vec<T>,
    pub fields: Vec<FieldGrid<T>>,
}

impl<T: Real> OracleRun<T> {
    pub fn max_norm_drift(&self) -> T {
        self.norm.iter().fold(T::zero(), |m, n| m.max((*n - T::one()).abs()))
    }
}

struct Derivative<T> {
    emitters: AmplitudePair<T>,
    fields: Vec<Vec<Complex<T>>>,
}

fn derivative<T: Real>(
    grids: &[FieldGrid<T>],
    y: &AmplitudePair<T>,
    phi: &[Vec<Complex<T>>],
    half_delta: T,
    out: &mut Derivative<T>,
) {
    let minus_i = Complex::new(T::zero(), -T::one());
    let zero = Complex::new(T::zero(), T::zero());
    let (mut s1, mut s2) = (zero, zero);
    for ((grid, field), dfield) in grids.iter().zip(phi).zip(out.fields.iter_mut()) {
        let (mut a1, mut a2) = (zero, zero);
        for j in 0..field.len() {
            let p = field[j];
            let g1 = grid.coupling1[j];
            let g2 = grid.coupling2[j];
            a1 = a1 + g1 * p;
            a2 = a2 + g2 * p;
            let drive = g1.conj() * y.alpha + g2.conj() * y.beta;
            dfield[j] = minus_i * (p * grid.detunings[j] + drive);
        }
        s1 = s1 + a1 * grid.weight;
        s2 = s2 + a2 * grid.weight;
    }
    out.emitters = AmplitudePair::new(minus_i * (s1 + y.alpha * half_delta), minus_i * (s2 - y.beta * half_delta));
}

/// Integrates emitters plus field modes with RK4 from an empty field.
pub fn integrate_kspace<T: Real>(
    config: &SystemConfig<T>,
    settings: &OracleSettings<T>,
    initial: AmplitudePair<T>,
) -> Result<OracleRun<T>, OracleError> {
    config.validate()?;
    settings.validate()?;
    let mut grids = field_grids(config, settings);
    let half_delta = config.delta / T::lit(2.0);
    let n = settings.n_modes;
    let zero = Complex::new(T::zero(), T::zero());
    let steps = (settings.horizon / settings.step - T::lit(1e-9)).ceil().to_usize().expect("finite step count").max(1);
    let h = settings.horizon / T::count(steps);
    let (two, six) = (T::lit(2.0), T::lit(6.0));

    let mut phi: Vec<Vec<Complex<T>>> = grids.iter().map(|g| g.phi.clone()).collect();
    let mut stage: Vec<Vec<Complex<T>>> = phi.clone();
    let mut acc: Vec<Vec<Complex<T>>> = phi.clone();
    let mut k = Derivative { emitters: AmplitudePair::zero(), fields: vec![vec![zero; n]; grids.len()] };
    let mut y = initial;

    derivative(&grids, &y, &phi, half_delta, &mut k);
    let mut history =
        HistoryBuffer::new(T::zero(), y, k.emitters, Interpolation::CubicHermite).with_capacity(steps + 1);
    let mut norm = Vec::with_capacity(steps + 1);
    norm.push(y.population() + photons(&grids, &phi));

    for step in 0..steps {
        // k1 is already in `k`.
        let mut y_acc = k.emitters;
        for c in 0..grids.len() {
            for j in 0..n {
                acc[c][j] = k.fields[c][j];
                stage[c][j] = phi[c][j] + k.fields[c][j] * (h / two);
            }
        }
        let mut y_stage = y + k.emitters * (h / two);
        for (weight, next_scale) in [(two, h / two), (two, h), (T::one(), T::zero())] {
            derivative(&grids, &y_stage, &stage, half_delta, &mut k);
            y_acc += k.emitters * weight;
            y_stage = y + k.emitters * next_scale;
            for c in 0..grids.len() {
                for j in 0..n {
                    acc[c][j] = acc[c][j] + k.fields[c][j] * weight;
                    stage[c][j] = phi[c][j] + k.fields[c][j] * next_scale;
                }
            }
        }
        y = y + y_acc * (h / six);
        for c in 0..grids.len() {
            for j in 0..n {
                phi[c][j] = phi[c][j] + acc[c][j] * (h / six);
            }
        }
        let t = T::count(step + 1) * h;
        if !y.is_finite() {
            return Err(OracleError::NonFinite { time: f64_of(t) });
        }
        derivative(&grids, &y, &phi, half_delta, &mut k);
        history.push(t, y, k.emitters, None);
        norm.push(y.population() + photons(&grids, &phi));
    }

    for (grid, field) in grids.iter_mut().zip(phi) {
        grid.phi = field;
    }
    Ok(OracleRun { trajectory: Trajectory::from_history(history), norm, fields: grids })
}

fn photons<T: Real>(grids: &[FieldGrid<T>], phi: &[Vec<Complex<T>>]) -> T {
    grids
        .iter()
        .zip(phi)
        .map(|(g, f)| f.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr()) * g.weight)
        .fold(T::zero(), |a, b| a + b)
}

/// Largest amplitude deviation between two trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport<T> {
    pub max_alpha: T,
    pub max_beta: T,
    /// Time at which the larger of the two deviations peaks.
    pub worst_time: T,
    pub samples: usize,
}

impl<T: Real> DeviationReport<T> {
    pub fn max(&self) -> T {
        self.max_alpha.max(self.max_beta)
    }
}

/// Compares `reference` (dense-interpolated) against every sample of
/// `candidate` inside the common time range.
pub fn compare<T: Real>(
    candidate: &Trajectory<T>,
    reference: &Trajectory<T>,
) -> Result<DeviationReport<T>, OracleError> {
    let lo = candidate.times()[0].max(reference.times()[0]);
    let hi = candidate.end_time().min(reference.end_time());
    if lo > hi {
        return Err(OracleError::DisjointRanges);
    }
    let mut report = DeviationReport { max_alpha: T::zero(), max_beta: T::zero(), worst_time: lo, samples: 0 };
    let mut worst = -T::one();
    for (&t, amp) in candidate.times().iter().zip(candidate.amps()) {
        if t < lo || t > hi {
            continue;
        }
        let r = reference.at(t);
        let da = (amp.alpha - r.alpha).norm();
        let db = (amp.beta - r.beta).norm();
        report.max_alpha = report.max_alpha.max(da);
        report.max_beta = report.max_beta.max(db);
        if da.max(db) > worst {
            worst = da.max(db);
            report.worst_time = t;
        }
        report.samples += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(horizon: f64) -> OracleSettings<f64> {
        OracleSettings::new(horizon).with_resolution(40.0, 801).with_step(1e-3)
    }

    #[test]
    fn settings_validation() {
        assert!(small(5.0).validate().is_ok());
        assert!(small(5.0).with_resolution(40.0, 800).validate().is_err());
        assert!(small(5.0).with_resolution(40.0, 1).validate().is_err());
        assert!(small(5.0).with_resolution(-1.0, 801).validate().is_err());
        assert!(small(5.0).with_step(0.1).validate().is_err());
        // 801 modes over ±40 recur after 2π/0.1 ≈ 62.8.
        assert!(matches!(small(70.0).validate(), Err(OracleError::BeyondRecurrence { .. })));
    }

    #[test]
    fn grid_is_symmetric_with_carrier_node() {
        let s = small(1.0);
        let cfg = SystemConfig::new(0.5, 0.5).unwrap();
        let grids = field_grids(&cfg, &s);
        assert_eq!(grids.len(), 1);
        let d = &grids[0].detunings;
        assert_eq!(d.len(), 801);
        assert_eq!(d[400], 0.0);
        for j in 0..801 {
            assert!((d[j] + d[800 - j]).abs() < 1e-12);
        }
        let inf = field_grids(&cfg.with_variant(Variant::Infinite), &s);
        assert_eq!(inf.len(), 2);
    }

    #[test]
    fn norm_starts_at_one() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap().with_delays(0.5, 0.2);
        let run = integrate_kspace(&cfg, &small(0.5), AmplitudePair::first_excited()).unwrap();
        assert_eq!(run.norm[0], 1.0);
        assert!(run.max_norm_drift() < 1e-10);
        assert_eq!(run.norm.len(), run.trajectory.len());
    }

    #[test]
    fn compare_self_is_zero() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap();
        let run = integrate_kspace(&cfg, &small(0.5), AmplitudePair::first_excited()).unwrap();
        let rep = compare(&run.trajectory, &run.trajectory).unwrap();
        assert_eq!(rep.max(), 0.0);
        assert_eq!(rep.samples, run.trajectory.len());
    }
}
