//! Physical configuration and equations of motion.
//!
//! Two emitters sit at `x1 < x2` on a waveguide. In the semi-infinite
//! geometry a perfect mirror at `x = 0` reflects left-moving photons back,
//! which produces four retarded couplings (emitter-emitter, two
//! self-feedback paths and a cross-feedback path). Amplitudes are in the
//! frame rotating at the mean emitter frequency, rates are in units of
//! `γ = γ_L + γ_R` once the config is normalised.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex;

use crate::error::ConfigError;
use crate::scalar::{polar, wrap_phase, Real};

/// Which waveguide geometry the equations describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// Mirror-terminated waveguide with retarded feedback.
    #[default]
    SemiInfinite,
    /// Mirrorless baseline; only the retarded emitter-emitter coupling.
    Infinite,
    /// Zero-delay reduction of the semi-infinite equations with the first
    /// emitter at a mirror node and a one-wavelength spacing.
    MarkovLimit,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::SemiInfinite => "semi_infinite",
            Variant::Infinite => "infinite",
            Variant::MarkovLimit => "markov_limit",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "semi_infinite" | "semiinfinite" | "semi" | "mirror" => Ok(Variant::SemiInfinite),
            "infinite" | "mirrorless" => Ok(Variant::Infinite),
            "markov_limit" | "markov" | "markovlimit" => Ok(Variant::MarkovLimit),
            other => Err(format!("unknown variant `{other}` (expected semi_infinite, infinite or markov_limit)")),
        }
    }
}

/// Dimensionless parameters of the two-emitter system.
///
/// Phases are `k₀x₁` and `k₀(x₂ − x₁)` reduced mod 2π; delays are the round
/// trip `2x₁/v` to the mirror and the emitter-emitter transit `(x₂ − x₁)/v`.
/// Phases and delays are independent inputs: with `ω₀ ≫ γ` the optical
/// phase and the retardation are effectively decoupled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig<T> {
    pub gamma_l: T,
    pub gamma_r: T,
    pub theta1: T,
    pub theta_d: T,
    pub tau_fb: T,
    pub tau_dd: T,
    /// Emitter detuning; `ω₁ = ω₀ + δ/2`, `ω₂ = ω₀ − δ/2`.
    pub delta: T,
    pub variant: Variant,
}

impl<T: Real> SystemConfig<T> {
    /// Semi-infinite config with the given rates, zero phases, delays and detuning.
    pub fn new(gamma_l: T, gamma_r: T) -> Result<Self, ConfigError> {
        let cfg = Self {
            gamma_l,
            gamma_r,
            theta1: T::zero(),
            theta_d: T::zero(),
            tau_fb: T::zero(),
            tau_dd: T::zero(),
            delta: T::zero(),
            variant: Variant::SemiInfinite,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Normalised rates `γ_L = 1/(1+r)`, `γ_R = r/(1+r)` from the chirality
    /// `r = γ_R/γ_L`. `r = ∞` gives the unidirectional limit `γ_L = 0`.
    pub fn from_chirality(r: T) -> Result<Self, ConfigError> {
        if r.is_nan() || r < T::zero() {
            return Err(ConfigError::InvalidChirality(r.to_f64().unwrap_or(f64::NAN)));
        }
        if r.is_infinite() {
            return Self::new(T::zero(), T::one());
        }
        let denom = T::one() + r;
        Self::new(T::one() / denom, r / denom)
    }

    /// Derives phases and delays from physical positions: emitters at
    /// `0 ≤ x1 ≤ x2`, group velocity `v` and carrier wave number `k0`, with
    /// lengths measured so that `x / v` is in units of `1/γ`.
    pub fn from_positions(gamma_l: T, gamma_r: T, x1: T, x2: T, v: T, k0: T) -> Result<Self, ConfigError> {
        if !(x1 >= T::zero() && x2 >= x1 && v > T::zero()) {
            return Err(ConfigError::InvalidPositions);
        }
        let two = T::lit(2.0);
        Ok(Self::new(gamma_l, gamma_r)?.with_phases(k0 * x1, k0 * (x2 - x1)).with_delays(two * x1 / v, (x2 - x1) / v))
    }

    pub fn with_phases(mut self, theta1: T, theta_d: T) -> Self {
        self.theta1 = wrap_phase(theta1);
        self.theta_d = wrap_phase(theta_d);
        self
    }

    pub fn with_delays(mut self, tau_fb: T, tau_dd: T) -> Self {
        self.tau_fb = tau_fb;
        self.tau_dd = tau_dd;
        self
    }

    pub fn with_detuning(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("gamma_L", self.gamma_l),
            ("gamma_R", self.gamma_r),
            ("theta1", self.theta1),
            ("theta_d", self.theta_d),
            ("tau_fb", self.tau_fb),
            ("tau_dd", self.tau_dd),
            ("delta", self.delta),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(ConfigError::NonFinite(name));
            }
        }
        if self.gamma_l < T::zero() || self.gamma_r < T::zero() {
            return Err(ConfigError::NegativeRate { gamma_l: f64_of(self.gamma_l), gamma_r: f64_of(self.gamma_r) });
        }
        if self.gamma_l + self.gamma_r <= T::zero() {
            return Err(ConfigError::ZeroTotalRate);
        }
        for (name, value) in [("tau_fb", self.tau_fb), ("tau_dd", self.tau_dd)] {
            if value < T::zero() {
                return Err(ConfigError::NegativeDelay { name, value: f64_of(value) });
            }
        }
        Ok(())
    }

    /// Total decay rate `γ_L + γ_R`.
    pub fn gamma(&self) -> T {
        self.gamma_l + self.gamma_r
    }

    /// `γ_R/γ_L`; infinite for the unidirectional case.
    pub fn chirality(&self) -> T {
        if self.gamma_l == T::zero() {
            T::infinity()
        } else {
            self.gamma_r / self.gamma_l
        }
    }

    pub fn phase_delays(&self) -> PhaseDelaySet<T> {
        derive_phase_delay_set(self)
    }
}

pub(crate) fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// The four optical phases and four retardation times of the couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDelaySet<T> {
    /// `k₀(x₂ − x₁)`
    pub phi_dd: T,
    /// `2k₀x₁`
    pub phi_fb1: T,
    /// `k₀(x₁ + x₂)`
    pub phi_cross: T,
    /// `2k₀x₂`
    pub phi_fb2: T,
    pub t_dd: T,
    pub t_fb1: T,
    pub t_cross: T,
    pub t_fb2: T,
}

/// Builds the phase and delay set from the two independent phases and the
/// two independent delays.
///
/// `2θ₁` is formed from `θ₁ mod π`, so shifting `θ₁` by π (one half
/// wavelength) leaves every phase unchanged.
pub fn derive_phase_delay_set<T: Real>(config: &SystemConfig<T>) -> PhaseDelaySet<T> {
    let two = T::lit(2.0);
    let theta_d = wrap_phase(config.theta_d);
    let half_turn = wrap_phase(config.theta1) % T::PI();
    let phi_fb1 = wrap_phase(two * half_turn);
    PhaseDelaySet {
        phi_dd: theta_d,
        phi_fb1,
        phi_cross: wrap_phase(phi_fb1 + theta_d),
        phi_fb2: wrap_phase(phi_fb1 + two * theta_d),
        t_dd: config.tau_dd,
        t_fb1: config.tau_fb,
        t_cross: config.tau_fb + config.tau_dd,
        t_fb2: config.tau_fb + two * config.tau_dd,
    }
}

/// Excitation amplitudes of `|e₁g₂⟩` (alpha) and `|g₁e₂⟩` (beta).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AmplitudePair<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

impl<T: Real> AmplitudePair<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Self {
        Self { alpha, beta }
    }

    /// Emitter 1 excited, emitter 2 in its ground state.
    pub fn first_excited() -> Self {
        Self::new(Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Total emitter excitation `|α|² + |β|²`.
    pub fn population(&self) -> T {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.re.is_finite() && self.alpha.im.is_finite() && self.beta.re.is_finite() && self.beta.im.is_finite()
    }

    pub fn scale(self, c: Complex<T>) -> Self {
        Self::new(self.alpha * c, self.beta * c)
    }

    fn component(&self, q: usize) -> Complex<T> {
        if q == 0 {
            self.alpha
        } else {
            self.beta
        }
    }

    /// Largest component-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.alpha - other.alpha).norm().max((self.beta - other.beta).norm())
    }
}

impl<T: Real> Add for AmplitudePair<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.alpha + rhs.alpha, self.beta + rhs.beta)
    }
}

impl<T: Real> AddAssign for AmplitudePair<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.alpha = self.alpha + rhs.alpha;
        self.beta = self.beta + rhs.beta;
    }
}

impl<T: Real> Sub for AmplitudePair<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.alpha - rhs.alpha, self.beta - rhs.beta)
    }
}

impl<T: Real> Mul<T> for AmplitudePair<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.alpha * rhs, self.beta * rhs)
    }
}

type Mat2<T> = [[Complex<T>; 2]; 2];

fn mat_vec<T: Real>(m: &Mat2<T>, v: &AmplitudePair<T>) -> AmplitudePair<T> {
    AmplitudePair::new(m[0][0] * v.alpha + m[0][1] * v.beta, m[1][0] * v.alpha + m[1][1] * v.beta)
}

/// A coupling `M · y(t − delay)` switched on at `t = delay`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DelayedCoupling<T> {
    delay: T,
    matrix: Mat2<T>,
}

/// Linear delay system `ẏ = M₀ y(t) + Σₖ θ(t − dₖ) Mₖ y(t − dₖ)` with
/// precomputed coefficient matrices.
///
/// A coupling whose delay is zero uses the current state rather than the
/// history, so zero-delay configurations are plain ODEs.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel<T> {
    instant: Mat2<T>,
    couplings: Vec<DelayedCoupling<T>>,
}

impl<T: Real> DelayModel<T> {
    /// Model for `config.variant`.
    pub fn from_config(config: &SystemConfig<T>) -> Self {
        match config.variant {
            Variant::SemiInfinite => Self::semi_infinite_with_feedback(config, T::one()),
            Variant::Infinite => Self::infinite(config),
            Variant::MarkovLimit => Self::markov_limit(config),
        }
    }

    /// Semi-infinite equations with the mirror terms scaled by `strength`
    /// (1 for a perfect mirror, 0 removes the feedback entirely).
    pub fn semi_infinite_with_feedback(config: &SystemConfig<T>, strength: T) -> Self {
        let p = config.phase_delays();
        let zero = Complex::new(T::zero(), T::zero());
        let fb = (config.gamma_l * config.gamma_r).sqrt() * strength;
        let mut model = Self::infinite(config);
        let self1 = polar(fb, p.phi_fb1);
        let cross = polar(fb, p.phi_cross);
        let self2 = polar(fb, p.phi_fb2);
        model.couplings.push(DelayedCoupling { delay: p.t_fb1, matrix: [[self1, zero], [zero, zero]] });
        model.couplings.push(DelayedCoupling { delay: p.t_cross, matrix: [[zero, cross], [cross, zero]] });
        model.couplings.push(DelayedCoupling { delay: p.t_fb2, matrix: [[zero, zero], [zero, self2]] });
        model
    }

    /// Mirrorless equations: decay plus the retarded emitter-emitter coupling.
    /// Emitter 1 hears emitter 2 through left-movers (γ_L), emitter 2 hears
    /// emitter 1 through right-movers (γ_R).
    pub fn infinite(config: &SystemConfig<T>) -> Self {
        let p = config.phase_delays();
        let zero = Complex::new(T::zero(), T::zero());
        let decay = -config.gamma() / T::lit(2.0);
        let to_alpha = -polar(config.gamma_l, p.phi_dd);
        let to_beta = -polar(config.gamma_r, p.phi_dd);
        Self {
            instant: Self::diagonal(decay, decay, config.delta),
            couplings: vec![DelayedCoupling { delay: p.t_dd, matrix: [[zero, to_alpha], [to_beta, zero]] }],
        }
    }

    /// Zero-delay semi-infinite equations for `θ₁ = θ_d = 0`, written with
    /// the effective rate `(√γ_R − √γ_L)²` and couplings `√γ_L(√γ_R − √γ_L)`,
    /// `−√γ_R(√γ_R − √γ_L)`. Phases and delays of the config are ignored.
    pub fn markov_limit(config: &SystemConfig<T>) -> Self {
        let sl = config.gamma_l.sqrt();
        let sr = config.gamma_r.sqrt();
        let diff = sr - sl;
        let decay = -diff * diff / T::lit(2.0);
        let mut instant = Self::diagonal(decay, decay, config.delta);
        instant[0][1] = Complex::new(sl * diff, T::zero());
        instant[1][0] = Complex::new(-sr * diff, T::zero());
        Self { instant, couplings: Vec::new() }
    }

    fn diagonal(d1: T, d2: T, delta: T) -> Mat2<T> {
        let half = delta / T::lit(2.0);
        let zero = Complex::new(T::zero(), T::zero());
        [[Complex::new(d1, -half), zero], [zero, Complex::new(d2, half)]]
    }

    /// Delays of couplings with a non-zero coefficient, in build order.
    pub fn active_delays(&self) -> Vec<T> {
        let zero = Complex::new(T::zero(), T::zero());
        self.couplings.iter().filter(|c| c.matrix.iter().flatten().any(|&m| m != zero)).map(|c| c.delay).collect()
    }

    /// Time derivative at `t`, Heaviside factors evaluated at `t` itself
    /// (`θ(0) = 1`).
    pub fn derivative<L>(&self, t: T, now: &AmplitudePair<T>, lookup: &L) -> AmplitudePair<T>
    where
        L: Fn(T) -> AmplitudePair<T>,
    {
        self.derivative_gated(t, t, now, lookup)
    }

    /// Time derivative at `t` with the Heaviside factors evaluated at `gate`.
    ///
    /// The integrator passes the start of the current step as `gate`, so a
    /// coupling never switches on in the middle of a step.
    pub fn derivative_gated<L>(&self, t: T, gate: T, now: &AmplitudePair<T>, lookup: &L) -> AmplitudePair<T>
    where
        L: Fn(T) -> AmplitudePair<T>,
    {
        let tol = T::time_tol(gate);
        let mut d = mat_vec(&self.instant, now);
        for c in &self.couplings {
            if gate + tol < c.delay {
                continue;
            }
            let past = if c.delay == T::zero() {
                *now
            } else {
                let s = t - c.delay;
                assert!(s > -tol, "history lookup at negative time {s}");
                lookup(s.max(T::zero()))
            };
            d += mat_vec(&c.matrix, &past);
        }
        d
    }

    /// Instantaneous coefficient of `y_source` in `ẏ_target` (0 = alpha, 1 = beta)
    /// when every coupling is active and the state is constant.
    pub(crate) fn static_coefficient(&self, target: usize, source: usize) -> Complex<T> {
        self.couplings.iter().fold(self.instant[target][source], |acc, c| acc + c.matrix[target][source])
    }

    /// Applies the model to a constant state: `(M₀ + Σ Mₖ) y`.
    pub fn static_derivative(&self, y: &AmplitudePair<T>) -> AmplitudePair<T> {
        let col =
            |q: usize| self.static_coefficient(q, 0) * y.component(0) + self.static_coefficient(q, 1) * y.component(1);
        AmplitudePair::new(col(0), col(1))
    }
}

/// Right-hand side of the mirror-terminated delay equations.
pub fn rhs_semi_infinite<T, L>(t: T, now: &AmplitudePair<T>, lookup: &L, config: &SystemConfig<T>) -> AmplitudePair<T>
where
    T: Real,
    L: Fn(T) -> AmplitudePair<T>,
{
    DelayModel::semi_infinite_with_feedback(config, T::one()).derivative(t, now, lookup)
}

/// Right-hand side of the mirrorless delay equations.
pub fn rhs_infinite<T, L>(t: T, now: &AmplitudePair<T>, lookup: &L, config: &SystemConfig<T>) -> AmplitudePair<T>
where
    T: Real,
    L: Fn(T) -> AmplitudePair<T>,
{
    DelayModel::infinite(config).derivative(t, now, lookup)
}

/// Right-hand side of the zero-delay reduction.
pub fn rhs_markov_limit<T: Real>(now: &AmplitudePair<T>, config: &SystemConfig<T>) -> AmplitudePair<T> {
    DelayModel::markov_limit(config).derivative(T::zero(), now, &|_| unreachable!("markov limit has no history"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    type C = Complex<f64>;
    type SystemConfig = super::SystemConfig<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn pair(a: C, b: C) -> AmplitudePair<f64> {
        AmplitudePair::new(a, b)
    }

    fn never(_: f64) -> AmplitudePair<f64> {
        panic!("history must not be consulted")
    }

    #[test]
    fn phase_delay_identity_case() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap();
        let p = derive_phase_delay_set(&cfg);
        for v in [p.phi_dd, p.phi_fb1, p.phi_cross, p.phi_fb2, p.t_dd, p.t_fb1, p.t_cross, p.t_fb2] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn phase_delay_quarter_wave_phase() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap().with_phases(0.0, FRAC_PI_4);
        let p = cfg.phase_delays();
        assert_eq!(p.phi_dd, FRAC_PI_4);
        assert_eq!(p.phi_fb1, 0.0);
        assert_eq!(p.phi_cross, FRAC_PI_4);
        assert!((p.phi_fb2 - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn phase_delay_sums() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap().with_delays(5.0, 0.3);
        let p = cfg.phase_delays();
        assert!((p.t_cross - 5.3).abs() < 1e-12);
        assert!((p.t_fb2 - 5.6).abs() < 1e-12);
    }

    #[test]
    fn chirality_normalisation() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap();
        assert!((cfg.gamma_l - 1.0 / 3.0).abs() < 1e-15);
        assert!((cfg.gamma_r - 2.0 / 3.0).abs() < 1e-15);
        assert!((cfg.gamma() - 1.0).abs() < 1e-15);
        assert!((cfg.chirality() - 2.0).abs() < 1e-12);
        let uni = SystemConfig::from_chirality(f64::INFINITY).unwrap();
        assert_eq!((uni.gamma_l, uni.gamma_r), (0.0, 1.0));
        assert!(uni.chirality().is_infinite());
        assert!(SystemConfig::from_chirality(-1.0).is_err());
    }

    #[test]
    fn validation_errors() {
        assert_eq!(SystemConfig::new(0.0, 0.0).unwrap_err(), ConfigError::ZeroTotalRate);
        assert!(matches!(SystemConfig::new(-0.1, 1.0), Err(ConfigError::NegativeRate { .. })));
        let bad = SystemConfig::new(0.5, 0.5).unwrap().with_delays(-1.0, 0.0);
        assert!(matches!(bad.validate(), Err(ConfigError::NegativeDelay { name: "tau_fb", .. })));
        let nan = SystemConfig::new(0.5, 0.5).unwrap().with_detuning(f64::NAN);
        assert_eq!(nan.validate(), Err(ConfigError::NonFinite("delta")));
    }

    #[test]
    fn positions_give_consistent_phases_and_delays() {
        // k0 = 2π/λ with λ = 0.01 and v = 1: x1 = 2λ sits on a node.
        let lambda = 0.01;
        let cfg = SystemConfig::from_positions(0.5, 0.5, 2.0 * lambda, 2.125 * lambda, 1.0, 2.0 * PI / lambda).unwrap();
        assert!(cfg.theta1 < 1e-9 || (2.0 * PI - cfg.theta1) < 1e-9);
        assert!((cfg.theta_d - FRAC_PI_4).abs() < 1e-9);
        assert!((cfg.tau_fb - 0.04).abs() < 1e-15);
        assert!((cfg.tau_dd - 0.00125).abs() < 1e-15);
        assert!(SystemConfig::from_positions(0.5, 0.5, 1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn semi_infinite_at_start_only_decays() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap().with_delays(1.0, 0.25).with_phases(0.3, 1.1);
        let d = rhs_semi_infinite(0.0, &AmplitudePair::first_excited(), &never, &cfg);
        assert_eq!(d, pair(c(-0.5, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn non_chiral_zero_delay_is_frozen() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap();
        let state = pair(c(0.3, -0.2), c(-0.1, 0.6));
        let d = rhs_semi_infinite(0.0, &state, &never, &cfg);
        assert!(d.alpha.norm() < 1e-16 && d.beta.norm() < 1e-16);
    }

    #[test]
    fn zero_delay_chiral_coefficients() {
        let cfg = SystemConfig::new(1.0 / 3.0, 2.0 / 3.0).unwrap();
        let d = rhs_semi_infinite(0.0, &AmplitudePair::first_excited(), &never, &cfg);
        assert!((d.alpha - c(-0.028595, 0.0)).norm() < 1e-5);
        assert!((d.beta - c(-0.195262, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn infinite_cascade_decouples_first_emitter() {
        let cfg = SystemConfig::new(0.0, 1.0).unwrap().with_delays(0.0, 0.5).with_variant(Variant::Infinite);
        let history = |_: f64| pair(c(0.2, 0.1), c(0.7, -0.4));
        let state = pair(c(0.6, 0.2), c(0.1, 0.3));
        let d = rhs_infinite(2.0, &state, &history, &cfg);
        assert_eq!(d.alpha, state.alpha * -0.5);
    }

    #[test]
    fn infinite_gated_before_transit() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap().with_delays(0.0, 0.5);
        let d = rhs_infinite(0.2, &AmplitudePair::first_excited(), &never, &cfg);
        assert_eq!(d, pair(c(-0.5, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn infinite_zero_delay_non_chiral() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap();
        let d = rhs_infinite(0.0, &AmplitudePair::first_excited(), &never, &cfg);
        assert_eq!(d, pair(c(-0.5, 0.0), c(-0.5, 0.0)));
    }

    #[test]
    fn markov_limit_examples() {
        let sym = SystemConfig::new(0.5, 0.5).unwrap();
        let d = rhs_markov_limit(&pair(c(0.4, 0.1), c(-0.3, 0.2)), &sym);
        assert_eq!(d, AmplitudePair::zero());

        let cfg = SystemConfig::new(1.0 / 3.0, 2.0 / 3.0).unwrap();
        let d = rhs_markov_limit(&AmplitudePair::first_excited(), &cfg);
        assert!((d.alpha.re + 0.02860).abs() < 1e-5 && d.alpha.im == 0.0);
        assert!((d.beta.re + 0.19527).abs() < 1e-5);
        let d = rhs_markov_limit(&pair(c(0.0, 0.0), c(1.0, 0.0)), &cfg);
        assert!((d.alpha.re - 0.13808).abs() < 1e-5);
        assert!((d.beta.re + 0.02860).abs() < 1e-5);
    }

    #[test]
    fn detuning_enters_with_opposite_signs() {
        let cfg = SystemConfig::new(0.0, 1.0).unwrap().with_detuning(0.4).with_variant(Variant::Infinite);
        let d = rhs_infinite(0.0, &AmplitudePair::first_excited(), &never, &cfg);
        assert!((d.alpha - c(-0.5, -0.2)).norm() < 1e-15);
        let d = rhs_markov_limit(&pair(c(0.0, 0.0), c(1.0, 0.0)), &cfg);
        assert!((d.beta - c(-0.5, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn active_delays_skip_zero_couplings() {
        let cfg = SystemConfig::new(0.0, 1.0).unwrap().with_delays(1.0, 0.5);
        // γ_L = 0 removes every mirror term.
        assert_eq!(DelayModel::from_config(&cfg).active_delays(), vec![0.5]);
        let cfg = SystemConfig::new(0.4, 0.6).unwrap().with_delays(1.0, 0.5);
        assert_eq!(DelayModel::from_config(&cfg).active_delays(), vec![0.5, 1.0, 1.5, 2.0]);
    }
}
