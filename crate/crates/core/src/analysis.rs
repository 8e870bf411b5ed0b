//! Entanglement metrics and the static coefficient matrix.

use num_complex::Complex;
use thiserror::Error;

use crate::dde::Trajectory;
use crate::model::{AmplitudePair, SystemConfig};
use crate::scalar::{polar, Real};

/// Default threshold below which entanglement counts as gone.
pub const DEFAULT_DEATH_EPS: f64 = 1e-3;

/// `|det A|` below this (in units of `γ²`) flags a quasi-steady configuration.
pub const QUASI_STEADY_DET: f64 = 0.03;

/// Concurrence `2|αβ|` of the one-excitation state.
pub fn concurrence<T: Real>(amps: &AmplitudePair<T>) -> T {
    T::lit(2.0) * amps.alpha.norm() * amps.beta.norm()
}

/// Two-qubit density matrix in the basis `{ee, eg, ge, gg}`.
pub type DensityMatrix<T> = [[Complex<T>; 4]; 4];

/// Reduced emitter state after tracing out the field.
pub fn rho12<T: Real>(amps: &AmplitudePair<T>) -> DensityMatrix<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let real = |x: T| Complex::new(x, T::zero());
    let (a, b) = (amps.alpha, amps.beta);
    let mut rho = [[zero; 4]; 4];
    rho[1][1] = real(a.norm_sqr());
    rho[1][2] = a.conj() * b;
    rho[2][1] = a * b.conj();
    rho[2][2] = real(b.norm_sqr());
    rho[3][3] = real(T::one() - a.norm_sqr() - b.norm_sqr());
    rho
}

/// Wootters concurrence of an X-shaped two-qubit state:
/// `2·max(0, |ρ₂₃| − √(ρ₁₁ρ₄₄), |ρ₁₄| − √(ρ₂₂ρ₃₃))`.
pub fn x_state_concurrence<T: Real>(rho: &DensityMatrix<T>) -> T {
    let pop = |i: usize| rho[i][i].re.max(T::zero());
    let c1 = rho[1][2].norm() - (pop(0) * pop(3)).sqrt();
    let c2 = rho[0][3].norm() - (pop(1) * pop(2)).sqrt();
    T::lit(2.0) * T::zero().max(c1).max(c2)
}

/// Location of the concurrence maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub c_max: T,
    pub tau_peak: T,
}

/// Global maximum of a sampled series, refined by a parabola through the
/// argmax and its neighbours. Ties go to the earliest sample.
pub fn find_peak_series<T: Real>(times: &[T], values: &[T]) -> Peak<T> {
    assert!(!values.is_empty() && times.len() == values.len(), "peak of an empty series");
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[k] {
            k = i;
        }
    }
    let mut peak = Peak { c_max: values[k], tau_peak: times[k] };
    if k == 0 || k + 1 == values.len() {
        return peak;
    }
    let (u0, u2) = (times[k - 1] - times[k], times[k + 1] - times[k]);
    let (d0, d2) = (values[k - 1] - values[k], values[k + 1] - values[k]);
    let a = (d2 / u2 - d0 / u0) / (u2 - u0);
    if a < T::zero() {
        let b = d0 / u0 - a * u0;
        let u = (-b / (T::lit(2.0) * a)).max(u0).min(u2);
        let refined = values[k] + b * u + a * u * u;
        if refined.is_finite() && refined >= values[k] {
            peak = Peak { c_max: refined.min(T::one()), tau_peak: times[k] + u };
        }
    }
    peak
}

pub fn find_peak<T: Real>(traj: &Trajectory<T>) -> Peak<T> {
    find_peak_series(traj.times(), &traj.concurrence)
}

/// Outcome of the death-time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeathTime<T> {
    At(T),
    /// The series is still above threshold somewhere in its last 10 %.
    Undetermined,
}

impl<T: Real> DeathTime<T> {
    pub fn time(&self) -> Option<T> {
        match *self {
            DeathTime::At(t) => Some(t),
            DeathTime::Undetermined => None,
        }
    }
}

/// First time after the peak from which the series stays below `eps`.
///
/// The crossing is located by linear interpolation between the last sample
/// at or above `eps` and its successor.
pub fn death_time_series<T: Real>(times: &[T], values: &[T], eps: T) -> DeathTime<T> {
    assert!(!values.is_empty() && times.len() == values.len(), "death time of an empty series");
    let t_end = *times.last().expect("non-empty");
    let tail_start = t_end - (t_end - times[0]) / T::lit(10.0);
    let tail_clear = times.iter().zip(values).filter(|(&t, _)| t >= tail_start).all(|(_, &c)| c < eps);
    if !tail_clear {
        return DeathTime::Undetermined;
    }
    match values.iter().rposition(|&c| c >= eps) {
        None => DeathTime::At(times[0]),
        Some(k) => {
            let (t0, t1) = (times[k], times[k + 1]);
            let (c0, c1) = (values[k], values[k + 1]);
            let frac = if c0 > c1 { (c0 - eps) / (c0 - c1) } else { T::one() };
            DeathTime::At(t0 + (t1 - t0) * frac.max(T::zero()).min(T::one()))
        }
    }
}

pub fn death_time<T: Real>(traj: &Trajectory<T>, eps: T) -> DeathTime<T> {
    death_time_series(traj.times(), &traj.concurrence, eps)
}

/// Coefficients of α and β in the equations with all delays dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixA<T> {
    pub a11: Complex<T>,
    pub a12: Complex<T>,
    pub a21: Complex<T>,
    pub a22: Complex<T>,
}

impl<T: Real> MatrixA<T> {
    pub fn det(&self) -> Complex<T> {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex<T> {
        self.a11 + self.a22
    }

    /// Eigenvalues ordered by increasing modulus.
    pub fn eigenvalues(&self) -> [Complex<T>; 2] {
        let two = T::lit(2.0);
        let half_tr = self.trace() / two;
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let (l1, l2) = (half_tr - disc, half_tr + disc);
        if l1.norm() <= l2.norm() {
            [l1, l2]
        } else {
            [l2, l1]
        }
    }
}

pub fn build_matrix_a<T: Real>(config: &SystemConfig<T>) -> MatrixA<T> {
    let p = config.phase_delays();
    let fb = (config.gamma_l * config.gamma_r).sqrt();
    let decay = Complex::new(-config.gamma() / T::lit(2.0), T::zero());
    MatrixA {
        a11: decay + polar(fb, p.phi_fb1),
        a12: -polar(config.gamma_l, p.phi_dd) + polar(fb, p.phi_cross),
        a21: -polar(config.gamma_r, p.phi_dd) + polar(fb, p.phi_cross),
        a22: decay + polar(fb, p.phi_fb2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("A11 vanishes; the equilibrium ratio is undefined")]
pub struct DegenerateEquilibrium;

/// `α_e/β_e ≈ −A₁₂/A₁₁`.
pub fn equilibrium_ratio<T: Real>(a: &MatrixA<T>) -> Result<Complex<T>, DegenerateEquilibrium> {
    let scale = a.a11.norm().max(a.a12.norm()).max(a.a21.norm()).max(a.a22.norm()).max(T::one());
    if a.a11.norm() <= T::epsilon() * T::lit(16.0) * scale {
        return Err(DegenerateEquilibrium);
    }
    Ok(-a.a12 / a.a11)
}

/// Effective coupling and decay of the zero-delay equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams<T> {
    pub g_eff: T,
    pub gamma_eff: T,
    /// `g_eff/γ_eff`; `None` when both vanish.
    pub ratio: Option<T>,
}

/// `γ_eff = (√γ_R − √γ_L)²` and `g_eff` as the weaker of the two
/// off-diagonal couplings `√γ_L|√γ_R − √γ_L|`, `√γ_R|√γ_R − √γ_L|`.
pub fn effective_params<T: Real>(config: &SystemConfig<T>) -> EffectiveParams<T> {
    let sl = config.gamma_l.sqrt();
    let sr = config.gamma_r.sqrt();
    let diff = (sr - sl).abs();
    let gamma_eff = diff * diff;
    let g_eff = sl.min(sr) * diff;
    let ratio = (gamma_eff > T::zero()).then(|| sl.min(sr) / diff);
    EffectiveParams { g_eff, gamma_eff, ratio }
}

/// Summary of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementMetrics<T> {
    pub c_max: T,
    pub tau_peak: T,
    pub t_death: DeathTime<T>,
    /// `|det A| < 0.03 γ²`: the amplitudes have a slowly decaying direction.
    pub quasi_steady: bool,
}

pub fn entanglement_metrics<T: Real>(traj: &Trajectory<T>, config: &SystemConfig<T>, eps: T) -> EntanglementMetrics<T> {
    let peak = find_peak(traj);
    let gamma = config.gamma();
    EntanglementMetrics {
        c_max: peak.c_max,
        tau_peak: peak.tau_peak,
        t_death: death_time(traj, eps),
        quasi_steady: build_matrix_a(config).det().norm() < T::lit(QUASI_STEADY_DET) * gamma * gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    type C = Complex<f64>;
    type SystemConfig = super::SystemConfig<f64>;

    fn amps(a: C, b: C) -> AmplitudePair<f64> {
        AmplitudePair::new(a, b)
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence(&AmplitudePair::<f64>::first_excited()), 0.0);
        let bell = amps(C::new(FRAC_1_SQRT_2, 0.0), C::new(FRAC_1_SQRT_2, 0.0)).scale(C::from_polar(1.0, 0.7));
        assert!((concurrence(&bell) - 1.0).abs() < 1e-15);
        let s = amps(C::new(0.6, 0.0), C::new(0.0, 0.8));
        assert!((concurrence(&s) - 0.96).abs() < 1e-15);
    }

    #[test]
    fn rho12_examples() {
        let rho = rho12(&AmplitudePair::<f64>::first_excited());
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(rho[i][j], C::new(expected, 0.0));
            }
        }
        let bell = rho12(&amps(C::new(FRAC_1_SQRT_2, 0.0), C::new(FRAC_1_SQRT_2, 0.0)));
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!((bell[i][j] - C::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(bell[3][3].norm() < 1e-15);

        let rho = rho12(&amps(C::new(0.6, 0.0), C::new(0.0, 0.8)));
        assert!((rho[1][1].re - 0.36).abs() < 1e-15);
        assert!((rho[2][2].re - 0.64).abs() < 1e-15);
        assert!((rho[1][2] - C::new(0.0, 0.48)).norm() < 1e-15);
        assert!((rho[2][1] - C::new(0.0, -0.48)).norm() < 1e-15);
        assert!(rho[3][3].norm() < 1e-15);
    }

    #[test]
    fn peak_of_zero_series() {
        let t = [0.0, 0.5, 1.0, 1.5];
        assert_eq!(find_peak_series(&t, &[0.0; 4]), Peak { c_max: 0.0, tau_peak: 0.0 });
    }

    #[test]
    fn peak_refinement_recovers_parabola_vertex() {
        let times: Vec<f64> = (0..50).map(|i| f64::from(i) * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.8 - (t - 2.34) * (t - 2.34)).collect();
        let p = find_peak_series(&times, &values);
        assert!((p.tau_peak - 2.34).abs() < 1e-12);
        assert!((p.c_max - 0.8).abs() < 1e-12);
    }

    #[test]
    fn death_time_cascade_closed_form() {
        let times: Vec<f64> = (0..=20_000).map(|i| f64::from(i) * 1e-3).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 * t * (-t).exp()).collect();
        let t = death_time_series(&times, &values, 1e-3).time().unwrap();
        // Root of 2t e^{-t} = 1e-3 by bisection on the closed form.
        let (mut lo, mut hi) = (5.0_f64, 15.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid * (-mid).exp() > 1e-3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t - lo).abs() < 1e-6, "{t} vs {lo}");
        assert!((t - 9.9).abs() < 0.1);
    }

    #[test]
    fn death_time_zero_and_undetermined() {
        let times = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(death_time_series(&times, &[0.0; 4], 1e-3), DeathTime::At(0.0));
        assert_eq!(death_time_series(&times, &[0.0, 0.5, 0.2, 0.1], 1e-3), DeathTime::Undetermined);
    }

    #[test]
    fn matrix_a_cancels_for_non_chiral_node() {
        let cfg = SystemConfig::new(0.5, 0.5).unwrap();
        let a = build_matrix_a(&cfg);
        for e in [a.a11, a.a12, a.a21, a.a22] {
            assert!(e.norm() < 1e-16);
        }
        assert!(a.det().norm() < 1e-30);
        assert_eq!(equilibrium_ratio(&a), Err(DegenerateEquilibrium));
    }

    #[test]
    fn matrix_a_chiral_eighth_wave() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap().with_phases(0.0, FRAC_PI_4);
        let a = build_matrix_a(&cfg);
        let e = C::from_polar(1.0, FRAC_PI_4);
        assert!((a.a11 - C::new(-0.02860, 0.0)).norm() < 1e-5);
        assert!((a.a12 - e * 0.13807).norm() < 1e-5);
        assert!((a.a21 - e * -0.19526).norm() < 1e-5);
        assert!((a.a22 - C::new(-0.5, 0.47140)).norm() < 1e-5);
        assert!((a.det().norm() - 0.0197).abs() < 5e-5);
        let ratio = equilibrium_ratio(&a).unwrap();
        assert!((ratio - e * 4.828).norm() < 1e-3);
    }

    #[test]
    fn matrix_a_unidirectional() {
        let cfg = SystemConfig::new(0.0, 1.0).unwrap().with_phases(0.4, 1.3);
        let a = build_matrix_a(&cfg);
        assert_eq!(a.a11, C::new(-0.5, 0.0));
        assert_eq!(a.a22, C::new(-0.5, 0.0));
        assert!(a.a12.norm() < 1e-16);
        assert!((a.a21 + C::from_polar(1.0, 1.3)).norm() < 1e-15);
        assert!((a.det() - C::new(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(equilibrium_ratio(&a).unwrap().norm(), 0.0);
    }

    #[test]
    fn matrix_a_invariant_under_half_wave_shift() {
        for theta1 in [0.0, 0.3, 1.7, 3.0, 5.5] {
            let base = SystemConfig::from_chirality(3.0).unwrap().with_phases(theta1, 0.9);
            let shifted = base.with_phases(theta1 + PI, 0.9);
            let (a, b) = (build_matrix_a(&base), build_matrix_a(&shifted));
            for (x, y) in [(a.a11, b.a11), (a.a12, b.a12), (a.a21, b.a21), (a.a22, b.a22)] {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn effective_params_examples() {
        let sym = effective_params(&SystemConfig::new(0.5, 0.5).unwrap());
        assert_eq!((sym.g_eff, sym.gamma_eff, sym.ratio), (0.0, 0.0, None));

        let p = effective_params(&SystemConfig::from_chirality(1.1).unwrap());
        assert!((p.gamma_eff - 1.13443e-3).abs() < 1e-8);
        assert!((p.ratio.unwrap() - 20.5).abs() < 0.05);

        let uni = effective_params(&SystemConfig::new(0.0, 1.0).unwrap());
        assert_eq!((uni.g_eff, uni.gamma_eff, uni.ratio), (0.0, 1.0, Some(0.0)));
    }

    #[test]
    fn eigenvalues_sorted_by_modulus() {
        let cfg = SystemConfig::from_chirality(2.0).unwrap().with_phases(0.0, FRAC_PI_4);
        let a = build_matrix_a(&cfg);
        let [small, large] = a.eigenvalues();
        assert!(small.norm() < large.norm());
        assert!((small * large - a.det()).norm() < 1e-14);
        assert!((small + large - a.trace()).norm() < 1e-14);
    }
}
