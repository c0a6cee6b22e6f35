//! Frequency-domain probe response, ideal-transparency conditions, and the
//! closed-form window slopes and delays.
//!
//! The response is evaluated from a cleared-fraction form: numerator and
//! denominator assembled as polynomials in the detuning before the single
//! division. The nested form divides by zero exactly at an ideal transparency
//! window; the cleared form is finite there (the window value is a true zero).
//! With the coupling off the two-cavity terms vanish identically and the
//! one-cavity cleared form is used, so that limit is reproduced bit-for-bit.

use num_complex::Complex;
use num_traits::Float;
use serde::Serialize;

use crate::autodiff::Jet;
use crate::model::SystemParams;
use crate::scalar::Scalar;

/// Which transparency window the conditions target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Window {
    /// Slow light at probe detuning +omega_m.
    SlowAtPlusOmega,
    /// Fast light at probe detuning -omega_m.
    FastAtMinusOmega,
}

impl Window {
    /// The window detuning, an exact rational of the inputs (never searched).
    pub fn delta<T: Scalar>(self, omega_m: T) -> T {
        match self {
            Window::SlowAtPlusOmega => omega_m,
            Window::FastAtMinusOmega => -omega_m,
        }
    }
}

/// Parameter values required for a perfectly transparent window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmitConditions<T> {
    /// Required effective coupling, rate squared.
    pub beta: T,
    /// Required coupling magnitude; the sign is unobservable (enters as J^2),
    /// the positive root is reported.
    pub j: T,
    pub window: Window,
}

/// Literal evaluations of the window closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForms<T> {
    pub window: Window,
    /// Dispersion slope at the window (negative for the slow window, positive
    /// for the fast one).
    pub k_max: T,
    /// Group delay at the window; always `-k_max`.
    pub tau_max: T,
    /// Simplified delay when the mechanical linewidth is negligible against
    /// the feasibility margin (slow: gamma_m << kappa1 - kappa2; fast:
    /// kappa1 << J^2/kappa2). Independent of omega_m in the slow case.
    pub tau_max_limit_small_gamma: T,
    /// Simplified delay at the opposite boundary (slow: kappa1 - kappa2 <<
    /// gamma_m; fast: kappa1 -> J^2/kappa2). Independent of gamma_m.
    pub tau_max_limit_boundary: T,
}

/// Per-detuning probe response record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResponse<T> {
    pub delta: T,
    pub eps_t: Complex<T>,
    pub re_eps_t: T,
    pub im_eps_t: T,
    /// Dispersion slope `d Im[eps_T] / d omega_p`.
    pub slope_k: T,
    /// Group delay `d arg[1 - eps_T] / d omega_p`; positive is slow light,
    /// negative fast.
    pub tau: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResponseError {
    #[error("probe response diverges at delta = {delta}: cleared denominator vanished")]
    PoleAtDelta { delta: String },
    #[error("transmission 1 - eps_T vanishes at delta = {delta}: phase undefined")]
    TransmissionZero { delta: String },
    #[error("infeasible transparency conditions: {0}")]
    InfeasibleConditions(String),
}

/// Normalized intracavity sideband amplitude a1+ / eps_p with its detuning
/// derivative, from the cleared-fraction form.
fn a1_plus_jet<T: Scalar>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<Jet<T>, ResponseError> {
    let d = Jet::variable(delta);
    let two = T::of(2.0);
    let c = |re: T, im: T| Jet::constant(Complex::new(re, im));

    // Cavity response factors at the two sideband frequencies.
    let p = c(params.kappa1, params.delta1_bar) - d.mul_i();
    let q = c(params.kappa1, -params.delta1_bar) - d.mul_i();
    // Mechanical susceptibility numerator, cleared of its 2 i omega_m divisor.
    let chihat =
        d * d - Jet::real(params.omega_m * params.omega_m) + d.mul_i() * params.gamma_m;
    let two_i_om_beta = c(T::zero(), two * params.omega_m * params.beta);

    let (num, den, scale) = if params.j == T::zero() {
        // One-cavity reduction: the A/B self-energies vanish identically.
        let n1 = chihat * q - two_i_om_beta;
        let t1 = p * n1;
        let t2 = two_i_om_beta * q;
        (n1, t1 + t2, t1.val.norm() + t2.val.norm())
    } else {
        let j2 = Jet::real(params.j * params.j);
        // Self-energy denominators of the two sidebands.
        let da = c(params.kappa2, -params.delta2) + d.mul_i();
        let db = c(params.kappa2, params.delta2) + d.mul_i();
        let phat = p * da - j2;
        let ghat = q * db - j2;
        let n = chihat * ghat - two_i_om_beta * db;
        let t1 = phat * n;
        let t2 = two_i_om_beta * ghat * da;
        (da * n, t1 + t2, t1.val.norm() + t2.val.norm())
    };

    let tiny = T::epsilon() * T::of(64.0);
    if den.val.norm() <= tiny * scale || den.val.norm() == T::zero() {
        return Err(ResponseError::PoleAtDelta {
            delta: format!("{delta}"),
        });
    }
    Ok(num / den)
}

/// Intracavity probe sideband amplitude, normalized to unit probe drive.
pub fn a1_plus<T: Scalar>(params: &SystemParams<T>, delta: T) -> Result<Complex<T>, ResponseError> {
    Ok(a1_plus_jet(params, delta)?.val)
}

/// Output probe quadrature eps_T = 2 kappa1 a1+ / eps_p and its detuning
/// derivative.
pub fn epsilon_t_jet<T: Scalar>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<Jet<T>, ResponseError> {
    Ok(a1_plus_jet(params, delta)? * (T::of(2.0) * params.kappa1))
}

/// Output probe quadrature eps_T. Real part = absorption, imaginary part =
/// dispersion.
pub fn epsilon_t<T: Scalar>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<Complex<T>, ResponseError> {
    Ok(epsilon_t_jet(params, delta)?.val)
}

/// Dispersion slope `K = d Im[eps_T] / d omega_p`. The response is analytic
/// in the detuning away from poles, so the complex derivative carries it.
pub fn dispersion_slope<T: Scalar>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<T, ResponseError> {
    Ok(epsilon_t_jet(params, delta)?.der.im)
}

/// Threshold below which the transmitted amplitude counts as zero and the
/// phase derivative is refused.
pub const TRANSMISSION_ZERO_THRESHOLD: f64 = 1e-12;

/// Group delay tau = d arg[1 - eps_T] / d omega_p, computed as Im[f'/f] with
/// f = 1 - eps_T. No phase unwrapping is involved, so branch cuts of arg are
/// harmless.
pub fn group_delay<T: Scalar>(params: &SystemParams<T>, delta: T) -> Result<T, ResponseError> {
    let eps = epsilon_t_jet(params, delta)?;
    let f = Jet::real(T::one()) - eps;
    if f.val.norm() < T::of(TRANSMISSION_ZERO_THRESHOLD) {
        return Err(ResponseError::TransmissionZero {
            delta: format!("{delta}"),
        });
    }
    Ok((f.der / f.val).im)
}

/// Full per-detuning record.
pub fn probe_response<T: Scalar>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<ProbeResponse<T>, ResponseError> {
    let eps = epsilon_t_jet(params, delta)?;
    let f = Jet::real(T::one()) - eps;
    if f.val.norm() < T::of(TRANSMISSION_ZERO_THRESHOLD) {
        return Err(ResponseError::TransmissionZero {
            delta: format!("{delta}"),
        });
    }
    Ok(ProbeResponse {
        delta,
        eps_t: eps.val,
        re_eps_t: eps.val.re,
        im_eps_t: eps.val.im,
        slope_k: eps.der.im,
        tau: (f.der / f.val).im,
    })
}

/// Conditions for a perfectly transparent window at +omega_m. Feasible only
/// for kappa1 > kappa2 (the required beta must be positive).
pub fn ideal_omit_slow<T: Scalar>(
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<OmitConditions<T>, ResponseError> {
    check_rates(kappa1, kappa2, omega_m, gamma_m)?;
    if kappa1 <= kappa2 {
        return Err(ResponseError::InfeasibleConditions(format!(
            "slow window requires kappa1 > kappa2 (got kappa1 = {kappa1}, kappa2 = {kappa2})"
        )));
    }
    Ok(OmitConditions {
        beta: gamma_m * (kappa1 - kappa2) / T::of(2.0),
        j: Float::sqrt(kappa2 * kappa2 + T::of(4.0) * omega_m * omega_m),
        window: Window::SlowAtPlusOmega,
    })
}

/// Conditions for a perfectly transparent window at -omega_m. Feasible only
/// for kappa2 > 0 with J^2 = kappa2^2 + 4 omega_m^2 > kappa1 kappa2.
pub fn ideal_omit_fast<T: Scalar>(
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<OmitConditions<T>, ResponseError> {
    check_rates(kappa1, kappa2, omega_m, gamma_m)?;
    if kappa2 <= T::zero() {
        return Err(ResponseError::InfeasibleConditions(
            "fast window requires kappa2 > 0".into(),
        ));
    }
    let j_sq = kappa2 * kappa2 + T::of(4.0) * omega_m * omega_m;
    if j_sq <= kappa1 * kappa2 {
        return Err(ResponseError::InfeasibleConditions(format!(
            "fast window requires J^2 > kappa1 kappa2 (J^2 = {j_sq}, kappa1 kappa2 = {})",
            kappa1 * kappa2
        )));
    }
    Ok(OmitConditions {
        beta: gamma_m * (j_sq - kappa1 * kappa2) / (T::of(2.0) * kappa2),
        j: Float::sqrt(j_sq),
        window: Window::FastAtMinusOmega,
    })
}

fn check_rates<T: Scalar>(
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<(), ResponseError> {
    if !(kappa1 > T::zero() && kappa2 >= T::zero() && omega_m > T::zero() && gamma_m > T::zero()) {
        return Err(ResponseError::InfeasibleConditions(format!(
            "rates out of range: kappa1 = {kappa1}, kappa2 = {kappa2}, omega_m = {omega_m}, gamma_m = {gamma_m}"
        )));
    }
    Ok(())
}

/// Conditions for the chosen window.
pub fn ideal_omit<T: Scalar>(
    window: Window,
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<OmitConditions<T>, ResponseError> {
    match window {
        Window::SlowAtPlusOmega => ideal_omit_slow(kappa1, kappa2, omega_m, gamma_m),
        Window::FastAtMinusOmega => ideal_omit_fast(kappa1, kappa2, omega_m, gamma_m),
    }
}

/// Full parameter set satisfying the window conditions, in the near-resonant
/// operating regime (both cavity detunings at omega_m).
pub fn ideal_params<T: Scalar>(
    window: Window,
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<SystemParams<T>, ResponseError> {
    let cond = ideal_omit(window, kappa1, kappa2, omega_m, gamma_m)?;
    Ok(SystemParams {
        omega_m,
        gamma_m,
        kappa1,
        kappa2,
        j: cond.j,
        delta1_bar: omega_m,
        delta2: omega_m,
        beta: cond.beta,
    })
}

/// Closed-form window slope, delay, and the two simplified limits.
pub fn closed_forms<T: Scalar>(
    window: Window,
    kappa1: T,
    kappa2: T,
    omega_m: T,
    gamma_m: T,
) -> Result<ClosedForms<T>, ResponseError> {
    // feasibility gate matches the window conditions
    ideal_omit(window, kappa1, kappa2, omega_m, gamma_m)?;
    let four = T::of(4.0);
    let om_sq = omega_m * omega_m;
    match window {
        Window::SlowAtPlusOmega => {
            let xi = kappa1 - kappa2;
            let j_sq = kappa2 * kappa2 + four * om_sq;
            let tau_max = four
                * kappa1
                * (xi * kappa2 * kappa2 + four * (gamma_m + xi) * om_sq)
                / (gamma_m * xi * xi * j_sq);
            Ok(ClosedForms {
                window,
                k_max: -tau_max,
                tau_max,
                tau_max_limit_small_gamma: four * kappa1 / (gamma_m * xi),
                tau_max_limit_boundary: T::of(16.0) * kappa1 * om_sq / (xi * xi * j_sq),
            })
        }
        Window::FastAtMinusOmega => {
            let j_sq = kappa2 * kappa2 + four * om_sq;
            let z = j_sq - kappa1 * kappa2;
            let tau_max =
                -four * kappa1 * (kappa2 * z + T::of(2.0) * gamma_m * om_sq) / (gamma_m * z * z);
            Ok(ClosedForms {
                window,
                k_max: -tau_max,
                tau_max,
                tau_max_limit_small_gamma: -four * kappa1 * kappa2 / (gamma_m * z),
                tau_max_limit_boundary: -T::of(8.0) * kappa1 * om_sq / (z * z),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_cavity(kappa1: f64, delta1_bar: f64) -> SystemParams<f64> {
        SystemParams {
            omega_m: 50.0,
            gamma_m: 1.0,
            kappa1,
            kappa2: 0.0,
            j: 0.0,
            delta1_bar,
            delta2: 0.0,
            beta: 0.0,
        }
    }

    #[test]
    fn bare_cavity_on_resonance() {
        let p = bare_cavity(20.0, 37.0);
        let a = a1_plus(&p, 37.0).unwrap();
        assert!((a - Complex::new(0.05, 0.0)).norm() < 1e-15);
        let e = epsilon_t(&p, 37.0).unwrap();
        assert!((e - Complex::new(2.0, 0.0)).norm() < 1e-14);
        // hand-derived bare-cavity values: K = 2/kappa1, tau = 2/kappa1
        let k = dispersion_slope(&p, 37.0).unwrap();
        assert!((k - 0.1).abs() < 1e-14);
        let tau = group_delay(&p, 37.0).unwrap();
        assert!((tau - 0.1).abs() < 1e-14);
    }

    #[test]
    fn one_cavity_reduction_is_bitwise() {
        // the J = 0 evaluation must equal the standalone one-cavity
        // expression exactly, not just approximately
        let p = SystemParams {
            omega_m: 50.0,
            gamma_m: 1.0,
            kappa1: 20.0,
            kappa2: 10.0,
            j: 0.0,
            delta1_bar: 50.0,
            delta2: 50.0,
            beta: 5.0,
        };
        for k in 0..40 {
            let delta = 45.0 + 0.25 * k as f64;
            let got = epsilon_t(&p, delta).unwrap();
            // standalone one-cavity cleared form, same evaluation order
            let i = Complex::new(0.0, 1.0);
            let pp = Complex::new(p.kappa1, p.delta1_bar) - i * delta;
            let q = Complex::new(p.kappa1, -p.delta1_bar) - i * delta;
            let chihat =
                Complex::new(delta * delta - p.omega_m * p.omega_m, delta * p.gamma_m);
            let tib = Complex::new(0.0, 2.0 * p.omega_m * p.beta);
            let n1 = chihat * q - tib;
            let want = n1 / (pp * n1 + tib * q) * (2.0 * p.kappa1);
            assert_eq!(got, want, "delta = {delta}");

            // the two-cavity terms vanish identically at J = 0: the second
            // cavity's parameters cannot influence a single bit
            let mut decoy = p;
            decoy.kappa2 = 12345.0;
            decoy.delta2 = -77.0;
            assert_eq!(epsilon_t(&decoy, delta).unwrap(), got);
        }
    }

    #[test]
    fn slow_conditions_inverted_window_set() {
        // required values for the kappa1 = 1.1 kappa2 geometry
        let c = ideal_omit_slow(1.1e4, 1e4, 1e4, 1.0).unwrap();
        assert!((c.beta - 500.0).abs() < 1e-12);
        assert!((c.j - 5e8f64.sqrt()).abs() < 1e-7);
        assert!((c.j - 22360.679774997896).abs() < 1e-9);
    }

    #[test]
    fn slow_conditions_infeasible_at_equal_rates() {
        assert!(matches!(
            ideal_omit_slow(1e4, 1e4, 1e4, 1.0),
            Err(ResponseError::InfeasibleConditions(_))
        ));
        // kappa2 = 0 degenerates to the one-cavity conditions
        let c = ideal_omit_slow(1e4, 0.0, 1e4, 1.0).unwrap();
        assert!((c.beta - 5e3).abs() < 1e-9);
        assert!((c.j - 2e4).abs() < 1e-9);
    }

    #[test]
    fn fast_conditions_values_and_guards() {
        let c = ideal_omit_fast(4e4, 1e4, 1e4, 1.0).unwrap();
        assert!((c.j * c.j - 5e8).abs() < 1e-4);
        assert!((c.beta - 5000.0).abs() < 1e-9);
        // beta = 0 boundary
        let k2: f64 = 1e4;
        let k1 = (k2 * k2 + 4.0 * 1e8) / k2;
        assert!(matches!(
            ideal_omit_fast(k1, k2, 1e4, 1.0),
            Err(ResponseError::InfeasibleConditions(_))
        ));
        // division guard at kappa2 -> 0
        assert!(matches!(
            ideal_omit_fast(4e4, 0.0, 1e4, 1.0),
            Err(ResponseError::InfeasibleConditions(_))
        ));
    }

    #[test]
    fn perfect_transparency_at_both_windows() {
        let p = ideal_params(Window::SlowAtPlusOmega, 1.1e4, 1e4, 1e4, 1.0).unwrap();
        let e = epsilon_t(&p, 1e4).unwrap();
        assert!(e.norm() < 1e-10, "|eps_T| = {}", e.norm());

        let p = ideal_params(Window::FastAtMinusOmega, 4e4, 1e4, 1e4, 1.0).unwrap();
        let e = epsilon_t(&p, -1e4).unwrap();
        assert!(e.norm() < 1e-10, "|eps_T| = {}", e.norm());
    }

    #[test]
    fn inverted_window_absorption_is_negative_nearby() {
        let p = ideal_params(Window::SlowAtPlusOmega, 1.1e4, 1e4, 1e4, 1.0).unwrap();
        let e = epsilon_t(&p, 1e4 + 2.0).unwrap();
        assert!(e.re < 0.0, "Re eps_T = {}", e.re);
    }

    #[test]
    fn window_slope_matches_closed_form() {
        // AD against the literal closed form, slow window
        let (k1, k2, om, gm) = (1.1e4, 1e4, 1e4, 1.0);
        let p = ideal_params(Window::SlowAtPlusOmega, k1, k2, om, gm).unwrap();
        let cf = closed_forms(Window::SlowAtPlusOmega, k1, k2, om, gm).unwrap();
        let k = dispersion_slope(&p, om).unwrap();
        assert!((k - cf.k_max).abs() < 1e-10 * cf.k_max.abs());
        assert!((k + 44.0352).abs() < 1e-9, "gamma_m K = {k}");
        let tau = group_delay(&p, om).unwrap();
        assert!((tau - cf.tau_max).abs() < 1e-10 * cf.tau_max.abs());
    }

    #[test]
    fn fast_window_anchor_16_0032() {
        let (k1, k2, om, gm) = (4e4, 1e4, 1e4, 1.0);
        let cf = closed_forms(Window::FastAtMinusOmega, k1, k2, om, gm).unwrap();
        assert!((cf.k_max - 16.0032).abs() < 1e-10);
        assert!((cf.tau_max + 16.0032).abs() < 1e-10);
        // the differentiated response agrees with the literal closed forms
        let p = ideal_params(Window::FastAtMinusOmega, k1, k2, om, gm).unwrap();
        let k = dispersion_slope(&p, -om).unwrap();
        let tau = group_delay(&p, -om).unwrap();
        assert!((k - cf.k_max).abs() < 1e-9 * cf.k_max.abs());
        assert!((tau - cf.tau_max).abs() < 1e-9 * cf.tau_max.abs());
    }

    #[test]
    fn transmission_zero_is_refused() {
        // drive 1 - eps_T through zero: bare cavity has eps_T = 2 at
        // resonance, eps_T -> 0 far away, so |1 - eps_T| crosses ~0 at
        // half-linewidth-ish detuning; hit it with a root find
        let p = bare_cavity(20.0, 37.0);
        let f = |d: f64| (Complex::new(1.0, 0.0) - epsilon_t(&p, d).unwrap()).norm();
        // |1 - eps_T|^2 = z^2/(k^2+z^2) at offset z: zero exactly on resonance? no:
        // 1 - 2k/(k - i z) = (-k - iz)/(k - iz), |.| = 1. Bare cavity never
        // transmits zero; use a two-cavity point instead.
        assert!((f(37.0) - 1.0).abs() < 1e-12);
        let p2 = SystemParams {
            omega_m: 50.0,
            gamma_m: 1.0,
            kappa1: 20.0,
            kappa2: 10.0,
            j: 100.0,
            delta1_bar: 50.0,
            delta2: 50.0,
            beta: 5.0,
        };
        // scan for a deep minimum of |1 - eps_T|; if none dips below the
        // threshold the error path stays untested here (covered by unit test
        // of the threshold constant instead)
        let mut best = (0.0, f64::MAX);
        for k in 0..20000 {
            let d = 40.0 + 20.0 * k as f64 / 20000.0;
            let v = (Complex::new(1.0, 0.0) - epsilon_t(&p2, d).unwrap()).norm();
            if v < best.1 {
                best = (d, v);
            }
        }
        // group_delay must either produce a finite number or the typed error,
        // never a NaN
        match group_delay(&p2, best.0) {
            Ok(t) => assert!(t.is_finite()),
            Err(ResponseError::TransmissionZero { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn f32_instantiation_smoke() {
        let p: SystemParams<f32> = SystemParams {
            omega_m: 50.0,
            gamma_m: 1.0,
            kappa1: 20.0,
            kappa2: 10.0,
            j: 100.5,
            delta1_bar: 50.0,
            delta2: 50.0,
            beta: 5.0,
        };
        let e = epsilon_t(&p, 50.0f32).unwrap();
        assert!(e.norm().is_finite());
        let cf = closed_forms(Window::SlowAtPlusOmega, 20.0f32, 10.0, 50.0, 1.0).unwrap();
        assert!(cf.tau_max.is_finite());
    }
}
