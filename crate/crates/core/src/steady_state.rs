//! Classical steady state and dynamical stability.
//!
//! The steady displacement solves a cubic (bistability), obtained by
//! eliminating the cavity amplitudes from the fixed-point relations. Stability
//! comes from the eigenvalues of the linearized dynamics around the fixed
//! point; with an active (gain) cavity this is not automatic, so every
//! downstream time-domain run is gated on it.

use nalgebra::{Matrix3, Matrix6, RealField};
use num_complex::Complex;
use num_traits::Float;

use crate::model::{PhysicalParams, SystemParams};
use crate::scalar::Scalar;

/// One branch of the classical fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    /// Passive-cavity amplitude.
    pub a1s: Complex<T>,
    /// Active-cavity amplitude.
    pub a2s: Complex<T>,
    /// Mechanical displacement.
    pub x_s: T,
    /// Mechanical momentum; identically zero at a fixed point.
    pub p_s: T,
    /// Dynamical stability of this branch (strict: all eigenvalue real parts
    /// negative).
    pub stable: bool,
    /// Number of coincident cubic roots collapsed into this entry.
    pub multiplicity: usize,
}

/// Eigenvalue analysis of the linearized dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    /// The six eigenvalues, sorted by descending real part.
    pub eigenvalues: Vec<Complex<T>>,
    /// True iff every real part is strictly negative (marginal modes count as
    /// unstable).
    pub is_stable: bool,
    /// True when the largest real part is zero to within numerical tolerance.
    pub marginal: bool,
    /// Largest eigenvalue real part.
    pub margin: T,
}

/// Real 6x6 generator of the linearized dynamics in the quadrature basis
/// (Re a1, Im a1, Re a2, Im a2, x, p).
///
/// The physical realization is reduced to scaled units (hbar = m = 1) with the
/// steady amplitude rotated real; eigenvalues are invariant under that
/// similarity, so only the effective parameters enter. The light-mechanics
/// coupling is then `g = sqrt(2 beta omega_m)`.
pub fn stability_matrix<T: Scalar + RealField>(params: &SystemParams<T>) -> Matrix6<T> {
    let z = T::zero();
    let g = Float::sqrt(Float::max(
        T::of(2.0) * params.beta * params.omega_m,
        T::zero(),
    ));
    let k1 = params.kappa1;
    let k2 = params.kappa2;
    let d1 = params.delta1_bar;
    let d2 = params.delta2;
    let j = params.j;
    Matrix6::from_rows(&[
        [-k1, d1, z, -j, z, z].into(),
        [-d1, -k1, j, z, g, z].into(),
        [z, -j, k2, d2, z, z].into(),
        [j, z, -d2, k2, z, z].into(),
        [z, z, z, z, z, T::one()].into(),
        [
            T::of(2.0) * g,
            z,
            z,
            z,
            -params.omega_m * params.omega_m,
            -params.gamma_m,
        ]
        .into(),
    ])
}

/// Eigenvalues and stability verdict of the linearized system.
pub fn stability_report<T: Scalar + RealField>(params: &SystemParams<T>) -> StabilityReport<T> {
    let m = stability_matrix(params);
    let eig = m.complex_eigenvalues();
    let mut eigenvalues: Vec<Complex<T>> = eig.iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let margin = eigenvalues
        .first()
        .map(|e| e.re)
        .unwrap_or_else(T::zero);
    let scale = eigenvalues
        .iter()
        .map(|e| e.norm())
        .fold(T::zero(), Float::max);
    let tol = T::of(1e-9) * Float::max(scale, T::one());
    let marginal = Float::abs(margin) <= tol;
    StabilityReport {
        eigenvalues,
        is_stable: margin < T::zero() && !marginal,
        marginal,
        margin,
    }
}

/// Coefficients of the displacement cubic a3 x^3 + a2 x^2 + a1 x + a0 = 0,
/// from eliminating the cavity amplitudes.
fn displacement_cubic<T: Scalar>(phys: &PhysicalParams<T>) -> (T, T, T, T) {
    let den2 = phys.kappa2 * phys.kappa2 + phys.delta2 * phys.delta2;
    let (kap_eff, dtilde) = if phys.j == T::zero() {
        (phys.kappa1, phys.delta1)
    } else {
        (
            phys.kappa1 - phys.j * phys.j * phys.kappa2 / den2,
            phys.delta1 - phys.j * phys.j * phys.delta2 / den2,
        )
    };
    let drive = phys.hbar * phys.g0 * phys.eps_c * phys.eps_c
        / (phys.m * phys.omega_m * phys.omega_m);
    (
        phys.g0 * phys.g0,
        -T::of(2.0) * dtilde * phys.g0,
        kap_eff * kap_eff + dtilde * dtilde,
        -drive,
    )
}

fn cubic_eval<T: Scalar>(c: (T, T, T, T), x: T) -> T {
    ((c.0 * x + c.1) * x + c.2) * x + c.3
}

fn cubic_deriv<T: Scalar>(c: (T, T, T, T), x: T) -> T {
    (T::of(3.0) * c.0 * x + T::of(2.0) * c.1) * x + c.2
}

/// All real roots of the cubic, via companion-matrix eigenvalues with a Newton
/// polish. Closed-form radicals cancel catastrophically near degenerate roots,
/// so they are avoided.
fn real_cubic_roots<T: Scalar + RealField>(c: (T, T, T, T)) -> Vec<(T, usize)> {
    let (a3, a2, a1, a0) = c;
    if a3 == T::zero() {
        // Degenerate: linear or quadratic (g0 = 0 makes it linear).
        if a2 == T::zero() {
            if a1 == T::zero() {
                return vec![];
            }
            return vec![(-a0 / a1, 1)];
        }
        let disc = a1 * a1 - T::of(4.0) * a2 * a0;
        if disc < T::zero() {
            return vec![];
        }
        let s = Float::sqrt(disc);
        let q = -(a1 + Float::copysign(s, a1)) / T::of(2.0);
        let mut roots = vec![(q / a2, 1)];
        if q != T::zero() {
            roots.push((a0 / q, 1));
        }
        roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        return dedupe_roots(roots);
    }
    let p = a2 / a3;
    let q = a1 / a3;
    let r = a0 / a3;
    let companion = Matrix3::new(
        T::zero(),
        T::zero(),
        -r,
        T::one(),
        T::zero(),
        -q,
        T::zero(),
        T::one(),
        -p,
    );
    let eig = companion.complex_eigenvalues();

    // A real cubic has 1 or 3 real roots; the discriminant decides which.
    let disc = T::of(18.0) * a3 * a2 * a1 * a0 - T::of(4.0) * a2 * a2 * a2 * a0
        + a2 * a2 * a1 * a1
        - T::of(4.0) * a3 * a1 * a1 * a1
        - T::of(27.0) * a3 * a3 * a0 * a0;
    let mut candidates: Vec<Complex<T>> = eig.iter().copied().collect();
    candidates.sort_by(|x, y| {
        Float::abs(x.im)
            .partial_cmp(&Float::abs(y.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let take = if disc >= T::zero() { 3 } else { 1 };
    let mut roots: Vec<(T, usize)> = candidates
        .into_iter()
        .take(take)
        .map(|z| {
            // Newton polish on the real axis.
            let mut x = z.re;
            for _ in 0..8 {
                let f = cubic_eval(c, x);
                let d = cubic_deriv(c, x);
                if d == T::zero() {
                    break;
                }
                let step = f / d;
                x = x - step;
                if Float::abs(step) <= Float::abs(x) * T::of(1e-15) {
                    break;
                }
            }
            (x, 1)
        })
        .collect();
    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    dedupe_roots(roots)
}

fn dedupe_roots<T: Scalar>(roots: Vec<(T, usize)>) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize)> = Vec::with_capacity(roots.len());
    let scale = roots
        .iter()
        .map(|r| Float::abs(r.0))
        .fold(T::zero(), Float::max);
    let tol = T::of(1e-8) * Float::max(scale, T::of(1e-300));
    for (x, m) in roots {
        match out.last_mut() {
            Some(last) if Float::abs(last.0 - x) <= tol => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out
}

/// Solve the classical steady state: every real displacement root completed to
/// a full fixed point, ascending in displacement, stability flagged.
pub fn solve_steady_state<T: Scalar + RealField>(
    phys: &PhysicalParams<T>,
) -> Vec<SteadyState<T>> {
    let roots = real_cubic_roots(displacement_cubic(phys));
    roots
        .into_iter()
        .map(|(x_s, multiplicity)| complete_branch(phys, x_s, multiplicity))
        .collect()
}

fn complete_branch<T: Scalar + RealField>(
    phys: &PhysicalParams<T>,
    x_s: T,
    multiplicity: usize,
) -> SteadyState<T> {
    // a2 self-energy J^2 / (i delta2 - kappa2)
    let denom = Complex::new(-phys.kappa2, phys.delta2);
    let self_energy = if phys.j == T::zero() {
        Complex::new(T::zero(), T::zero())
    } else {
        Complex::new(phys.j * phys.j, T::zero()) / denom
    };
    let u = Complex::new(phys.kappa1, phys.delta1 - phys.g0 * x_s) + self_energy;
    let a1s = Complex::new(phys.eps_c, T::zero()) / u;
    let a2s = Complex::new(T::zero(), phys.j) * a1s / denom;
    let eff = phys.effective_with(x_s, a1s.norm_sqr());
    let stable = stability_report(&eff).is_stable;
    SteadyState {
        a1s,
        a2s,
        x_s,
        p_s: T::zero(),
        stable,
        multiplicity,
    }
}

/// Largest relative residual of the four fixed-point relations. Valid output
/// keeps this below 1e-10.
pub fn steady_state_residual<T: Scalar>(phys: &PhysicalParams<T>, state: &SteadyState<T>) -> T {
    let i = Complex::new(T::zero(), T::one());
    let a1 = state.a1s;
    let a2 = state.a2s;
    // cavity 1 balance
    let t1 = Complex::new(phys.kappa1, phys.delta1 - phys.g0 * state.x_s) * a1;
    let t2 = i * Complex::new(phys.j, T::zero()) * a2;
    let t3 = Complex::new(phys.eps_c, T::zero());
    let r1 = (t1 - t2 - t3).norm();
    let s1 = Float::max(t1.norm(), Float::max(t2.norm(), t3.norm()));
    // cavity 2 balance
    let u1 = Complex::new(phys.kappa2, -phys.delta2) * a2;
    let u2 = i * Complex::new(phys.j, T::zero()) * a1;
    let r2 = (u1 + u2).norm();
    let s2 = Float::max(u1.norm(), u2.norm());
    // force balance
    let v1 = phys.m * phys.omega_m * phys.omega_m * state.x_s;
    let v2 = phys.hbar * phys.g0 * a1.norm_sqr();
    let r3 = Float::abs(v1 - v2 + phys.gamma_m * state.p_s);
    let s3 = Float::max(Float::abs(v1), Float::abs(v2));
    // velocity
    let r4 = Float::abs(state.p_s) / phys.m;
    let one = T::one();
    let rel = |r: T, s: T| if s > T::zero() { r / s } else { r };
    Float::max(
        Float::max(rel(r1, s1), rel(r2, s2)),
        Float::max(rel(r3, s3), rel(r4, one)),
    )
}
