//! Independent time-domain oracle: integrates the nonlinear mean-value
//! equations or their linearization in the rotating frame, extracts probe
//! sidebands by demodulation, and measures pulse envelope delay directly.
//!
//! Integrations are gated on dynamical stability (the gain cavity makes
//! divergence physically plausible); an explicit override exists for anyone
//! who wants to watch things blow up.

use num_complex::Complex;
use num_traits::Float;

use crate::model::{BranchSelect, ModelError, ParamSource, SystemParams};
use crate::response::{self, ResponseError};
use crate::scalar::Scalar;
use crate::steady_state;

/// Which dynamics to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full nonlinear mean-value equations; requires physical parameters.
    FullNonlinear,
    /// Linearized fluctuation dynamics around the steady state; runs from
    /// effective parameters.
    Linearized,
}

/// Integrator controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec<T> {
    pub mode: Mode,
    /// Total integration time.
    pub t_end: T,
    /// Step ceiling; must resolve the fastest rotating-frame oscillation
    /// (enforced: below 2 pi / (10 omega_m)).
    pub max_step: T,
    /// Local relative error tolerance.
    pub rel_tol: T,
    /// Local absolute error tolerance.
    pub abs_tol: T,
    /// Integrate even when the linearization is unstable.
    pub allow_unstable: bool,
}

impl<T: Scalar> IntegrationSpec<T> {
    /// Spec with conventional tolerances and the step ceiling derived from
    /// the fastest frequency in the problem.
    pub fn new(mode: Mode, t_end: T, fastest_rate: T) -> Self {
        IntegrationSpec {
            mode,
            t_end,
            max_step: T::TAU() / (T::of(20.0) * Float::max(fastest_rate, T::of(1e-30))),
            rel_tol: T::of(1e-9),
            abs_tol: T::of(1e-12),
            allow_unstable: false,
        }
    }
}

/// Probe drive description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec<T> {
    /// Probe-coupling detuning.
    pub delta: T,
    /// Probe amplitude; much weaker than the coupling drive in nonlinear runs.
    pub eps_p: T,
    pub envelope: Envelope<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope<T> {
    ContinuousWave,
    /// Gaussian envelope exp(-(t - center)^2 / (2 width^2)).
    Gaussian { center: T, width: T },
}

impl<T: Scalar> Envelope<T> {
    fn amplitude(&self, t: T) -> T {
        match *self {
            Envelope::ContinuousWave => T::one(),
            Envelope::Gaussian { center, width } => {
                let u = (t - center) / width;
                Float::exp(-u * u / T::of(2.0))
            }
        }
    }
}

/// Uniformly sampled state history. In linearized mode the stored fields are
/// the fluctuations themselves (references are zero); in nonlinear mode they
/// are absolute values with the steady state recorded separately.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// Sample spacing.
    pub dt: T,
    pub a1: Vec<Complex<T>>,
    pub a2: Vec<Complex<T>>,
    pub x: Vec<T>,
    pub p: Vec<T>,
    /// Steady-state reference subtracted during demodulation.
    pub a1_ref: Complex<T>,
    pub a2_ref: Complex<T>,
    pub x_ref: T,
    /// Probe amplitude used for normalization.
    pub eps_p: T,
    /// Time after which the slowest stable mode has decayed by e^-10.
    pub transient_time: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.a1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a1.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        T::of(i as f64) * self.dt
    }

    pub fn t_end(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    /// Demodulation window covering everything after the transient.
    pub fn steady_window(&self) -> DemodWindow<T> {
        DemodWindow {
            start: self.transient_time,
            end: self.t_end(),
        }
    }
}

/// Half-open time interval for demodulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodWindow<T> {
    pub start: T,
    pub end: T,
}

/// Measured envelope delay.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PulseResult<T> {
    /// Output peak time minus input peak time; positive = slow light.
    pub measured_delay: T,
    pub t_peak_in: T,
    pub t_peak_out: T,
    /// Normalized rms residual of the quadratic peak fits.
    pub peak_fit_residual: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimeDomainError<T: std::fmt::Debug + std::fmt::Display> {
    #[error("invalid integration setup: {0}")]
    InvalidSpec(String),
    #[error("linearized dynamics unstable (margin {margin}); pass allow_unstable to integrate anyway")]
    UnstableSystem { margin: T },
    #[error("state diverged at t = {t}")]
    DivergenceDetected { t: T },
    #[error("integrator step size collapsed at t = {t}")]
    StepSizeCollapse { t: T },
    #[error("demodulation window holds only {periods} full probe periods; need at least 10")]
    WindowTooShort { periods: usize },
    #[error("demodulation window starts at {start} before the transient has decayed (needs {required})")]
    TransientNotDecayed { required: T, start: T },
    #[error("envelope peak not found (monotone over the record)")]
    PeakNotFound,
    #[error("probe pulse too broadband: envelope width must be at least {sigma_min}")]
    ProbeTooBroadband { sigma_min: T },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

type Result<V, T> = std::result::Result<V, TimeDomainError<T>>;

type State<T> = [T; 6];

fn axpy<T: Scalar>(y: &State<T>, a: T, k: &State<T>) -> State<T> {
    [
        y[0] + a * k[0],
        y[1] + a * k[1],
        y[2] + a * k[2],
        y[3] + a * k[3],
        y[4] + a * k[4],
        y[5] + a * k[5],
    ]
}

/// Dormand-Prince 5(4) adaptive step with uniform output sampling. Steps are
/// clipped to land exactly on every sample time.
fn integrate_sampled<T: Scalar>(
    rhs: &dyn Fn(T, &State<T>) -> State<T>,
    y0: State<T>,
    n_samples: usize,
    dt: T,
    max_step: T,
    rel_tol: T,
    abs_tol: T,
    guard: T,
) -> Result<Vec<State<T>>, T> {
    let mut out = Vec::with_capacity(n_samples + 1);
    out.push(y0);
    let mut y = y0;
    let mut h = max_step;
    let mut t = T::zero();
    let two = T::of(2.0);

    for k in 1..=n_samples {
        let t_target = T::of(k as f64) * dt;
        let mut rejects = 0usize;
        while t < t_target - dt * T::of(1e-12) {
            let h_eff = Float::min(Float::min(h, max_step), t_target - t);
            if h_eff <= Float::abs(t) * T::epsilon() * two {
                return Err(TimeDomainError::StepSizeCollapse { t });
            }
            let (y_new, err_norm) = dopri_step(rhs, t, &y, h_eff, rel_tol, abs_tol);
            if err_norm <= T::one() {
                t = t + h_eff;
                y = y_new;
                for v in &y {
                    if !v.is_finite() || Float::abs(*v) > guard {
                        return Err(TimeDomainError::DivergenceDetected { t });
                    }
                }
                let grow = T::of(0.9) * Float::powf(Float::max(err_norm, T::of(1e-10)), T::of(-0.2));
                h = h_eff * Float::min(Float::max(grow, T::of(0.2)), T::of(5.0));
            } else {
                rejects += 1;
                if rejects > 100 {
                    return Err(TimeDomainError::StepSizeCollapse { t });
                }
                let shrink = T::of(0.9) * Float::powf(err_norm, T::of(-0.2));
                h = h_eff * Float::min(Float::max(shrink, T::of(0.1)), T::of(0.9));
            }
        }
        t = t_target;
        out.push(y);
    }
    Ok(out)
}

fn dopri_step<T: Scalar>(
    rhs: &dyn Fn(T, &State<T>) -> State<T>,
    t: T,
    y: &State<T>,
    h: T,
    rel_tol: T,
    abs_tol: T,
) -> (State<T>, T) {
    let c = |x: f64| T::of(x);
    let k1 = rhs(t, y);
    let k2 = rhs(t + h * c(0.2), &axpy(y, h * c(0.2), &k1));
    let y3 = axpy(&axpy(y, h * c(3.0 / 40.0), &k1), h * c(9.0 / 40.0), &k2);
    let k3 = rhs(t + h * c(0.3), &y3);
    let y4 = axpy(
        &axpy(&axpy(y, h * c(44.0 / 45.0), &k1), h * c(-56.0 / 15.0), &k2),
        h * c(32.0 / 9.0),
        &k3,
    );
    let k4 = rhs(t + h * c(0.8), &y4);
    let y5 = axpy(
        &axpy(
            &axpy(
                &axpy(y, h * c(19372.0 / 6561.0), &k1),
                h * c(-25360.0 / 2187.0),
                &k2,
            ),
            h * c(64448.0 / 6561.0),
            &k3,
        ),
        h * c(-212.0 / 729.0),
        &k4,
    );
    let k5 = rhs(t + h * c(8.0 / 9.0), &y5);
    let y6 = axpy(
        &axpy(
            &axpy(
                &axpy(
                    &axpy(y, h * c(9017.0 / 3168.0), &k1),
                    h * c(-355.0 / 33.0),
                    &k2,
                ),
                h * c(46732.0 / 5247.0),
                &k3,
            ),
            h * c(49.0 / 176.0),
            &k4,
        ),
        h * c(-5103.0 / 18656.0),
        &k5,
    );
    let k6 = rhs(t + h, &y6);
    // 5th order solution
    let ynew = axpy(
        &axpy(
            &axpy(
                &axpy(&axpy(y, h * c(35.0 / 384.0), &k1), h * c(500.0 / 1113.0), &k3),
                h * c(125.0 / 192.0),
                &k4,
            ),
            h * c(-2187.0 / 6784.0),
            &k5,
        ),
        h * c(11.0 / 84.0),
        &k6,
    );
    let k7 = rhs(t + h, &ynew);
    // embedded 4th order
    let ylow = axpy(
        &axpy(
            &axpy(
                &axpy(
                    &axpy(
                        &axpy(y, h * c(5179.0 / 57600.0), &k1),
                        h * c(7571.0 / 16695.0),
                        &k3,
                    ),
                    h * c(393.0 / 640.0),
                    &k4,
                ),
                h * c(-92097.0 / 339200.0),
                &k5,
            ),
            h * c(187.0 / 2100.0),
            &k6,
        ),
        h * c(1.0 / 40.0),
        &k7,
    );
    let mut err_norm = T::zero();
    for i in 0..6 {
        let sc = abs_tol + rel_tol * Float::max(Float::abs(y[i]), Float::abs(ynew[i]));
        err_norm = Float::max(err_norm, Float::abs(ynew[i] - ylow[i]) / sc);
    }
    (ynew, err_norm)
}

struct Resolved<T> {
    effective: SystemParams<T>,
    report: steady_state::StabilityReport<T>,
    /// Nonlinear initial condition (absolute state) when physical parameters
    /// drive a nonlinear run.
    steady: Option<steady_state::SteadyState<T>>,
}

fn resolve<T: Scalar + nalgebra::RealField>(
    source: &ParamSource<T>,
    spec: &IntegrationSpec<T>,
) -> Result<Resolved<T>, T> {
    match (spec.mode, source) {
        (Mode::FullNonlinear, ParamSource::Effective(_)) => Err(TimeDomainError::InvalidSpec(
            "nonlinear integration needs physical parameters".into(),
        )),
        (Mode::Linearized, ParamSource::Effective(p)) => {
            let report = steady_state::stability_report(p);
            Ok(Resolved { effective: *p, report, steady: None })
        }
        (mode, ParamSource::Physical(phys)) => {
            let branches = steady_state::solve_steady_state(phys);
            if branches.is_empty() {
                return Err(TimeDomainError::InvalidSpec(
                    "no steady-state branch found".into(),
                ));
            }
            let chosen = *branches
                .iter()
                .find(|b| b.stable)
                .or(if spec.allow_unstable { branches.first() } else { None })
                .ok_or(TimeDomainError::Model(ModelError::NoStableBranch))?;
            let effective = crate::model::effective_from_physical(
                phys,
                BranchSelect::Index(branches.iter().position(|b| b == &chosen).unwrap_or(0)),
            )?;
            let report = steady_state::stability_report(&effective);
            Ok(Resolved {
                effective,
                report,
                steady: if mode == Mode::FullNonlinear { Some(chosen) } else { None },
            })
        }
    }
}

fn sample_step<T: Scalar>(effective: &SystemParams<T>, delta: T) -> T {
    let f_max = [
        Float::abs(delta),
        effective.omega_m,
        Float::abs(effective.delta1_bar),
        Float::abs(effective.delta2),
    ]
    .into_iter()
    .fold(T::of(1e-30), Float::max);
    if delta == T::zero() {
        return T::TAU() / (T::of(8.0) * f_max);
    }
    let period = T::TAU() / Float::abs(delta);
    // integer samples per probe period, at least eight per fastest cycle
    let m = Float::ceil(Float::max(T::of(8.0), T::of(8.0) * f_max / Float::abs(delta)));
    period / m
}

/// Integrate the driven system and return the uniformly sampled trajectory.
///
/// Refuses dynamically unstable parameter sets unless
/// `spec.allow_unstable` is set: a gain cavity can and does diverge.
pub fn integrate<T: Scalar + nalgebra::RealField>(
    source: &ParamSource<T>,
    probe: &ProbeSpec<T>,
    spec: &IntegrationSpec<T>,
) -> Result<Trajectory<T>, T> {
    if !(spec.t_end > T::zero()) {
        return Err(TimeDomainError::InvalidSpec("t_end must be > 0".into()));
    }
    if !(spec.rel_tol > T::zero() && spec.abs_tol > T::zero()) {
        return Err(TimeDomainError::InvalidSpec("tolerances must be > 0".into()));
    }
    if probe.eps_p < T::zero() {
        return Err(TimeDomainError::InvalidSpec("eps_p must be >= 0".into()));
    }
    let resolved = resolve(source, spec)?;
    let eff = resolved.effective;
    if !(spec.max_step < T::TAU() / (T::of(10.0) * eff.omega_m)) {
        return Err(TimeDomainError::InvalidSpec(format!(
            "max_step must stay below 2 pi / (10 omega_m) = {}",
            T::TAU() / (T::of(10.0) * eff.omega_m)
        )));
    }
    if !resolved.report.is_stable && !spec.allow_unstable {
        return Err(TimeDomainError::UnstableSystem {
            margin: resolved.report.margin,
        });
    }
    let transient_time = if resolved.report.margin < T::zero() {
        T::of(10.0) / -resolved.report.margin
    } else {
        T::infinity()
    };

    let dt = sample_step(&eff, probe.delta);
    let n_samples = Float::ceil(spec.t_end / dt).to_usize().unwrap_or(usize::MAX);
    if n_samples > 40_000_000 {
        return Err(TimeDomainError::InvalidSpec(format!(
            "{n_samples} samples requested; shorten t_end or coarsen the probe"
        )));
    }

    let delta = probe.delta;
    let eps_p = probe.eps_p;
    let envelope = probe.envelope;

    let (states, a1_ref, a2_ref, x_ref) = match spec.mode {
        Mode::Linearized => {
            let m = steady_state::stability_matrix(&eff);
            let rhs = move |t: T, y: &State<T>| -> State<T> {
                let mut f = [T::zero(); 6];
                for r in 0..6 {
                    let mut acc = T::zero();
                    for c in 0..6 {
                        acc = acc + m[(r, c)] * y[c];
                    }
                    f[r] = acc;
                }
                let drive = eps_p * envelope.amplitude(t);
                let phase = delta * t;
                f[0] = f[0] + drive * Float::cos(phase);
                f[1] = f[1] - drive * Float::sin(phase);
                f
            };
            let y0 = [T::zero(); 6];
            let guard = T::of(1e12) * Float::max(T::one(), eps_p);
            let states = integrate_sampled(
                &rhs, y0, n_samples, dt, spec.max_step, spec.rel_tol, spec.abs_tol, guard,
            )?;
            (
                states,
                Complex::new(T::zero(), T::zero()),
                Complex::new(T::zero(), T::zero()),
                T::zero(),
            )
        }
        Mode::FullNonlinear => {
            let ParamSource::Physical(phys) = source else { unreachable!() };
            let phys = *phys;
            let ss = resolved.steady.expect("nonlinear run has a steady state");
            let rhs = move |t: T, y: &State<T>| -> State<T> {
                let a1 = Complex::new(y[0], y[1]);
                let a2 = Complex::new(y[2], y[3]);
                let x = y[4];
                let p = y[5];
                let i = Complex::new(T::zero(), T::one());
                let drive_p = eps_p * envelope.amplitude(t);
                let phase = delta * t;
                let probe_drive = Complex::new(
                    drive_p * Float::cos(phase),
                    -drive_p * Float::sin(phase),
                );
                let da1 = -Complex::new(phys.kappa1, phys.delta1 - phys.g0 * x) * a1
                    + i * Complex::new(phys.j, T::zero()) * a2
                    + Complex::new(phys.eps_c, T::zero())
                    + probe_drive;
                let da2 = Complex::new(phys.kappa2, -phys.delta2) * a2
                    + i * Complex::new(phys.j, T::zero()) * a1;
                let dp = -phys.gamma_m * p - phys.m * phys.omega_m * phys.omega_m * x
                    + phys.hbar * phys.g0 * a1.norm_sqr();
                let dx = p / phys.m;
                [da1.re, da1.im, da2.re, da2.im, dx, dp]
            };
            let y0 = [
                ss.a1s.re, ss.a1s.im, ss.a2s.re, ss.a2s.im, ss.x_s, ss.p_s,
            ];
            let scale0 = y0
                .iter()
                .map(|v| Float::abs(*v))
                .fold(Float::max(T::one(), eps_p), Float::max);
            let guard = T::of(1e12) * scale0;
            let states = integrate_sampled(
                &rhs, y0, n_samples, dt, spec.max_step, spec.rel_tol, spec.abs_tol, guard,
            )?;
            (states, ss.a1s, ss.a2s, ss.x_s)
        }
    };

    let mut a1 = Vec::with_capacity(states.len());
    let mut a2 = Vec::with_capacity(states.len());
    let mut x = Vec::with_capacity(states.len());
    let mut p = Vec::with_capacity(states.len());
    for s in &states {
        a1.push(Complex::new(s[0], s[1]));
        a2.push(Complex::new(s[2], s[3]));
        x.push(s[4]);
        p.push(s[5]);
    }
    Ok(Trajectory {
        dt,
        a1,
        a2,
        x,
        p,
        a1_ref,
        a2_ref,
        x_ref,
        eps_p,
        transient_time,
    })
}

/// Projection of the passive-cavity record onto e^{+ i delta t}: the a1+
/// sideband estimate, normalized by the probe amplitude. The window is
/// truncated to an integer number of probe periods (at least 10) and must not
/// begin before the transient cutoff.
pub fn demodulate_sideband<T: Scalar>(
    traj: &Trajectory<T>,
    delta: T,
    window: DemodWindow<T>,
) -> Result<Complex<T>, T> {
    if delta == T::zero() {
        return Err(TimeDomainError::InvalidSpec(
            "demodulation needs a nonzero probe detuning".into(),
        ));
    }
    let period = T::TAU() / Float::abs(delta);
    let fudge = T::of(1e-9) * period;
    if window.start < traj.transient_time - fudge {
        return Err(TimeDomainError::TransientNotDecayed {
            required: traj.transient_time,
            start: window.start,
        });
    }
    let span = window.end - window.start;
    let n_per = Float::floor(span / period + T::of(1e-9)).to_usize().unwrap_or(0);
    if n_per < 10 {
        return Err(TimeDomainError::WindowTooShort { periods: n_per });
    }
    let t_a = window.start;
    let t_b = t_a + T::of(n_per as f64) * period;
    if t_b > traj.t_end() + fudge {
        return Err(TimeDomainError::InvalidSpec(
            "demodulation window extends past the trajectory".into(),
        ));
    }

    let z = |i: usize| -> Complex<T> {
        let t = traj.time(i);
        let ph = delta * t;
        (traj.a1[i] - traj.a1_ref) * Complex::new(Float::cos(ph), Float::sin(ph))
    };
    let interp = |t: T| -> Complex<T> {
        let u = t / traj.dt;
        let i = Float::floor(u).to_usize().unwrap_or(0).min(traj.len() - 1);
        if i + 1 >= traj.len() {
            return z(i);
        }
        let w = u - T::of(i as f64);
        z(i) * (T::one() - w) + z(i + 1) * w
    };

    // trapezoid over whole samples, fractional ends by linear interpolation
    let i_lo = Float::ceil(t_a / traj.dt - T::of(1e-9)).to_usize().unwrap_or(0);
    let i_hi = Float::floor(t_b / traj.dt + T::of(1e-9))
        .to_usize()
        .unwrap_or(0)
        .min(traj.len() - 1);
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in i_lo..i_hi {
        acc = acc + (z(i) + z(i + 1)) * T::of(0.5) * traj.dt;
    }
    let t_lo = T::of(i_lo as f64) * traj.dt;
    if t_lo > t_a {
        acc = acc + (interp(t_a) + z(i_lo)) * T::of(0.5) * (t_lo - t_a);
    }
    let t_hi = T::of(i_hi as f64) * traj.dt;
    if t_b > t_hi {
        acc = acc + (z(i_hi) + interp(t_b)) * T::of(0.5) * (t_b - t_hi);
    }
    let mean = acc / (t_b - t_a);
    Ok(if traj.eps_p > T::zero() {
        mean / traj.eps_p
    } else {
        mean
    })
}

/// Width of the group-delay feature at `delta0`: distance between the
/// half-magnitude crossings of tau on either side. This is the bandwidth a
/// narrowband pulse must fit inside; near-critical windows make it much
/// narrower than the transparency dip itself.
pub fn delay_feature_width<T: Scalar>(params: &SystemParams<T>, delta0: T) -> Result<T, T> {
    let tau_c = response::group_delay(params, delta0)?;
    let scale = Float::max(Float::abs(delta0), params.omega_m);
    if tau_c == T::zero() {
        return Ok(scale);
    }
    let half = Float::abs(tau_c) / T::of(2.0);
    let side = |sign: T| -> T {
        let above = |h: T| -> bool {
            match response::group_delay(params, delta0 + sign * h) {
                Ok(t) => Float::abs(t) > half,
                Err(_) => true,
            }
        };
        let mut h = scale * T::of(1e-9);
        let cap = T::of(10.0) * scale;
        while above(h) {
            h = h * T::of(2.0);
            if h > cap {
                return cap;
            }
        }
        let mut lo = h / T::of(2.0);
        let mut hi = h;
        for _ in 0..60 {
            let mid = (lo + hi) / T::of(2.0);
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::of(2.0)
    };
    Ok(side(T::one()) + side(-T::one()))
}

/// Smallest narrowband-compliant Gaussian envelope width at this operating
/// point: pulse spectral width at most a tenth of the delay feature, and the
/// envelope slow against the carrier (at least five probe periods).
pub fn narrowband_sigma<T: Scalar>(params: &SystemParams<T>, delta: T) -> Result<T, T> {
    let by_feature = T::of(10.0) / delay_feature_width(params, delta)?;
    let by_carrier = T::of(5.0) * T::TAU() / Float::max(Float::abs(delta), T::of(1e-30));
    Ok(Float::max(by_feature, by_carrier))
}

/// Run the pulse experiment: drive with a narrowband Gaussian probe, form the
/// transmitted field eps_p(t) - 2 kappa1 (a1(t) - a1s), extract input and
/// output envelopes by sliding demodulation, and return the peak-time
/// difference (positive = delayed, negative = advanced).
pub fn measure_pulse_delay<T: Scalar + nalgebra::RealField>(
    source: &ParamSource<T>,
    probe: &ProbeSpec<T>,
    spec: &IntegrationSpec<T>,
) -> Result<PulseResult<T>, T> {
    let Envelope::Gaussian { center, width } = probe.envelope else {
        return Err(TimeDomainError::InvalidSpec(
            "pulse measurement needs a Gaussian envelope".into(),
        ));
    };
    let resolved = resolve(source, spec)?;
    let sigma_min = narrowband_sigma(&resolved.effective, probe.delta)?;
    if width < sigma_min * T::of(0.999) {
        return Err(TimeDomainError::ProbeTooBroadband { sigma_min });
    }

    let traj = integrate(source, probe, spec)?;
    let kappa1 = resolved.effective.kappa1;
    let delta = probe.delta;
    let n = traj.len();

    // Sliding-window demodulation over an integer number of probe periods,
    // identical processing for input and output so peak-shift biases cancel.
    let period = T::TAU() / Float::abs(delta);
    let m = Float::round(period / traj.dt).to_usize().unwrap_or(1).max(1);
    let w_per = Float::floor(width / (T::of(10.0) * period))
        .to_usize()
        .unwrap_or(0)
        .clamp(2, 100_000);
    let w_samples = (w_per * m).min(n.saturating_sub(2)).max(2);

    let mut pre_out = Vec::with_capacity(n + 1);
    let mut pre_in = Vec::with_capacity(n + 1);
    let mut acc_out = Complex::new(T::zero(), T::zero());
    let mut acc_in = T::zero();
    pre_out.push(acc_out);
    pre_in.push(acc_in);
    for i in 0..n {
        let t = traj.time(i);
        let ph = delta * t;
        let rot = Complex::new(Float::cos(ph), Float::sin(ph));
        let g = traj.eps_p * Envelope::Gaussian { center, width }.amplitude(t);
        let z_out = Complex::new(g, T::zero())
            - (traj.a1[i] - traj.a1_ref) * rot * (T::of(2.0) * kappa1);
        acc_out = acc_out + z_out;
        acc_in = acc_in + g;
        pre_out.push(acc_out);
        pre_in.push(acc_in);
    }
    let n_env = n - w_samples;
    let inv_w = T::one() / T::of(w_samples as f64);
    let mut env_out = Vec::with_capacity(n_env);
    let mut env_in = Vec::with_capacity(n_env);
    for i in 0..n_env {
        env_out.push((pre_out[i + w_samples] - pre_out[i]).norm() * inv_w);
        env_in.push(Float::abs(pre_in[i + w_samples] - pre_in[i]) * inv_w);
    }

    let fit_half = Float::round(width / (T::of(4.0) * traj.dt))
        .to_usize()
        .unwrap_or(3)
        .max(3);
    let (peak_out, res_out) = fit_peak(&env_out, fit_half)?;
    let (peak_in, res_in) = fit_peak(&env_in, fit_half)?;
    let t_peak_out = (peak_out + T::of(0.5) * T::of(w_samples as f64)) * traj.dt;
    let t_peak_in = (peak_in + T::of(0.5) * T::of(w_samples as f64)) * traj.dt;
    Ok(PulseResult {
        measured_delay: t_peak_out - t_peak_in,
        t_peak_in,
        t_peak_out,
        peak_fit_residual: Float::max(res_out, res_in),
    })
}

/// Quadratic least-squares fit around the discrete argmax; returns the vertex
/// in fractional sample units and the normalized fit residual.
fn fit_peak<T: Scalar>(env: &[T], half: usize) -> Result<(T, T), T> {
    if env.len() < 8 {
        return Err(TimeDomainError::PeakNotFound);
    }
    let mut imax = 0usize;
    let mut vmax = env[0];
    for (i, v) in env.iter().enumerate() {
        if *v > vmax {
            vmax = *v;
            imax = i;
        }
    }
    if vmax <= T::zero() {
        return Err(TimeDomainError::PeakNotFound);
    }
    let lo = imax.saturating_sub(half);
    let hi = (imax + half + 1).min(env.len());
    if imax <= lo + 1 || imax + 2 >= hi {
        // argmax at the edge of the record: monotone envelope
        return Err(TimeDomainError::PeakNotFound);
    }
    // least squares y = c0 + c1 u + c2 u^2, u relative to imax
    let (mut s0, mut s1, mut s2, mut s3, mut s4) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let (mut t0, mut t1, mut t2) = (T::zero(), T::zero(), T::zero());
    for i in lo..hi {
        let u = T::of(i as f64) - T::of(imax as f64);
        let y = env[i];
        let u2 = u * u;
        s0 = s0 + T::one();
        s1 = s1 + u;
        s2 = s2 + u2;
        s3 = s3 + u2 * u;
        s4 = s4 + u2 * u2;
        t0 = t0 + y;
        t1 = t1 + y * u;
        t2 = t2 + y * u2;
    }
    // normal equations, 3x3 solve by elimination
    let det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s2 * s3) + s2 * (s1 * s3 - s2 * s2);
    if det == T::zero() {
        return Err(TimeDomainError::PeakNotFound);
    }
    let c0 = (t0 * (s2 * s4 - s3 * s3) - s1 * (t1 * s4 - t2 * s3) + s2 * (t1 * s3 - t2 * s2)) / det;
    let c1 = (s0 * (t1 * s4 - t2 * s3) - t0 * (s1 * s4 - s2 * s3) + s2 * (s1 * t2 - s2 * t1)) / det;
    let c2 = (s0 * (s2 * t2 - s3 * t1) - s1 * (s1 * t2 - s3 * t0) + t0 * (s1 * s3 - s2 * s2)) / det;
    if !(c2 < T::zero()) {
        return Err(TimeDomainError::PeakNotFound);
    }
    let vertex = -c1 / (T::of(2.0) * c2);
    // residual of the fit, normalized by the peak value
    let mut rss = T::zero();
    let mut count = T::zero();
    for i in lo..hi {
        let u = T::of(i as f64) - T::of(imax as f64);
        let yhat = c0 + c1 * u + c2 * u * u;
        let d = env[i] - yhat;
        rss = rss + d * d;
        count = count + T::one();
    }
    let residual = Float::sqrt(rss / count) / vmax;
    Ok((T::of(imax as f64) + vertex, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_traj(
        delta: f64,
        c_plus: Complex<f64>,
        c_minus: Complex<f64>,
        eps_p: f64,
    ) -> Trajectory<f64> {
        let period = std::f64::consts::TAU / delta;
        let dt = period / 32.0;
        let n = 4000;
        let a1: Vec<Complex<f64>> = (0..n)
            .map(|i| {
                let t = dt * i as f64;
                let e = Complex::new(0.0, -delta * t).exp();
                c_plus * e + c_minus * e.conj()
            })
            .collect();
        Trajectory {
            dt,
            a2: vec![Complex::new(0.0, 0.0); n],
            x: vec![0.0; n],
            p: vec![0.0; n],
            a1,
            a1_ref: Complex::new(0.0, 0.0),
            a2_ref: Complex::new(0.0, 0.0),
            x_ref: 0.0,
            eps_p,
            transient_time: 0.0,
        }
    }

    #[test]
    fn demod_recovers_pure_sideband() {
        let delta = 50.0;
        let c = Complex::new(0.3, -0.7);
        let traj = synthetic_traj(delta, c, Complex::new(0.0, 0.0), 2.0);
        let win = traj.steady_window();
        let got = demodulate_sideband(&traj, delta, win).unwrap();
        let want = c / 2.0;
        assert!((got - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn demod_rejects_counter_rotating_component() {
        let delta = 50.0;
        let cp = Complex::new(0.3, -0.7);
        let cm = Complex::new(-1.1, 0.4);
        let traj = synthetic_traj(delta, cp, cm, 1.0);
        let win = traj.steady_window();
        let got = demodulate_sideband(&traj, delta, win).unwrap();
        assert!((got - cp).norm() < 1e-10 * cp.norm(), "got {got}");
    }

    #[test]
    fn demod_window_validation() {
        let traj = synthetic_traj(50.0, Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), 1.0);
        let short = DemodWindow { start: 0.0, end: 2.0 * std::f64::consts::TAU / 50.0 };
        assert!(matches!(
            demodulate_sideband(&traj, 50.0, short),
            Err(TimeDomainError::WindowTooShort { .. })
        ));
        let mut traj2 = traj.clone();
        traj2.transient_time = 1.0;
        let early = DemodWindow { start: 0.0, end: traj2.t_end() };
        assert!(matches!(
            demodulate_sideband(&traj2, 50.0, early),
            Err(TimeDomainError::TransientNotDecayed { .. })
        ));
    }

    #[test]
    fn unstable_set_is_gated() {
        // exact ideal-OMIT conditions are (weakly) dynamically unstable: the
        // gate must refuse them without the override
        let params = crate::response::ideal_params(
            crate::response::Window::SlowAtPlusOmega,
            20.0,
            10.0,
            50.0,
            1.0,
        )
        .unwrap();
        let probe = ProbeSpec {
            delta: 50.0,
            eps_p: 1.0,
            envelope: Envelope::ContinuousWave,
        };
        let spec = IntegrationSpec::new(Mode::Linearized, 10.0, 50.0);
        match integrate(&ParamSource::Effective(params), &probe, &spec) {
            Err(TimeDomainError::UnstableSystem { margin }) => assert!(margin > 0.0),
            other => panic!("expected stability gate, got {other:?}"),
        }
        let mut open = spec;
        open.allow_unstable = true;
        assert!(integrate(&ParamSource::Effective(params), &probe, &open).is_ok());
    }

    #[test]
    fn integrator_tracks_harmonic_oscillator() {
        // x'' = -w^2 x embedded in the 6-state layout
        let w = 3.0;
        let rhs = move |_t: f64, y: &State<f64>| -> State<f64> {
            [0.0, 0.0, 0.0, 0.0, y[5], -w * w * y[4]]
        };
        let y0 = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let states =
            integrate_sampled(&rhs, y0, 1000, 0.01, 0.02, 1e-10, 1e-12, 1e12).unwrap();
        let t = 10.0;
        let want = (w * t).cos();
        let got = states[1000][4];
        assert!((got - want).abs() < 1e-7, "got {got}, want {want}");
    }
}
