//! Command-line front end: response spectra, transparency conditions, closed
//! forms, stability, steady states, time-domain experiments, sweeps, and
//! reference-figure datasets as CSV/JSON (optionally SVG for 1-D curves).
//!
//! Exit codes: 0 success, 2 validation/usage errors (machine-readable JSON on
//! stderr), 3 I/O errors. All numeric output uses shortest round-trip
//! formatting, so files re-parse to the exact same values.

mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use omitlight::model::{self, ParamSource, SystemParams};
use omitlight::response::{self, Window};
use omitlight::steady_state;
use omitlight::sweep::{self, AxisParam, EvalDelta, Quantity, Spacing, SweepAxis, SweepSpec};
use omitlight::timedomain::{self, Envelope, IntegrationSpec, Mode, ProbeSpec};
use omitlight::BranchSelect;

#[derive(Parser)]
#[command(
    name = "omitlight",
    version,
    about = "Slow and fast light in a passive-active optomechanical dimer"
)]
struct Cli {
    /// Unit convention recorded in outputs: rates in multiples of gamma_m
    /// (the normalized convention) or absolute SI angular frequencies.
    #[arg(long, global = true, value_enum, default_value_t = Units::GammaM)]
    units: Units,
    /// Output file; stdout when omitted. Relative paths resolve against
    /// $OMITLIGHT_OUT_DIR when that is set.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    #[value(name = "gamma-m")]
    GammaM,
    Si,
}

impl Units {
    fn label(self) -> &'static str {
        match self {
            Units::GammaM => "gamma_m",
            Units::Si => "si",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Slow,
    Fast,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Window {
        match w {
            WindowArg::Slow => Window::SlowAtPlusOmega,
            WindowArg::Fast => Window::FastAtMinusOmega,
        }
    }
}

/// Effective parameters, from a file or assembled from inline flags.
#[derive(Args)]
struct ParamInput {
    /// JSON parameter file; a "mode" key selects effective or physical
    /// parametrization.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    omega_m: Option<f64>,
    #[arg(long)]
    gamma_m: Option<f64>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    delta1_bar: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

enum CliError {
    Validation(serde_json::Value),
    Io(String),
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(json!({ "error": msg.into() }))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl ParamInput {
    fn source(&self) -> Result<ParamSource<f64>, CliError> {
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path)?;
            let source = model::parse_param_file::<f64>(&text).map_err(|e| {
                CliError::Validation(json!({
                    "error": "invalid parameter file",
                    "detail": e.to_string(),
                    "file": path.display().to_string(),
                }))
            })?;
            let violations = match &source {
                ParamSource::Effective(p) => model::validate(p),
                ParamSource::Physical(p) => model::validate_physical(p),
            };
            if !violations.is_empty() {
                return Err(CliError::Validation(json!({
                    "error": "parameter invariants violated",
                    "violations": violations,
                })));
            }
            return Ok(source);
        }
        let mut missing = Vec::new();
        let mut grab = |name: &'static str, v: Option<f64>| {
            if v.is_none() {
                missing.push(name);
            }
            v.unwrap_or(0.0)
        };
        let p = SystemParams {
            omega_m: grab("omega-m", self.omega_m),
            gamma_m: grab("gamma-m", self.gamma_m),
            kappa1: grab("kappa1", self.kappa1),
            kappa2: grab("kappa2", self.kappa2),
            j: grab("J", self.j),
            delta1_bar: grab("delta1-bar", self.delta1_bar),
            delta2: grab("delta2", self.delta2),
            beta: grab("beta", self.beta),
        };
        if !missing.is_empty() {
            return Err(CliError::Validation(json!({
                "error": "missing parameters: pass --params FILE or all inline flags",
                "missing": missing,
            })));
        }
        let violations = model::validate(&p);
        if !violations.is_empty() {
            return Err(CliError::Validation(json!({
                "error": "parameter invariants violated",
                "violations": violations,
            })));
        }
        Ok(ParamSource::Effective(p))
    }

    fn effective(&self) -> Result<SystemParams<f64>, CliError> {
        self.source()?
            .effective(BranchSelect::Stable)
            .map_err(|e| CliError::validation(e.to_string()))
    }
}

/// Window-condition inputs shared by `conditions` and `closedforms`.
#[derive(Args)]
struct RatesInput {
    #[arg(long, value_enum)]
    window: WindowArg,
    #[arg(long)]
    kappa1: f64,
    #[arg(long)]
    kappa2: f64,
    #[arg(long)]
    omega_m: f64,
    #[arg(long)]
    gamma_m: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Probe response spectrum over a detuning range.
    #[command(allow_negative_numbers = true)]
    Response {
        #[command(flatten)]
        params: ParamInput,
        /// Range minimum, in the chosen normalization.
        #[arg(long, default_value_t = -10.0)]
        delta_min: f64,
        /// Range maximum, in the chosen normalization.
        #[arg(long, default_value_t = 10.0)]
        delta_max: f64,
        #[arg(long, default_value_t = 1001)]
        delta_count: usize,
        /// abs: literal detunings; slow: omega_m + gamma_m * v;
        /// fast: -omega_m + gamma_m * v.
        #[arg(long, value_enum, default_value_t = Normalize::Slow)]
        normalize: Normalize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Ideal-transparency conditions for a window.
    #[command(allow_negative_numbers = true)]
    Conditions {
        #[command(flatten)]
        rates: RatesInput,
    },
    /// Closed-form window slope, delay, and simplified limits.
    #[command(allow_negative_numbers = true)]
    Closedforms {
        #[command(flatten)]
        rates: RatesInput,
    },
    /// Eigenvalues and verdict of the linearized dynamics.
    #[command(allow_negative_numbers = true)]
    Stability {
        #[command(flatten)]
        params: ParamInput,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Classical steady-state branches (physical parameters).
    #[command(allow_negative_numbers = true)]
    Steadystate {
        #[command(flatten)]
        params: ParamInput,
    },
    /// Integrate the driven dynamics: trajectory CSV, demodulated sideband,
    /// or pulse delay measurement.
    #[command(allow_negative_numbers = true)]
    Timedomain {
        #[command(flatten)]
        params: ParamInput,
        #[arg(long, value_enum, default_value_t = SimMode::Linearized)]
        mode: SimMode,
        /// Probe detuning (absolute rate units).
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        eps_p: f64,
        /// cw or gaussian envelope.
        #[arg(long, value_enum, default_value_t = EnvelopeArg::Cw)]
        envelope: EnvelopeArg,
        /// Gaussian center; defaults to 6 sigma.
        #[arg(long)]
        center: Option<f64>,
        /// Gaussian width; defaults to the narrowband minimum.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        max_step: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Integrate even when the linearized dynamics is unstable.
        #[arg(long)]
        allow_unstable: bool,
        /// Measure the pulse envelope delay instead of dumping the trajectory.
        #[arg(long, conflicts_with = "demod")]
        measure_delay: bool,
        /// Demodulate the probe sideband instead of dumping the trajectory.
        #[arg(long)]
        demod: bool,
    },
    /// 1-D or 2-D parameter sweep.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        params: ParamInput,
        /// Axis as `name:min:max:count[:log]`; repeat for a second axis.
        /// Names: delta, omega_m, gamma_m, kappa1, kappa2, J, delta1_bar,
        /// delta2, beta, xi, eta.
        #[arg(long, required = true)]
        axis: Vec<String>,
        /// Comma-separated quantities: re_eps_T, im_eps_T, slope_K, tau,
        /// tau_max_closed_form.
        #[arg(long, default_value = "re_eps_T,im_eps_T,slope_K,tau")]
        quantity: String,
        /// Re-solve the ideal window conditions at every point.
        #[arg(long, value_enum)]
        enforce: Option<WindowArg>,
        /// Evaluate spectrum quantities at this window when delta is not an
        /// axis.
        #[arg(long, value_enum, conflicts_with = "at_delta")]
        at_window: Option<WindowArg>,
        /// Evaluate spectrum quantities at this fixed detuning.
        #[arg(long)]
        at_delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Regenerate a reference-figure dataset (figures 2-8).
    #[command(allow_negative_numbers = true)]
    Figure {
        #[arg(long)]
        id: u8,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Normalize {
    Abs,
    Slow,
    Fast,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Linearized,
    Nonlinear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnvelopeArg {
    Cw,
    Gaussian,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(diag)) => {
            eprintln!("{diag}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("{}", json!({ "error": "i/o failure", "detail": msg }));
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = render(cli)?;
    emit(cli, &text)
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            let path = match std::env::var_os("OMITLIGHT_OUT_DIR") {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&path, text)?;
            Ok(())
        }
    }
}

fn params_comment(source: &ParamSource<f64>) -> String {
    model::render_param_file(source)
        .lines()
        .map(|l| l.trim())
        .collect::<Vec<_>>()
        .join(" ")
}

fn render(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Response {
            params,
            delta_min,
            delta_max,
            delta_count,
            normalize,
            format,
        } => {
            let source = params.source()?;
            let eff = params.effective()?;
            if *delta_count < 2 {
                return Err(CliError::validation("delta-count must be at least 2"));
            }
            let map = |v: f64| match normalize {
                Normalize::Abs => v,
                Normalize::Slow => eff.omega_m + eff.gamma_m * v,
                Normalize::Fast => -eff.omega_m + eff.gamma_m * v,
            };
            let mut rows = Vec::with_capacity(*delta_count);
            for i in 0..*delta_count {
                let f = i as f64 / (*delta_count - 1) as f64;
                let delta = map(delta_min + (delta_max - delta_min) * f);
                rows.push((delta, response::probe_response(&eff, delta)));
            }
            match format {
                Format::Json => {
                    let items: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(delta, r)| match r {
                            Ok(r) => json!({
                                "delta": delta,
                                "re_eps_T": r.re_eps_t,
                                "im_eps_T": r.im_eps_t,
                                "slope_K": r.slope_k,
                                "tau": r.tau,
                            }),
                            Err(e) => json!({ "delta": delta, "error": e.to_string() }),
                        })
                        .collect();
                    Ok(format!(
                        "{:#}\n",
                        json!({
                            "units": cli.units.label(),
                            "params": parse_params_json(&source),
                            "rows": items,
                        })
                    ))
                }
                Format::Csv => {
                    let mut out = String::new();
                    out.push_str(&format!("# units: {}\n", cli.units.label()));
                    out.push_str(&format!("# params: {}\n", params_comment(&source)));
                    out.push_str(&format!("# version: {}\n", env!("CARGO_PKG_VERSION")));
                    out.push_str("delta,re_eps_T,im_eps_T,slope_K,tau\n");
                    for (delta, r) in &rows {
                        match r {
                            Ok(r) => out.push_str(&format!(
                                "{},{},{},{},{}\n",
                                delta, r.re_eps_t, r.im_eps_t, r.slope_k, r.tau
                            )),
                            Err(_) => out.push_str(&format!("{delta},,,,\n")),
                        }
                    }
                    Ok(out)
                }
                Format::Svg => {
                    let re: Vec<(f64, f64)> = rows
                        .iter()
                        .filter_map(|(d, r)| r.as_ref().ok().map(|r| (*d, r.re_eps_t)))
                        .collect();
                    let im: Vec<(f64, f64)> = rows
                        .iter()
                        .filter_map(|(d, r)| r.as_ref().ok().map(|r| (*d, r.im_eps_t)))
                        .collect();
                    svg::render_curves(
                        "probe response",
                        "delta",
                        &[("Re eps_T", &re), ("Im eps_T", &im)],
                    )
                    .map_err(CliError::validation)
                }
            }
        }
        Command::Conditions { rates } => {
            let cond = response::ideal_omit(
                rates.window.into(),
                rates.kappa1,
                rates.kappa2,
                rates.omega_m,
                rates.gamma_m,
            )
            .map_err(|e| CliError::validation(e.to_string()))?;
            Ok(format!(
                "{:#}\n",
                json!({
                    "units": cli.units.label(),
                    "window": window_name(cond.window),
                    "beta": cond.beta,
                    "J": cond.j,
                })
            ))
        }
        Command::Closedforms { rates } => {
            let cf = response::closed_forms(
                rates.window.into(),
                rates.kappa1,
                rates.kappa2,
                rates.omega_m,
                rates.gamma_m,
            )
            .map_err(|e| CliError::validation(e.to_string()))?;
            Ok(format!(
                "{:#}\n",
                json!({
                    "units": cli.units.label(),
                    "window": window_name(cf.window),
                    "k_max": cf.k_max,
                    "tau_max": cf.tau_max,
                    "tau_max_limit_small_gamma": cf.tau_max_limit_small_gamma,
                    "tau_max_limit_boundary": cf.tau_max_limit_boundary,
                })
            ))
        }
        Command::Stability { params, format } => {
            let eff = params.effective()?;
            let report = steady_state::stability_report(&eff);
            match format {
                Format::Json => Ok(format!(
                    "{:#}\n",
                    json!({
                        "eigenvalues": report
                            .eigenvalues
                            .iter()
                            .map(|e| json!({ "re": e.re, "im": e.im }))
                            .collect::<Vec<_>>(),
                        "is_stable": report.is_stable,
                        "marginal": report.marginal,
                        "margin": report.margin,
                    })
                )),
                _ => {
                    let mut out = String::new();
                    out.push_str("eigenvalues (sorted by real part):\n");
                    for e in &report.eigenvalues {
                        out.push_str(&format!("  {:>24} {:>+24}i\n", e.re, e.im));
                    }
                    out.push_str(&format!(
                        "verdict: {}{} (margin {})\n",
                        if report.is_stable { "stable" } else { "unstable" },
                        if report.marginal { " (marginal)" } else { "" },
                        report.margin
                    ));
                    Ok(out)
                }
            }
        }
        Command::Steadystate { params } => {
            let source = params.source()?;
            let ParamSource::Physical(phys) = &source else {
                return Err(CliError::validation(
                    "steadystate needs physical parameters (mode = \"physical\")",
                ));
            };
            let states = steady_state::solve_steady_state(phys);
            let items: Vec<serde_json::Value> = states
                .iter()
                .map(|s| {
                    json!({
                        "x_s": s.x_s,
                        "p_s": s.p_s,
                        "a1s": { "re": s.a1s.re, "im": s.a1s.im },
                        "a2s": { "re": s.a2s.re, "im": s.a2s.im },
                        "stable": s.stable,
                        "multiplicity": s.multiplicity,
                        "residual": steady_state::steady_state_residual(phys, s),
                    })
                })
                .collect();
            Ok(format!(
                "{:#}\n",
                json!({
                    "units": cli.units.label(),
                    "params": parse_params_json(&source),
                    "branches": items,
                })
            ))
        }
        Command::Timedomain {
            params,
            mode,
            delta,
            eps_p,
            envelope,
            center,
            sigma,
            t_end,
            max_step,
            rel_tol,
            abs_tol,
            allow_unstable,
            measure_delay,
            demod,
        } => {
            let source = params.source()?;
            let eff = params.effective()?;
            let mode = match mode {
                SimMode::Linearized => Mode::Linearized,
                SimMode::Nonlinear => Mode::FullNonlinear,
            };
            let env = match envelope {
                EnvelopeArg::Cw => Envelope::ContinuousWave,
                EnvelopeArg::Gaussian => {
                    let width = match sigma {
                        Some(s) => *s,
                        None => {
                            1.05 * timedomain::narrowband_sigma(&eff, *delta)
                                .map_err(|e| CliError::validation(e.to_string()))?
                        }
                    };
                    Envelope::Gaussian {
                        center: center.unwrap_or(6.0 * width),
                        width,
                    }
                }
            };
            let probe = ProbeSpec {
                delta: *delta,
                eps_p: *eps_p,
                envelope: env,
            };
            let default_t_end = match env {
                Envelope::Gaussian { center, width } => center + 8.0 * width,
                Envelope::ContinuousWave => {
                    let report = steady_state::stability_report(&eff);
                    if report.margin < 0.0 {
                        12.0 / -report.margin
                            + 80.0 * std::f64::consts::TAU / delta.abs().max(1e-30)
                    } else {
                        100.0 / eff.gamma_m
                    }
                }
            };
            let mut spec = IntegrationSpec::new(
                mode,
                t_end.unwrap_or(default_t_end),
                eff.omega_m.max(delta.abs()),
            );
            spec.rel_tol = *rel_tol;
            spec.abs_tol = *abs_tol;
            spec.allow_unstable = *allow_unstable;
            if let Some(h) = max_step {
                spec.max_step = *h;
            }
            if *measure_delay {
                let result = timedomain::measure_pulse_delay(&source, &probe, &spec)
                    .map_err(|e| CliError::validation(e.to_string()))?;
                return Ok(format!(
                    "{:#}\n",
                    json!({
                        "units": cli.units.label(),
                        "params": parse_params_json(&source),
                        "delta": delta,
                        "measured_delay": result.measured_delay,
                        "t_peak_in": result.t_peak_in,
                        "t_peak_out": result.t_peak_out,
                        "peak_fit_residual": result.peak_fit_residual,
                    })
                ));
            }
            let traj = timedomain::integrate(&source, &probe, &spec)
                .map_err(|e| CliError::validation(e.to_string()))?;
            if *demod {
                let a1p = timedomain::demodulate_sideband(&traj, *delta, traj.steady_window())
                    .map_err(|e| CliError::validation(e.to_string()))?;
                let reference = response::a1_plus(&eff, *delta).ok();
                return Ok(format!(
                    "{:#}\n",
                    json!({
                        "units": cli.units.label(),
                        "params": parse_params_json(&source),
                        "delta": delta,
                        "a1_plus": { "re": a1p.re, "im": a1p.im },
                        "frequency_domain_reference": reference
                            .map(|r| json!({ "re": r.re, "im": r.im })),
                    })
                ));
            }
            let mut out = String::new();
            out.push_str(&format!("# units: {}\n", cli.units.label()));
            out.push_str(&format!("# params: {}\n", params_comment(&source)));
            out.push_str(&format!("# version: {}\n", env!("CARGO_PKG_VERSION")));
            out.push_str("t,re_a1,im_a1,re_a2,im_a2,x,p\n");
            for i in 0..traj.len() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    traj.time(i),
                    traj.a1[i].re,
                    traj.a1[i].im,
                    traj.a2[i].re,
                    traj.a2[i].im,
                    traj.x[i],
                    traj.p[i]
                ));
            }
            Ok(out)
        }
        Command::Sweep {
            params,
            axis,
            quantity,
            enforce,
            at_window,
            at_delta,
            threads,
            format,
        } => {
            let source = params.source()?;
            let base = params.effective()?;
            if axis.len() > 2 {
                return Err(CliError::validation("at most two sweep axes"));
            }
            let axes = axis
                .iter()
                .map(|s| parse_axis(s))
                .collect::<Result<Vec<_>, _>>()?;
            let quantities = quantity
                .split(',')
                .map(parse_quantity)
                .collect::<Result<Vec<_>, _>>()?;
            let eval_delta = match (at_window, at_delta) {
                (Some(w), _) => EvalDelta::AtWindow((*w).into()),
                (None, Some(d)) => EvalDelta::Fixed(*d),
                (None, None) => EvalDelta::AtWindow(Window::SlowAtPlusOmega),
            };
            let spec = SweepSpec {
                base,
                axes,
                quantities,
                enforce_ideal: enforce.map(|w| w.into()),
                eval_delta,
                threads: *threads,
            };
            let table =
                sweep::run_sweep(&spec).map_err(|e| CliError::validation(e.to_string()))?;
            match format {
                Format::Csv => Ok(table.to_csv(&[
                    format!("units: {}", cli.units.label()),
                    format!("params: {}", params_comment(&source)),
                    format!("version: {}", env!("CARGO_PKG_VERSION")),
                ])),
                Format::Json => {
                    let rows: Vec<serde_json::Value> = table
                        .rows
                        .iter()
                        .map(|r| {
                            json!({
                                "axis": r.axis,
                                "values": r.values,
                                "status": r.status.code(),
                            })
                        })
                        .collect();
                    Ok(format!(
                        "{:#}\n",
                        json!({
                            "columns": table.columns,
                            "params": parse_params_json(&source),
                            "rows": rows,
                        })
                    ))
                }
                Format::Svg => {
                    if table.columns.len() < 3 || spec.axes.len() != 1 {
                        return Err(CliError::validation(
                            "svg output needs a 1-D sweep with at least one quantity",
                        ));
                    }
                    let pts: Vec<(f64, f64)> = table
                        .rows
                        .iter()
                        .filter_map(|r| r.values[0].map(|v| (r.axis[0], v)))
                        .collect();
                    svg::render_curves(
                        "parameter sweep",
                        &table.columns[0],
                        &[(table.columns[1].as_str(), &pts)],
                    )
                    .map_err(CliError::validation)
                }
            }
        }
        Command::Figure { id, threads, format } => {
            let ds = sweep::figure_dataset::<f64>(*id, *threads)
                .map_err(|e| CliError::validation(e.to_string()))?;
            match format {
                Format::Csv => Ok(ds.to_csv()),
                Format::Json => Ok(format!(
                    "{:#}\n",
                    json!({
                        "figure": ds.figure,
                        "comments": ds.comments,
                        "columns": ds.columns,
                        "rows": ds.rows,
                    })
                )),
                Format::Svg => {
                    let names: Vec<&str> =
                        ds.columns.iter().skip(1).map(|s| s.as_str()).collect();
                    let mut series_data: Vec<Vec<(f64, f64)>> = Vec::new();
                    for c in 1..ds.columns.len().min(3) {
                        series_data.push(
                            ds.rows
                                .iter()
                                .filter_map(|r| match (r[0], r[c]) {
                                    (Some(a), Some(b)) => Some((a, b)),
                                    _ => None,
                                })
                                .collect(),
                        );
                    }
                    let series: Vec<(&str, &[(f64, f64)])> = series_data
                        .iter()
                        .enumerate()
                        .map(|(k, v)| (names[k], v.as_slice()))
                        .collect();
                    svg::render_curves(
                        &format!("figure {} dataset", ds.figure),
                        &ds.columns[0],
                        &series,
                    )
                    .map_err(CliError::validation)
                }
            }
        }
    }
}

fn window_name(w: Window) -> &'static str {
    match w {
        Window::SlowAtPlusOmega => "slow",
        Window::FastAtMinusOmega => "fast",
    }
}

fn parse_params_json(source: &ParamSource<f64>) -> serde_json::Value {
    serde_json::from_str(&model::render_param_file(source)).expect("canonical params are json")
}

fn parse_axis(text: &str) -> Result<SweepAxis<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 4 || parts.len() > 5 {
        return Err(CliError::validation(format!(
            "axis {text:?} is not name:min:max:count[:log]"
        )));
    }
    let param = match parts[0] {
        "delta" => AxisParam::Delta,
        "omega_m" => AxisParam::OmegaM,
        "gamma_m" => AxisParam::GammaM,
        "kappa1" => AxisParam::Kappa1,
        "kappa2" => AxisParam::Kappa2,
        "J" => AxisParam::J,
        "delta1_bar" => AxisParam::Delta1Bar,
        "delta2" => AxisParam::Delta2,
        "beta" => AxisParam::Beta,
        "xi" => AxisParam::Xi,
        "eta" => AxisParam::Eta,
        other => return Err(CliError::validation(format!("unknown axis name {other:?}"))),
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::validation(format!("bad number {s:?} in axis {text:?}")))
    };
    let count = parts[3]
        .parse::<usize>()
        .map_err(|_| CliError::validation(format!("bad count in axis {text:?}")))?;
    let spacing = match parts.get(4) {
        None | Some(&"linear") => Spacing::Linear,
        Some(&"log") => Spacing::Log,
        Some(other) => return Err(CliError::validation(format!("unknown spacing {other:?}"))),
    };
    Ok(SweepAxis {
        param,
        min: num(parts[1])?,
        max: num(parts[2])?,
        count,
        spacing,
    })
}

fn parse_quantity(text: &str) -> Result<Quantity, CliError> {
    Ok(match text.trim() {
        "re_eps_T" => Quantity::ReEpsT,
        "im_eps_T" => Quantity::ImEpsT,
        "slope_K" => Quantity::SlopeK,
        "tau" => Quantity::Tau,
        "tau_max_closed_form" => Quantity::TauMaxClosedForm,
        other => {
            return Err(CliError::validation(format!(
                "unknown quantity {other:?}; expected re_eps_T, im_eps_T, slope_K, tau, \
                 or tau_max_closed_form"
            )))
        }
    })
}
