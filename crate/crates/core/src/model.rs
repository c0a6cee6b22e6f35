//! Parameter data model and the unit convention shared by every module.
//!
//! All rates are angular frequencies in one consistent (but arbitrary) unit
//! system; the CLI labels that unit "multiples of gamma_m" by default. The
//! effective coupling `beta` has units of rate squared and can be set directly,
//! bypassing the physical layer entirely.

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::steady_state;

/// Effective model parameters. Everything downstream (response spectra,
/// transparency conditions, stability, linearized time domain) is a function
/// of these eight numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams<T> {
    /// Mechanical angular frequency.
    pub omega_m: T,
    /// Mechanical damping rate.
    pub gamma_m: T,
    /// Passive-cavity decay rate.
    pub kappa1: T,
    /// Active-cavity gain rate (negative values model a lossy second cavity).
    pub kappa2: T,
    /// Inter-cavity coupling strength. Enters the response as J^2, so the
    /// sign is unobservable.
    #[serde(rename = "J")]
    pub j: T,
    /// Effective passive-cavity detuning (bare detuning shifted by the static
    /// mechanical displacement).
    pub delta1_bar: T,
    /// Active-cavity detuning.
    pub delta2: T,
    /// Effective optomechanical coupling parameter, rate squared.
    pub beta: T,
}

/// Physical-layer parameters from which the effective ones derive through the
/// classical steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams<T> {
    pub omega_m: T,
    pub gamma_m: T,
    pub kappa1: T,
    pub kappa2: T,
    #[serde(rename = "J")]
    pub j: T,
    /// Bare passive-cavity detuning.
    pub delta1: T,
    pub delta2: T,
    /// Optomechanical coupling per unit displacement.
    pub g0: T,
    /// Effective mechanical mass.
    pub m: T,
    /// Coupling-field drive amplitude. Phase convention: real and nonnegative.
    pub eps_c: T,
    /// Reduced Planck constant: 1 in scaled units, the SI value in SI mode.
    pub hbar: T,
}

/// One violated invariant, reported by [`validate`] / [`validate_physical`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Violation { field, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("no dynamically stable steady-state branch exists")]
    NoStableBranch,
    #[error("branch index {index} out of range: {count} steady-state branches")]
    BranchOutOfRange { index: usize, count: usize },
}

/// Which steady-state branch to base the effective parameters on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSelect {
    /// First (lowest displacement) dynamically stable branch.
    Stable,
    /// Explicit index into the ascending-displacement branch list. No
    /// stability requirement; callers take responsibility.
    Index(usize),
}

fn check_finite<T: Scalar>(out: &mut Vec<Violation>, field: &'static str, x: T) -> bool {
    if !x.is_finite() {
        out.push(Violation::new(field, format!("{field} must be finite, got {x}")));
        return false;
    }
    true
}

/// Check the `SystemParams` invariants. Returns one entry per violated bound;
/// empty means valid. Never aborts.
pub fn validate<T: Scalar>(params: &SystemParams<T>) -> Vec<Violation> {
    let mut v = Vec::new();
    let z = T::zero();
    if check_finite(&mut v, "omega_m", params.omega_m) && params.omega_m <= z {
        v.push(Violation::new("omega_m", "mechanical frequency must be > 0"));
    }
    if check_finite(&mut v, "gamma_m", params.gamma_m) && params.gamma_m <= z {
        v.push(Violation::new("gamma_m", "mechanical damping must be > 0"));
    }
    if check_finite(&mut v, "kappa1", params.kappa1) && params.kappa1 <= z {
        v.push(Violation::new("kappa1", "passive-cavity decay must be > 0"));
    }
    if check_finite(&mut v, "kappa2", params.kappa2) && params.kappa2 < z {
        v.push(Violation::new("kappa2", "gain rate must be >= 0"));
    }
    if check_finite(&mut v, "beta", params.beta) && params.beta < z {
        v.push(Violation::new("beta", "beta is a squared magnitude and must be >= 0"));
    }
    check_finite(&mut v, "J", params.j);
    check_finite(&mut v, "delta1_bar", params.delta1_bar);
    check_finite(&mut v, "delta2", params.delta2);
    v
}

/// Check the `PhysicalParams` invariants.
pub fn validate_physical<T: Scalar>(phys: &PhysicalParams<T>) -> Vec<Violation> {
    let mut v = Vec::new();
    let z = T::zero();
    if check_finite(&mut v, "omega_m", phys.omega_m) && phys.omega_m <= z {
        v.push(Violation::new("omega_m", "mechanical frequency must be > 0"));
    }
    if check_finite(&mut v, "gamma_m", phys.gamma_m) && phys.gamma_m <= z {
        v.push(Violation::new("gamma_m", "mechanical damping must be > 0"));
    }
    if check_finite(&mut v, "kappa1", phys.kappa1) && phys.kappa1 <= z {
        v.push(Violation::new("kappa1", "passive-cavity decay must be > 0"));
    }
    if check_finite(&mut v, "kappa2", phys.kappa2) && phys.kappa2 < z {
        v.push(Violation::new("kappa2", "gain rate must be >= 0"));
    }
    if check_finite(&mut v, "m", phys.m) && phys.m <= z {
        v.push(Violation::new("m", "mass must be > 0"));
    }
    if check_finite(&mut v, "eps_c", phys.eps_c) && phys.eps_c < z {
        v.push(Violation::new("eps_c", "drive amplitude is real-positive by convention"));
    }
    if check_finite(&mut v, "hbar", phys.hbar) && phys.hbar <= z {
        v.push(Violation::new("hbar", "hbar must be > 0"));
    }
    check_finite(&mut v, "J", phys.j);
    check_finite(&mut v, "g0", phys.g0);
    check_finite(&mut v, "delta1", phys.delta1);
    check_finite(&mut v, "delta2", phys.delta2);
    v
}

impl<T: Scalar> SystemParams<T> {
    /// Rescale every rate by `s` and `beta` by `s^2`. The probe response is
    /// covariant under this map: `eps_T(s*delta)` is unchanged and delays
    /// scale by `1/s`.
    pub fn scaled(&self, s: T) -> Self {
        SystemParams {
            omega_m: self.omega_m * s,
            gamma_m: self.gamma_m * s,
            kappa1: self.kappa1 * s,
            kappa2: self.kappa2 * s,
            j: self.j * s,
            delta1_bar: self.delta1_bar * s,
            delta2: self.delta2 * s,
            beta: self.beta * s * s,
        }
    }
}

impl<T: Scalar> PhysicalParams<T> {
    /// The shared effective rate fields, with `delta1_bar` computed for a
    /// given steady displacement and `beta` for a given intracavity amplitude.
    pub(crate) fn effective_with(&self, x_s: T, a1s_norm_sq: T) -> SystemParams<T> {
        let two = T::of(2.0);
        SystemParams {
            omega_m: self.omega_m,
            gamma_m: self.gamma_m,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            j: self.j,
            delta1_bar: self.delta1 - self.g0 * x_s,
            delta2: self.delta2,
            beta: self.hbar * self.g0 * self.g0 * a1s_norm_sq / (two * self.m * self.omega_m),
        }
    }
}

/// Derive effective parameters from the physical layer through the chosen
/// steady-state branch.
pub fn effective_from_physical<T: Scalar + nalgebra::RealField>(
    phys: &PhysicalParams<T>,
    branch: BranchSelect,
) -> Result<SystemParams<T>, ModelError> {
    let branches = steady_state::solve_steady_state(phys);
    let chosen = match branch {
        BranchSelect::Stable => branches
            .iter()
            .find(|b| b.stable)
            .ok_or(ModelError::NoStableBranch)?,
        BranchSelect::Index(k) => branches.get(k).ok_or(ModelError::BranchOutOfRange {
            index: k,
            count: branches.len(),
        })?,
    };
    Ok(phys.effective_with(chosen.x_s, chosen.a1s.norm_sqr()))
}

/// Design a physical realization of the given effective parameters: choose the
/// drive amplitude and bare detuning so that the steady state reproduces
/// `params.beta` and `params.delta1_bar` exactly. The drive phase convention
/// makes `eps_c` real-positive.
pub fn realize_physical<T: Scalar>(
    params: &SystemParams<T>,
    g0: T,
    m: T,
    hbar: T,
) -> PhysicalParams<T> {
    let two = T::of(2.0);
    if g0 == T::zero() || params.beta == T::zero() {
        return PhysicalParams {
            omega_m: params.omega_m,
            gamma_m: params.gamma_m,
            kappa1: params.kappa1,
            kappa2: params.kappa2,
            j: params.j,
            delta1: params.delta1_bar,
            delta2: params.delta2,
            g0,
            m,
            eps_c: T::zero(),
            hbar,
        };
    }
    // |a1s|^2 fixed by beta, then x_s by the mechanical balance, then the
    // drive by the cavity balance.
    let a1s_sq = two * m * params.omega_m * params.beta / (hbar * g0 * g0);
    let x_s = hbar * g0 * a1s_sq / (m * params.omega_m * params.omega_m);
    let delta1 = params.delta1_bar + g0 * x_s;
    let den2 = params.kappa2 * params.kappa2 + params.delta2 * params.delta2;
    let u = Complex::new(
        params.kappa1 - params.j * params.j * params.kappa2 / den2,
        params.delta1_bar - params.j * params.j * params.delta2 / den2,
    );
    let eps_c = Float::sqrt(a1s_sq) * u.norm();
    PhysicalParams {
        omega_m: params.omega_m,
        gamma_m: params.gamma_m,
        kappa1: params.kappa1,
        kappa2: params.kappa2,
        j: params.j,
        delta1,
        delta2: params.delta2,
        g0,
        m,
        eps_c,
        hbar,
    }
}

/// A parameter file: the `mode` key selects the parametrization, the rest is
/// the flat field set of the selected type. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource<T> {
    Effective(SystemParams<T>),
    Physical(PhysicalParams<T>),
}

impl<T: Scalar + nalgebra::RealField> ParamSource<T> {
    /// Effective parameters regardless of the input layer.
    pub fn effective(&self, branch: BranchSelect) -> Result<SystemParams<T>, ModelError> {
        match self {
            ParamSource::Effective(p) => Ok(*p),
            ParamSource::Physical(p) => effective_from_physical(p, branch),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParamFileError {
    #[error("parameter file is not a JSON object")]
    NotAnObject,
    #[error("unknown mode {0:?}: expected \"effective\" or \"physical\"")]
    UnknownMode(String),
    #[error("missing fields: {}", .0.join(", "))]
    MissingFields(Vec<String>),
    #[error("unknown fields: {}", .0.join(", "))]
    UnknownFields(Vec<String>),
    #[error("malformed parameter file: {0}")]
    Json(#[from] serde_json::Error),
}

const EFFECTIVE_FIELDS: [&str; 8] = [
    "omega_m", "gamma_m", "kappa1", "kappa2", "J", "delta1_bar", "delta2", "beta",
];
const PHYSICAL_FIELDS: [&str; 11] = [
    "omega_m", "gamma_m", "kappa1", "kappa2", "J", "delta1", "delta2", "g0", "m", "eps_c", "hbar",
];

/// Parse a parameter file. The optional `mode` key ("effective" when absent)
/// selects the parametrization; all expected fields must be present and no
/// others. Reports every missing/unknown key, not just the first.
pub fn parse_param_file<T>(json: &str) -> Result<ParamSource<T>, ParamFileError>
where
    T: Scalar + serde::de::DeserializeOwned,
{
    let value: serde_json::Value = serde_json::from_str(json)?;
    let obj = value.as_object().ok_or(ParamFileError::NotAnObject)?;
    let mode = match obj.get("mode") {
        None => "effective".to_string(),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(other) => return Err(ParamFileError::UnknownMode(other.to_string())),
    };
    let expected: &[&str] = match mode.as_str() {
        "effective" => &EFFECTIVE_FIELDS,
        "physical" => &PHYSICAL_FIELDS,
        _ => return Err(ParamFileError::UnknownMode(mode)),
    };
    let missing: Vec<String> = expected
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ParamFileError::MissingFields(missing));
    }
    let unknown: Vec<String> = obj
        .keys()
        .filter(|k| *k != "mode" && !expected.contains(&k.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ParamFileError::UnknownFields(unknown));
    }
    let mut fields = obj.clone();
    fields.remove("mode");
    let fields = serde_json::Value::Object(fields);
    Ok(match mode.as_str() {
        "effective" => ParamSource::Effective(serde_json::from_value(fields)?),
        _ => ParamSource::Physical(serde_json::from_value(fields)?),
    })
}

/// Serialize parameters back to the file format, `mode` key included.
pub fn render_param_file<T: Scalar + Serialize>(source: &ParamSource<T>) -> String {
    let mut obj = match source {
        ParamSource::Effective(p) => serde_json::to_value(p).expect("serializable"),
        ParamSource::Physical(p) => serde_json::to_value(p).expect("serializable"),
    };
    let mode = match source {
        ParamSource::Effective(_) => "effective",
        ParamSource::Physical(_) => "physical",
    };
    obj.as_object_mut()
        .expect("object")
        .insert("mode".into(), serde_json::Value::String(mode.into()));
    serde_json::to_string_pretty(&obj).expect("serializable")
}
