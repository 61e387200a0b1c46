//! Run configuration: a sectioned TOML file where every key is optional.

use std::path::Path;

use cascade_core::coeffs::{Conventions, EpsilonPolicy};
use cascade_core::state::StateVector;
use cascade_core::trap::Potential;
use cascade_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub trap: TrapConfig,
    pub kernels: KernelConfig,
    pub momentum: MomentumConfig,
    pub conventions: ConventionsConfig,
    pub dynamics: DynamicsConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrapKind {
    Harmonic,
    Anharmonic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapConfig {
    pub kind: TrapKind,
    pub alpha: f64,
    pub beta: f64,
    pub r_max: f64,
    pub n_points: i64,
    #[serde(rename = "K")]
    pub k: i64,
    pub gap_tol: f64,
    /// `[r, V(r)]` rows for the tabulated kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            kind: TrapKind::Anharmonic,
            alpha: 0.01,
            beta: 2e-4,
            r_max: 25.0,
            n_points: 2500,
            k: 6,
            gap_tol: cascade_core::trap::DEFAULT_GAP_TOL,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub w_amplitude: f64,
    pub w_width: f64,
    pub v_amplitude: f64,
    pub v_width: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { w_amplitude: 4.5, w_width: 0.5, v_amplitude: 1.0, v_width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoMax {
    Fixed(f64),
    Keyword(Auto),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentumConfig {
    /// `"auto"` picks `4 · max|ΔE| + 8`.
    pub rho_max: RhoMax,
    pub n_rho: i64,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self { rho_max: RhoMax::Keyword(Auto::Auto), n_rho: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    EtaSquared,
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConventionsConfig {
    pub fgr_pi: bool,
    pub epsilon_policy: PolicyName,
    pub lamb_eps: f64,
    pub fgr_eps: f64,
    pub drop_direct_secular: bool,
    pub k_max_tensor: i64,
}

impl Default for ConventionsConfig {
    fn default() -> Self {
        let c = Conventions::default();
        Self {
            fgr_pi: c.fgr_pi,
            epsilon_policy: PolicyName::EtaSquared,
            lamb_eps: c.lamb_eps,
            fgr_eps: c.fgr_eps,
            drop_direct_secular: c.drop_direct_secular,
            k_max_tensor: c.k_max_tensor as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Limit,
    Prelimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub mode: Mode,
    /// Coupling for `mode = "prelimit"`.
    pub eta: f64,
    /// `"computed"` or `"logistic(Γ)"`.
    pub coefficients: String,
    /// `"ground-only"`, `"two-mode(x0)"`, `"uniform(n)"`, `"geometric(q)"` or
    /// `"amplitudes"` to read the `amplitudes` list.
    pub initial: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    pub normalize: bool,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples: i64,
    pub c_step: f64,
    pub bec_horizon: f64,
    pub bec_threshold: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Limit,
            eta: 0.1,
            coefficients: "computed".into(),
            initial: "uniform(4)".into(),
            amplitudes: None,
            normalize: true,
            t_end: 50.0,
            rtol: 1e-9,
            atol: 1e-12,
            samples: 500,
            c_step: cascade_core::cascade::DEFAULT_C_STEP,
            bec_horizon: 200.0,
            bec_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub etas: Vec<f64>,
    pub t0: f64,
    pub samples: i64,
    /// Leading modes kept for the sweep.
    #[serde(rename = "K")]
    pub k: i64,
    pub diagonal_only: bool,
    pub noise_factor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { etas: vec![0.2, 0.1, 0.05], t0: 1.0, samples: 256, k: 4, diagonal_only: false, noise_factor: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Parent of the per-command run directories when `--out` is absent.
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "runs".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPreset {
    GroundOnly,
    TwoMode(f64),
    Uniform(usize),
    Geometric(f64),
    Amplitudes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSource {
    Computed,
    Logistic(f64),
}

fn call_arg<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')').map(str::trim)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl InitialPreset {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let bad = || invalid(format!("unrecognised initial data preset '{s}'"));
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad());
        match s {
            "ground-only" => return Ok(Self::GroundOnly),
            "amplitudes" => return Ok(Self::Amplitudes),
            _ => {}
        }
        if let Some(a) = call_arg(s, "two-mode") {
            return Ok(Self::TwoMode(num(a)?));
        }
        if let Some(a) = call_arg(s, "uniform") {
            return Ok(Self::Uniform(a.parse().map_err(|_| bad())?));
        }
        if let Some(a) = call_arg(s, "geometric") {
            return Ok(Self::Geometric(num(a)?));
        }
        Err(bad())
    }
}

impl CoefficientSource {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "computed" {
            return Ok(Self::Computed);
        }
        if let Some(a) = call_arg(s, "logistic") {
            let g: f64 = a.parse().map_err(|_| invalid(format!("bad logistic rate in '{s}'")))?;
            return Ok(Self::Logistic(g));
        }
        Err(invalid(format!("coefficients must be 'computed' or 'logistic(rate)', got '{s}'")))
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {x}")))
    }
}

fn at_least(name: &str, x: i64, min: i64) -> Result<(), CliError> {
    if x >= min {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be at least {min}, got {x}")))
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Read a file, then check every constraint.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_toml(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that hold for every command. Constraints tying the initial data
    /// or the sweep to the number of modes are checked by the commands that
    /// use them.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.trap;
        positive("trap.r_max", t.r_max)?;
        at_least("trap.n_points", t.n_points, 16)?;
        at_least("trap.K", t.k, 1)?;
        positive("trap.gap_tol", t.gap_tol)?;
        self.potential()?.validate().map_err(|e| invalid(e.to_string()))?;

        let k = &self.kernels;
        positive("kernels.w_width", k.w_width)?;
        positive("kernels.v_width", k.v_width)?;
        for (name, a) in [("kernels.w_amplitude", k.w_amplitude), ("kernels.v_amplitude", k.v_amplitude)] {
            if !a.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }

        if let RhoMax::Fixed(r) = self.momentum.rho_max {
            positive("momentum.rho_max", r)?;
        }
        at_least("momentum.n_rho", self.momentum.n_rho, 8)?;

        let c = &self.conventions;
        positive("conventions.lamb_eps", c.lamb_eps)?;
        positive("conventions.fgr_eps", c.fgr_eps)?;
        at_least("conventions.k_max_tensor", c.k_max_tensor, 1)?;

        let d = &self.dynamics;
        positive("dynamics.eta", d.eta)?;
        positive("dynamics.t_end", d.t_end)?;
        positive("dynamics.rtol", d.rtol)?;
        positive("dynamics.atol", d.atol)?;
        positive("dynamics.c_step", d.c_step)?;
        positive("dynamics.bec_horizon", d.bec_horizon)?;
        positive("dynamics.bec_threshold", d.bec_threshold)?;
        at_least("dynamics.samples", d.samples, 1)?;
        if let CoefficientSource::Logistic(g) = self.coefficient_source()? {
            positive("logistic rate", g)?;
            if d.mode == Mode::Prelimit {
                return Err(invalid("the logistic preset has no prelimit tensor"));
            }
        }
        InitialPreset::parse(&d.initial)?;

        let s = &self.sweep;
        positive("sweep.t0", s.t0)?;
        at_least("sweep.samples", s.samples, cascade_core::convergence::MIN_SWEEP_SAMPLES as i64)?;
        at_least("sweep.K", s.k, 1)?;
        if s.noise_factor < 1.0 || !s.noise_factor.is_finite() {
            return Err(invalid("sweep.noise_factor must be at least 1"));
        }
        if s.etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(invalid("sweep.etas must be positive"));
        }
        if s.etas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("sweep.etas must be strictly decreasing"));
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        let t = &self.trap;
        Ok(match t.kind {
            TrapKind::Harmonic => Potential::Harmonic { alpha: t.alpha },
            TrapKind::Anharmonic => Potential::Anharmonic { alpha: t.alpha, beta: t.beta },
            TrapKind::Tabulated => {
                let table = t.table.as_ref().ok_or_else(|| invalid("tabulated trap needs trap.table"))?;
                Potential::Tabulated {
                    radii: table.iter().map(|r| r[0]).collect(),
                    values: table.iter().map(|r| r[1]).collect(),
                }
            }
        })
    }

    pub fn conventions(&self) -> Conventions {
        let c = &self.conventions;
        Conventions {
            fgr_pi: c.fgr_pi,
            lamb_eps: c.lamb_eps,
            fgr_eps: c.fgr_eps,
            epsilon_policy: match c.epsilon_policy {
                PolicyName::EtaSquared => EpsilonPolicy::EtaSquared,
                PolicyName::Extrapolated => EpsilonPolicy::Extrapolated,
            },
            drop_direct_secular: c.drop_direct_secular,
            k_max_tensor: c.k_max_tensor as usize,
        }
    }

    pub fn coefficient_source(&self) -> Result<CoefficientSource, CliError> {
        CoefficientSource::parse(&self.dynamics.coefficients)
    }

    /// Number of modes the dynamics run on.
    pub fn dynamics_modes(&self) -> Result<usize, CliError> {
        Ok(match self.coefficient_source()? {
            CoefficientSource::Computed => self.trap.k as usize,
            CoefficientSource::Logistic(_) => 2,
        })
    }

    /// Initial amplitudes padded with zeros to the dynamics dimension.
    pub fn initial_state(&self) -> Result<StateVector, CliError> {
        let k = self.dynamics_modes()?;
        let d = &self.dynamics;
        let raw: Vec<Complex64> = match InitialPreset::parse(&d.initial)? {
            InitialPreset::GroundOnly => vec![Complex64::new(1.0, 0.0)],
            InitialPreset::TwoMode(x0) => {
                if !(0.0..=1.0).contains(&x0) {
                    return Err(invalid(format!("two-mode ground fraction must lie in [0, 1], got {x0}")));
                }
                vec![Complex64::new(x0.sqrt(), 0.0), Complex64::new((1.0 - x0).sqrt(), 0.0)]
            }
            InitialPreset::Uniform(n) => {
                if n == 0 {
                    return Err(invalid("uniform preset needs at least one mode"));
                }
                vec![Complex64::new((n as f64).recip().sqrt(), 0.0); n]
            }
            InitialPreset::Geometric(q) => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(invalid(format!("geometric ratio must lie in (0, 1), got {q}")));
                }
                let w: Vec<f64> = (0..k).map(|i| q.powi(i as i32)).collect();
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter().map(|x| Complex64::new(x / norm, 0.0)).collect()
            }
            InitialPreset::Amplitudes => d
                .amplitudes
                .as_ref()
                .ok_or_else(|| invalid("initial = \"amplitudes\" needs dynamics.amplitudes"))?
                .iter()
                .map(|a| Complex64::new(a[0], a[1]))
                .collect(),
        };
        if raw.len() > k {
            return Err(invalid(format!("initial data has {} entries but only {k} modes", raw.len())));
        }
        let mut amps = raw;
        amps.resize(k, Complex64::new(0.0, 0.0));
        let f = StateVector::new(amps).map_err(|e| invalid(e.to_string()))?;
        if f.mass() == 0.0 {
            return Err(invalid("initial data vanish"));
        }
        if d.normalize {
            f.normalized().map_err(|e| invalid(e.to_string()))
        } else {
            Ok(f)
        }
    }
}
