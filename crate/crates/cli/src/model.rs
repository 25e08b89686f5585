//! Parameter tuples and the per-point evaluation shared by every command.

use std::collections::BTreeMap;
use std::str::FromStr;

use ftms_core::bell::{bell_max, BellConfig, BellResult};
use ftms_core::filters::{overlap_closed_form, FilterFamily, FilterSpec, OverlapFactors};
use ftms_core::gaussian::{
    apply_loss, build_covariance, log_negativity, optimal_phase_sum, optimal_weight_ratio, optimized_squeezing, purity,
    quadrature_variance, squeezing_angle, CovarianceBlocks, CovarianceMatrix, QuadratureSpec,
};
use ftms_core::thermal::{self, ThermalParams, Window};
use ftms_core::tmsv::{self, TmsvParams};
use ftms_core::{Cutoff, Error};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tmsv,
    Thermal,
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "tmsv" => Ok(Self::Tmsv),
            "thermal" => Ok(Self::Thermal),
            _ => Err(CliError::usage(format!("unknown model `{s}` (expected tmsv or thermal)"))),
        }
    }
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tmsv => "tmsv",
            Self::Thermal => "thermal",
        }
    }
}

/// Every numeric parameter a point or sweep axis may set.
pub const PARAM_NAMES: [&str; 12] =
    ["r", "k_f", "l_f", "eta_i", "eta_s", "n_i", "n_s", "omega_k", "omega_l", "tau_i", "tau_s", "mu_ratio"];

const FILTER_PARAMS: [&str; 4] = ["omega_k", "omega_l", "tau_i", "tau_s"];

fn default_value(name: &str) -> f64 {
    match name {
        "k_f" | "eta_i" | "eta_s" | "mu_ratio" => 1.0,
        "omega_k" | "omega_l" => 1.0,
        "tau_i" | "tau_s" => 2.0,
        _ => 0.0,
    }
}

pub fn check_param_name(name: &str) -> CliResult<&'static str> {
    PARAM_NAMES
        .iter()
        .find(|&&n| n == name)
        .copied()
        .ok_or_else(|| CliError::usage(format!("unknown parameter `{name}`; expected one of {}", PARAM_NAMES.join(", "))))
}

pub fn parse_number(name: &str, text: &str) -> CliResult<f64> {
    let x: f64 = text.trim().parse().map_err(|_| CliError::usage(format!("`{name}` needs a number, got `{text}`")))?;
    if !x.is_finite() {
        return Err(CliError::usage(format!("`{name}` must be finite")));
    }
    Ok(x)
}

/// A model plus explicitly set parameters; anything unset takes its default.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub model: ModelKind,
    pub family: Option<FilterFamily>,
    pub values: BTreeMap<&'static str, f64>,
}

impl ParamSet {
    pub fn new(model: ModelKind) -> Self {
        Self { model, family: None, values: BTreeMap::new() }
    }

    /// Applies `key=value` assignments; `family=step|exponential` selects
    /// the filter family.
    pub fn assign_all<S: AsRef<str>>(&mut self, pairs: &[S]) -> CliResult<()> {
        for pair in pairs {
            let pair = pair.as_ref();
            let (key, value) =
                pair.split_once('=').ok_or_else(|| CliError::usage(format!("expected key=value, got `{pair}`")))?;
            if key == "family" {
                self.family = Some(value.parse()?);
            } else {
                let name = check_param_name(key)?;
                self.values.insert(name, parse_number(name, value)?);
            }
        }
        Ok(())
    }

    pub fn set(&mut self, name: &'static str, value: f64) {
        self.values.insert(name, value);
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or_else(|| default_value(name))
    }

    fn uses_filters(&self) -> bool {
        self.family.is_some() || FILTER_PARAMS.iter().any(|p| self.values.contains_key(p))
    }

    /// Rejects parameter combinations that cannot describe a state.
    pub fn validate_names(&self) -> CliResult<()> {
        if self.model == ModelKind::Tmsv {
            for p in ["n_i", "n_s"] {
                if self.values.contains_key(p) {
                    return Err(CliError::usage(format!("`{p}` only applies to the thermal model")));
                }
            }
        }
        if self.uses_filters() {
            if self.family.is_none() {
                return Err(CliError::usage("filter parameters need `family=step` or `family=exponential`"));
            }
            for p in ["k_f", "l_f"] {
                if self.values.contains_key(p) {
                    return Err(CliError::usage(format!("`{p}` is computed from the filters; drop it or the filter parameters")));
                }
            }
        }
        Ok(())
    }

    /// Column names in output order.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = vec!["r"];
        if self.model == ModelKind::Thermal {
            cols.extend(["n_i", "n_s"]);
        }
        cols.extend(["eta_i", "eta_s"]);
        if self.uses_filters() {
            cols.extend(FILTER_PARAMS);
        }
        cols.extend(["k_f", "l_f", "mu_ratio"]);
        cols
    }

    pub fn overlap(&self) -> CliResult<OverlapFactors> {
        if let Some(family) = self.family.filter(|_| self.uses_filters()) {
            let fi = FilterSpec::new(family, self.get("omega_k"), self.get("tau_i"))?;
            let fs = FilterSpec::new(family, self.get("omega_l"), self.get("tau_s"))?;
            Ok(overlap_closed_form(&fi, &fs)?)
        } else {
            Ok(OverlapFactors::new(self.get("k_f"), self.get("l_f"))?)
        }
    }

    pub fn state(&self) -> CliResult<State> {
        self.validate_names()?;
        let overlap = self.overlap()?;
        let (r, eta_i, eta_s) = (self.get("r"), self.get("eta_i"), self.get("eta_s"));
        let mu_ratio = self.get("mu_ratio");
        if !(mu_ratio > 0.0) {
            return Err(Error::InvalidParameter { name: "mu_ratio", value: mu_ratio, reason: "weight ratio must be positive" }.into());
        }
        let source = match self.model {
            ModelKind::Tmsv => Source::Tmsv(TmsvParams::new(r, eta_i, eta_s, overlap)?),
            ModelKind::Thermal => {
                for (name, eta) in [("eta_i", eta_i), ("eta_s", eta_s)] {
                    if !(eta > 0.0 && eta <= 1.0) {
                        return Err(Error::InvalidParameter { name, value: eta, reason: "efficiency must lie in (0, 1]" }.into());
                    }
                }
                Source::Thermal(ThermalParams::new(r, self.get("n_i"), self.get("n_s"), overlap)?, eta_i, eta_s)
            }
        };
        let blocks = source.blocks()?;
        let matrix = build_covariance(&blocks)?;
        let mut columns: Vec<(&'static str, f64)> = vec![];
        for c in self.columns() {
            let v = match c {
                "k_f" => overlap.k_f,
                "l_f" => overlap.l_f,
                _ => self.get(c),
            };
            columns.push((c, v));
        }
        Ok(State { source, blocks, matrix, mu_ratio, columns })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Source {
    Tmsv(TmsvParams),
    /// Thermal state followed by detection loss.
    Thermal(ThermalParams, f64, f64),
}

impl Source {
    fn blocks(&self) -> CliResult<CovarianceBlocks> {
        match *self {
            Source::Tmsv(p) => Ok(p.covariance()),
            Source::Thermal(p, ei, es) if ei == 1.0 && es == 1.0 => Ok(p.covariance()),
            Source::Thermal(p, ei, es) => Ok(apply_loss(&build_covariance(&p.covariance())?, ei, es)?.blocks()),
        }
    }
}

/// A fully resolved grid point.
#[derive(Debug, Clone)]
pub struct State {
    pub source: Source,
    pub blocks: CovarianceBlocks,
    pub matrix: CovarianceMatrix,
    pub mu_ratio: f64,
    /// Parameter columns in output order, with the overlap resolved.
    pub columns: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    Blocks,
    EN,
    SqOpt,
    Sq,
    Purity,
    BellMax,
    Zeta,
    WeightRatio,
    CriticalPoints,
}

pub const DEFAULT_OUTPUTS: [Output; 4] = [Output::Blocks, Output::EN, Output::SqOpt, Output::Purity];

impl FromStr for Output {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "blocks" => Self::Blocks,
            "e_n" => Self::EN,
            "s_q_opt" => Self::SqOpt,
            "s_q" => Self::Sq,
            "purity" => Self::Purity,
            "bell_max" => Self::BellMax,
            "zeta" => Self::Zeta,
            "weight_ratio" => Self::WeightRatio,
            "critical_points" => Self::CriticalPoints,
            _ => {
                return Err(CliError::usage(format!(
                    "unknown output `{s}`; expected blocks, e_n, s_q_opt, s_q, purity, bell_max, zeta, weight_ratio or critical_points"
                )))
            }
        })
    }
}

pub fn parse_outputs(list: Option<&str>) -> CliResult<Vec<Output>> {
    let mut out: Vec<Output> = match list {
        None => DEFAULT_OUTPUTS.to_vec(),
        Some(s) => s.split(',').filter(|t| !t.is_empty()).map(str::parse).collect::<CliResult<_>>()?,
    };
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::usage("no outputs requested"));
    }
    Ok(out)
}

/// Result column names for the requested outputs.
pub fn output_columns(model: ModelKind, outputs: &[Output]) -> Vec<&'static str> {
    let mut cols = vec![];
    for o in outputs {
        match o {
            Output::Blocks => cols.extend(["d_i", "d_s", "c11", "c12"]),
            Output::EN => cols.extend(["e_n", "nu_minus"]),
            Output::SqOpt => cols.push("s_q_opt"),
            Output::Sq => cols.push("s_q"),
            Output::Purity => cols.push("purity"),
            Output::BellMax => cols.extend(["b_max", "bell_converged"]),
            Output::Zeta => cols.push("zeta"),
            Output::WeightRatio => cols.push("weight_ratio"),
            Output::CriticalPoints => match model {
                ModelKind::Tmsv => cols.extend(["r_ucf_en", "r_max_en", "r_max_sq", "r_ucf_sq"]),
                ModelKind::Thermal => cols.extend(["r_lcf_en", "r_ucf_en", "r_max_en", "r_lcf_sq", "r_ucf_sq", "r_max_sq"]),
            },
        }
    }
    cols
}

/// Missing or undefined values become NaN; structural failures propagate.
fn soft(r: ftms_core::Result<f64>) -> CliResult<f64> {
    match r {
        Ok(x) => Ok(x),
        Err(Error::Uncorrelated | Error::InvalidParameter { .. }) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn window_edges(w: Window) -> (f64, f64) {
    match w {
        Window::Empty => (f64::NAN, f64::NAN),
        Window::Range { lower, upper } => (lower, upper.value()),
    }
}

impl State {
    /// Evaluates the requested outputs in `output_columns` order.
    pub fn evaluate(&self, outputs: &[Output], bell: &BellConfig) -> CliResult<Vec<(&'static str, f64)>> {
        let b = &self.blocks;
        let mut out = vec![];
        for o in outputs {
            match o {
                Output::Blocks => out.extend([("d_i", b.d_i), ("d_s", b.d_s), ("c11", b.c11), ("c12", b.c12)]),
                Output::EN => {
                    let e = log_negativity(&self.matrix)?;
                    out.extend([("e_n", e.e_n), ("nu_minus", e.nu_minus)]);
                }
                Output::SqOpt => out.push(("s_q_opt", optimized_squeezing(b))),
                Output::Sq => {
                    let q = QuadratureSpec::with_ratio(optimal_phase_sum(b), self.mu_ratio)?;
                    out.push(("s_q", quadrature_variance(&self.matrix, &q)?));
                }
                Output::Purity => out.push(("purity", purity(&self.matrix)?)),
                Output::BellMax => {
                    let res = self.bell(bell)?;
                    out.extend([("b_max", res.b_max), ("bell_converged", if res.converged { 1.0 } else { 0.0 })]);
                }
                Output::Zeta => out.push(("zeta", squeezing_angle(b))),
                Output::WeightRatio => out.push(("weight_ratio", soft(optimal_weight_ratio(b))?)),
                Output::CriticalPoints => out.extend(self.critical_points()),
            }
        }
        Ok(out)
    }

    pub fn bell(&self, cfg: &BellConfig) -> CliResult<BellResult> {
        Ok(bell_max(&self.matrix, cfg)?)
    }

    fn critical_points(&self) -> Vec<(&'static str, f64)> {
        let nan = f64::NAN;
        match self.source {
            Source::Tmsv(p) => match tmsv::critical_points(&p) {
                Ok(cp) => vec![
                    ("r_ucf_en", cp.r_ucf_en.value()),
                    ("r_max_en", cp.r_max_en.value()),
                    ("r_max_sq", cp.r_max_sq.value()),
                    ("r_ucf_sq", cp.r_ucf_sq.value()),
                ],
                Err(_) => vec![("r_ucf_en", nan), ("r_max_en", nan), ("r_max_sq", nan), ("r_ucf_sq", nan)],
            },
            Source::Thermal(p, ei, es) => {
                let names = ["r_lcf_en", "r_ucf_en", "r_max_en", "r_lcf_sq", "r_ucf_sq", "r_max_sq"];
                // The closed forms assume ideal detection.
                let cp = if ei == 1.0 && es == 1.0 { thermal::critical_points(&p).ok() } else { None };
                let Some(cp) = cp else { return names.iter().map(|&n| (n, nan)).collect() };
                let (lcf, ucf) = window_edges(cp.entanglement);
                let (lsq, usq) = window_edges(cp.squeezing);
                let r_max = cp.r_max_en.map_or(nan, Cutoff::value);
                names.into_iter().zip([lcf, ucf, r_max, lsq, usq, cp.r_max_sq.value()]).collect()
            }
        }
    }
}
