//! Grids over one or two parameters, and the built-in sweep recipes.

use ftms_core::bell::BellConfig;
use ftms_core::filters::FilterFamily;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::model::{check_param_name, parse_number, ModelKind, Output, ParamSet};
use crate::output::{json_f64, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: &'static str,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    /// Parses `name=start:stop:points`; a single value is a one-point axis.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let bad = || CliError::usage(format!("axis `{spec}` should look like name=start:stop:points"));
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let name = check_param_name(name)?;
        let parts: Vec<&str> = range.split(':').collect();
        let axis = match parts.as_slice() {
            [v] => {
                let v = parse_number(name, v)?;
                Axis { name, start: v, stop: v, points: 1 }
            }
            [a, b, n] => Axis {
                name,
                start: parse_number(name, a)?,
                stop: parse_number(name, b)?,
                points: n.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        if axis.points == 0 {
            return Err(CliError::usage(format!("axis `{name}` needs at least one point")));
        }
        if axis.points == 1 && axis.start != axis.stop {
            return Err(CliError::usage(format!("one-point axis `{name}` must have start = stop")));
        }
        Ok(axis)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points).map(|k| self.start + (self.stop - self.start) * k as f64 / n).collect()
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "start": json_f64(self.start), "stop": json_f64(self.stop), "points": self.points })
    }
}

pub struct Recipe {
    pub name: &'static str,
    pub summary: &'static str,
    pub model: ModelKind,
    pub family: Option<FilterFamily>,
    pub fixed: &'static [(&'static str, f64)],
    pub axes: &'static [(&'static str, f64, f64, usize)],
    pub outputs: &'static str,
}

const STEP: Option<FilterFamily> = Some(FilterFamily::Step);
const EXP: Option<FilterFamily> = Some(FilterFamily::Exponential);

pub const RECIPES: &[Recipe] = &[
    Recipe {
        name: "detuning-step",
        summary: "E_N against the signal filter centre, step filters, tau = 2, r = 1",
        model: ModelKind::Tmsv,
        family: STEP,
        fixed: &[("r", 1.0), ("omega_k", 1.0), ("tau_i", 2.0), ("tau_s", 2.0)],
        axes: &[("omega_l", -4.0, 6.0, 501)],
        outputs: "e_n",
    },
    Recipe {
        name: "detuning-exp",
        summary: "E_N against the signal filter centre, exponential filters, tau = 2, r = 1",
        model: ModelKind::Tmsv,
        family: EXP,
        fixed: &[("r", 1.0), ("omega_k", 1.0), ("tau_i", 2.0), ("tau_s", 2.0)],
        axes: &[("omega_l", -4.0, 6.0, 501)],
        outputs: "e_n",
    },
    Recipe {
        name: "linewidth-step",
        summary: "E_N against both filter widths, step filters centred at 1, r = 1",
        model: ModelKind::Tmsv,
        family: STEP,
        fixed: &[("r", 1.0), ("omega_k", 1.0), ("omega_l", 1.0)],
        axes: &[("tau_i", 0.5, 5.0, 91), ("tau_s", 0.5, 5.0, 91)],
        outputs: "e_n",
    },
    Recipe {
        name: "linewidth-exp",
        summary: "E_N against both filter widths, exponential filters centred at 1, r = 1",
        model: ModelKind::Tmsv,
        family: EXP,
        fixed: &[("r", 1.0), ("omega_k", 1.0), ("omega_l", 1.0)],
        axes: &[("tau_i", 0.5, 5.0, 91), ("tau_s", 0.5, 5.0, 91)],
        outputs: "e_n",
    },
    Recipe {
        name: "tmsv-overlap",
        summary: "E_N and optimized squeezing over (k_f, r), eta = 0.9 / 0.98",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("eta_i", 0.9), ("eta_s", 0.98)],
        axes: &[("k_f", 0.8, 1.0, 101), ("r", 0.0, 3.0, 151)],
        outputs: "e_n,s_q_opt,critical_points",
    },
    Recipe {
        name: "tmsv-efficiency",
        summary: "E_N and optimized squeezing over (eta_s, r), k_f = 0.95, eta_i = 0.9",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("k_f", 0.95), ("eta_i", 0.9)],
        axes: &[("eta_s", 0.1, 1.0, 91), ("r", 0.0, 3.0, 151)],
        outputs: "e_n,s_q_opt,critical_points",
    },
    Recipe {
        name: "tmsv-purity-overlap",
        summary: "purity over (k_f, r), eta = 0.9 / 0.98",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("eta_i", 0.9), ("eta_s", 0.98)],
        axes: &[("k_f", 0.8, 1.0, 101), ("r", 0.0, 3.0, 151)],
        outputs: "purity",
    },
    Recipe {
        name: "tmsv-purity-efficiency",
        summary: "purity over (eta_s, r), k_f = 0.95, eta_i = 0.9",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("k_f", 0.95), ("eta_i", 0.9)],
        axes: &[("eta_s", 0.1, 1.0, 91), ("r", 0.0, 3.0, 151)],
        outputs: "purity",
    },
    Recipe {
        name: "tmsv-bell-overlap",
        summary: "maximal Bell value over (k_f, r), eta = 0.9 / 0.98",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("eta_i", 0.9), ("eta_s", 0.98)],
        axes: &[("k_f", 0.8, 1.0, 11), ("r", 0.0, 3.0, 31)],
        outputs: "e_n,bell_max",
    },
    Recipe {
        name: "tmsv-bell-efficiency",
        summary: "maximal Bell value over (eta_s, r), k_f = 0.95, eta_i = 0.9",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("k_f", 0.95), ("eta_i", 0.9)],
        axes: &[("eta_s", 0.5, 1.0, 11), ("r", 0.0, 3.0, 31)],
        outputs: "e_n,bell_max",
    },
    Recipe {
        name: "thermal-identical",
        summary: "thermal E_N over (n_i, r), identical filters, n_s = 0.8",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_s", 0.8), ("k_f", 1.0), ("l_f", 0.0)],
        axes: &[("n_i", 0.0, 2.0, 101), ("r", 0.0, 3.0, 151)],
        outputs: "e_n,critical_points",
    },
    Recipe {
        name: "thermal-mismatched",
        summary: "thermal E_N and squeezing over (n_i, r), k_f = 0.95, l_f = 0.095, n_s = 0.8",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_s", 0.8), ("k_f", 0.95), ("l_f", 0.095)],
        axes: &[("n_i", 0.0, 2.0, 101), ("r", 0.0, 3.0, 151)],
        outputs: "e_n,s_q_opt,zeta,critical_points",
    },
    Recipe {
        name: "thermal-purity",
        summary: "thermal purity over (n_i, r), k_f = 0.95, l_f = 0.095, n_s = 0.8",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_s", 0.8), ("k_f", 0.95), ("l_f", 0.095)],
        axes: &[("n_i", 0.0, 2.0, 101), ("r", 0.0, 3.0, 151)],
        outputs: "purity",
    },
    Recipe {
        name: "thermal-bell-identical",
        summary: "thermal maximal Bell value over (n_i, r), identical filters, n_s = 0.01",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_s", 0.01), ("k_f", 1.0), ("l_f", 0.0)],
        axes: &[("n_i", 0.0, 0.5, 11), ("r", 0.0, 3.0, 31)],
        outputs: "e_n,bell_max",
    },
    Recipe {
        name: "thermal-bell-mismatched",
        summary: "thermal maximal Bell value over (n_i, r), k_f = 0.95, l_f = 0.095, n_s = 0.01",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_s", 0.01), ("k_f", 0.95), ("l_f", 0.095)],
        axes: &[("n_i", 0.0, 0.5, 11), ("r", 0.0, 3.0, 31)],
        outputs: "e_n,bell_max",
    },
    Recipe {
        name: "tmsv-weights-overlap",
        summary: "hybrid variance over (mu_ratio, k_f), r = 1, eta = 0.6 / 0.9",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("r", 1.0), ("eta_i", 0.6), ("eta_s", 0.9)],
        axes: &[("mu_ratio", 0.2, 3.0, 141), ("k_f", 0.8, 1.0, 101)],
        outputs: "s_q,weight_ratio",
    },
    Recipe {
        name: "tmsv-weights-squeezing",
        summary: "hybrid variance over (mu_ratio, r), k_f = 0.95, eta = 0.6 / 0.9",
        model: ModelKind::Tmsv,
        family: None,
        fixed: &[("k_f", 0.95), ("eta_i", 0.6), ("eta_s", 0.9)],
        axes: &[("mu_ratio", 0.2, 3.0, 141), ("r", 0.0, 3.0, 151)],
        outputs: "s_q,weight_ratio",
    },
    Recipe {
        name: "thermal-weights-population",
        summary: "thermal hybrid variance over (mu_ratio, n_i), r = 1, k_f = 0.95, l_f = 0.095, n_s = 0.8",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("r", 1.0), ("n_s", 0.8), ("k_f", 0.95), ("l_f", 0.095)],
        axes: &[("mu_ratio", 0.2, 3.0, 141), ("n_i", 0.0, 2.0, 101)],
        outputs: "s_q,weight_ratio",
    },
    Recipe {
        name: "thermal-weights-squeezing",
        summary: "thermal hybrid variance over (mu_ratio, r), n_i = 0.3, k_f = 0.95, l_f = 0.095, n_s = 0.8",
        model: ModelKind::Thermal,
        family: None,
        fixed: &[("n_i", 0.3), ("n_s", 0.8), ("k_f", 0.95), ("l_f", 0.095)],
        axes: &[("mu_ratio", 0.2, 3.0, 141), ("r", 0.0, 3.0, 151)],
        outputs: "s_q,weight_ratio",
    },
];

pub fn recipe(name: &str) -> CliResult<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name).ok_or_else(|| {
        let names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
        CliError::usage(format!("unknown recipe `{name}`; available: {}", names.join(", ")))
    })
}

impl Recipe {
    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new(self.model);
        p.family = self.family;
        for &(name, v) in self.fixed {
            p.set(name, v);
        }
        p
    }

    pub fn axes(&self) -> Vec<Axis> {
        self.axes.iter().map(|&(name, start, stop, points)| Axis { name, start, stop, points }).collect()
    }
}

/// Seed for grid point `index`; point 0 keeps the master seed so a
/// one-point sweep matches the single-point command.
pub fn point_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub struct SweepResult {
    pub table: Table,
    pub shape: (usize, usize),
    pub params_json: Value,
    pub diagnostics: Value,
}

/// Evaluates every grid point, axis 1 varying fastest.
pub fn run(base: &ParamSet, axes: &[Axis], outputs: &[Output], bell: &BellConfig) -> CliResult<SweepResult> {
    if axes.len() > 2 {
        return Err(CliError::usage("at most two sweep axes"));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::usage("the two axes must differ"));
    }
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let nx = values.first().map_or(1, Vec::len);
    let ny = values.get(1).map_or(1, Vec::len);

    let point = |idx: usize| {
        let mut p = base.clone();
        if let Some(a) = axes.first() {
            p.set(a.name, values[0][idx % nx]);
        }
        if let Some(a) = axes.get(1) {
            p.set(a.name, values[1][idx / nx]);
        }
        p
    };
    // Reject bad configurations before any expensive work.
    point(0).state()?;

    let rows: Vec<CliResult<(Vec<(&'static str, f64)>, Vec<(&'static str, f64)>)>> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let state = point(idx).state()?;
            let cfg = BellConfig { seed: point_seed(bell.seed, idx), ..*bell };
            let out = state.evaluate(outputs, &cfg)?;
            Ok((state.columns, out))
        })
        .collect();

    let mut table = Table::default();
    let mut non_finite = 0;
    let mut unconverged = 0;
    for row in rows {
        let (params, out) = row?;
        if table.columns.is_empty() {
            table.columns = params.iter().chain(&out).map(|c| c.0.to_string()).collect();
        }
        non_finite += out.iter().filter(|(_, v)| !v.is_finite()).count();
        unconverged += out.iter().filter(|&&(n, v)| n == "bell_converged" && v == 0.0).count();
        table.rows.push(params.iter().chain(&out).map(|c| c.1).collect());
    }

    let fixed: serde_json::Map<String, Value> =
        base.values.iter().filter(|(k, _)| !axes.iter().any(|a| a.name == **k)).map(|(k, &v)| (k.to_string(), json_f64(v))).collect();
    let params_json = json!({
        "model": base.model.name(),
        "family": base.family.map(|f| f.to_string()),
        "fixed": fixed,
        "axes": axes.iter().map(Axis::to_json).collect::<Vec<_>>(),
        "seed": bell.seed,
    });
    let diagnostics = json!({
        "points": nx * ny,
        "non_finite_values": non_finite,
        "bell_unconverged": unconverged,
    });
    Ok(SweepResult { table, shape: (nx, ny), params_json, diagnostics })
}
