//! `ftms`: point evaluation, parameter sweeps, Bell maximization, overlap
//! checks and Monte Carlo validation for filtered two-mode squeezed states.

mod error;
mod model;
mod output;
mod sweep;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftms_core::bell::{BellConfig, SettingsFamily};
use ftms_core::fieldsim::{simulate, SimConfig, SimModel};
use ftms_core::filters::{overlap_closed_form, overlap_numeric, FilterSpec};
use ftms_core::thermal::ThermalParams;
use ftms_core::tmsv::TmsvParams;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::model::{parse_outputs, ModelKind, ParamSet, Source};
use crate::output::{emit, envelope, fmt_f64, json_f64, write_atomic, Format, Table};
use crate::sweep::Axis;

#[derive(Parser, Debug)]
#[command(name = "ftms", version, about = "Entanglement, squeezing, purity and Bell tests of filtered two-mode squeezed light")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for Bell restarts and Monte Carlo runs.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct BellFlags {
    /// Multistart restarts for the Bell optimizer.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Evaluation budget per Nelder-Mead run.
    #[arg(long, default_value_t = 2000)]
    max_evals: usize,
    /// Settings searched: `full` or `origin` (first setting of each party at the origin).
    #[arg(long, default_value = "full")]
    settings: String,
}

impl BellFlags {
    fn config(&self, seed: u64) -> CliResult<BellConfig> {
        let family: SettingsFamily = self.settings.parse()?;
        Ok(BellConfig { seed, restarts: self.restarts, max_evals: self.max_evals, family, ..Default::default() })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one parameter tuple: `ftms point tmsv r=0.5 k_f=0.9`.
    Point {
        /// Model (`tmsv` or `thermal`) followed by key=value parameters.
        #[arg(required = true)]
        args: Vec<String>,
        /// Comma-separated outputs: blocks, e_n, s_q_opt, s_q, purity, bell_max, zeta, weight_ratio, critical_points.
        #[arg(long)]
        outputs: Option<String>,
        #[command(flatten)]
        bell: BellFlags,
    },
    /// Evaluate a 1-D or 2-D grid: `ftms sweep tmsv --axis r=0:2:41 k_f=0.9`.
    Sweep {
        /// Model followed by key=value parameters; the model may come from `--recipe`.
        args: Vec<String>,
        /// Built-in grid; explicit parameters, axes and outputs override it.
        #[arg(long)]
        recipe: Option<String>,
        /// `name=start:stop:points`, at most twice; the first varies fastest.
        #[arg(long = "axis")]
        axes: Vec<String>,
        #[arg(long)]
        outputs: Option<String>,
        /// Also render a heatmap of one column.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Column shown in the heatmap (default: first output column).
        #[arg(long)]
        svg_column: Option<String>,
        #[command(flatten)]
        bell: BellFlags,
    },
    /// List the built-in sweep recipes.
    Recipes,
    /// Maximize the Wigner-function CHSH value of one state.
    Bell {
        #[arg(required = true)]
        args: Vec<String>,
        #[command(flatten)]
        bell: BellFlags,
    },
    /// Compare closed-form and quadrature filter overlaps:
    /// `ftms overlap family=step omega_k=1 omega_l=0 tau_i=2 tau_s=2`.
    Overlap {
        args: Vec<String>,
        /// Absolute tolerance of the quadrature.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte Carlo check of the covariance blocks against closed forms.
    Validate {
        /// Model, parameters and filters; omit to run the three reference configurations.
        args: Vec<String>,
        /// Number of simulated realizations.
        #[arg(long, default_value_t = 200_000)]
        realizations: usize,
    },
}

/// Splits an optional leading model name from key=value pairs.
fn split_model(args: &[String]) -> CliResult<(Option<ModelKind>, &[String])> {
    match args.first() {
        Some(first) if !first.contains('=') => Ok((Some(first.parse()?), &args[1..])),
        _ => Ok((None, args)),
    }
}

fn params_for(args: &[String]) -> CliResult<ParamSet> {
    let (model, pairs) = split_model(args)?;
    let model = model.ok_or_else(|| CliError::usage("expected a model (`tmsv` or `thermal`) before the parameters"))?;
    let mut p = ParamSet::new(model);
    p.assign_all(pairs)?;
    Ok(p)
}

fn params_json(p: &ParamSet) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("model".into(), json!(p.model.name()));
    if let Some(f) = p.family {
        m.insert("family".into(), json!(f.to_string()));
    }
    for (k, &v) in &p.values {
        m.insert(k.to_string(), json_f64(v));
    }
    Value::Object(m)
}

fn cmd_sweep(
    g: &Global,
    args: &[String],
    recipe: Option<&str>,
    axis_specs: &[String],
    outputs: Option<&str>,
    svg_path: Option<&PathBuf>,
    svg_column: Option<&str>,
    bell: &BellFlags,
) -> CliResult<()> {
    let (model, pairs) = split_model(args)?;
    let (mut params, mut axes, mut default_outputs) = match recipe {
        Some(name) => {
            let r = sweep::recipe(name)?;
            if model.is_some_and(|m| m != r.model) {
                return Err(CliError::usage(format!("recipe `{name}` uses the {} model", r.model.name())));
            }
            (r.params(), r.axes(), Some(r.outputs))
        }
        None => {
            let m = model.ok_or_else(|| CliError::usage("expected a model or --recipe"))?;
            (ParamSet::new(m), vec![], None)
        }
    };
    params.assign_all(pairs)?;
    if !axis_specs.is_empty() {
        axes = axis_specs.iter().map(|s| Axis::parse(s)).collect::<CliResult<_>>()?;
    }
    if outputs.is_some() {
        default_outputs = None;
    }
    let outputs = parse_outputs(outputs.or(default_outputs))?;
    let cfg = bell.config(g.seed)?;
    let res = sweep::run(&params, &axes, &outputs, &cfg)?;

    let bytes = match g.format {
        Format::Csv => res.table.to_csv()?,
        Format::Json => {
            let mut p = res.params_json.clone();
            p["recipe"] = json!(recipe);
            p["outputs"] = json!(res.table.columns);
            envelope(p, res.table.rows_json(), res.diagnostics.clone())
        }
    };

    if let Some(path) = svg_path {
        let first_output = res.table.columns.len() - model::output_columns(params.model, &outputs).len();
        let col = match svg_column {
            Some(name) => res.table.column(name).ok_or_else(|| CliError::usage(format!("no column `{name}` to plot")))?,
            None => first_output,
        };
        let (nx, ny) = res.shape;
        let axis_values = |k: usize| axes.get(k).map_or(vec![0.0], Axis::values);
        let (xs, ys) = (axis_values(0), axis_values(1));
        let values: Vec<f64> = res.table.rows.iter().map(|r| r[col]).collect();
        debug_assert_eq!(values.len(), nx * ny);
        let title = res.table.columns[col].clone();
        let name = |k: usize| axes.get(k).map_or("", |a| a.name);
        let svg = svg::Heatmap { title: &title, x_label: name(0), y_label: name(1), xs: &xs, ys: &ys, values: &values }.render();
        write_atomic(path, svg.as_bytes())?;
    }
    emit(g.out.as_deref(), &bytes)
}

fn cmd_point(g: &Global, args: &[String], outputs: Option<&str>, bell: &BellFlags) -> CliResult<()> {
    let params = params_for(args)?;
    let outputs = parse_outputs(outputs)?;
    let res = sweep::run(&params, &[], &outputs, &bell.config(g.seed)?)?;
    let bytes = match g.format {
        Format::Csv => res.table.to_csv()?,
        Format::Json => envelope(params_json(&params), res.table.row_json(0), res.diagnostics),
    };
    emit(g.out.as_deref(), &bytes)
}

fn cmd_bell(g: &Global, args: &[String], bell: &BellFlags) -> CliResult<()> {
    let params = params_for(args)?;
    let state = params.state()?;
    let cfg = bell.config(g.seed)?;
    let res = state.bell(&cfg)?;
    let e_n = ftms_core::gaussian::log_negativity(&state.matrix)?.e_n;
    let names = ["q_i0", "p_i0", "q_i1", "p_i1", "q_s0", "p_s0", "q_s1", "p_s1"];
    let mut table = Table::new(state.columns.iter().map(|c| c.0.to_string()).collect());
    table.columns.extend(["b_max", "converged", "n_restarts", "e_n"].map(String::from));
    table.columns.extend(names.map(String::from));
    let mut row: Vec<f64> = state.columns.iter().map(|c| c.1).collect();
    row.extend([res.b_max, if res.converged { 1.0 } else { 0.0 }, res.n_restarts_used as f64, e_n]);
    row.extend(res.settings.to_array());
    table.rows.push(row);
    let bytes = match g.format {
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let s = res.settings;
            let results = json!({
                "b_max": json_f64(res.b_max),
                "e_n": json_f64(e_n),
                "settings": { "idler": s.idler, "signal": s.signal },
            });
            let diagnostics = json!({
                "converged": res.converged,
                "n_restarts_used": res.n_restarts_used,
                "max_evals": cfg.max_evals,
                "settings_family": bell.settings,
                "seed": cfg.seed,
            });
            envelope(params_json(&params), results, diagnostics)
        }
    };
    emit(g.out.as_deref(), &bytes)
}

fn filter_pair(p: &ParamSet) -> CliResult<(FilterSpec, FilterSpec)> {
    let family = p.family.ok_or_else(|| CliError::usage("filters need `family=step` or `family=exponential`"))?;
    Ok((
        FilterSpec::new(family, p.get("omega_k"), p.get("tau_i"))?,
        FilterSpec::new(family, p.get("omega_l"), p.get("tau_s"))?,
    ))
}

fn cmd_overlap(g: &Global, args: &[String], tol: f64) -> CliResult<()> {
    let mut p = ParamSet::new(ModelKind::Tmsv);
    p.assign_all(args)?;
    if let Some(extra) = p.values.keys().find(|k| !["omega_k", "omega_l", "tau_i", "tau_s"].contains(k)) {
        return Err(CliError::usage(format!("`{extra}` is not a filter parameter")));
    }
    let (fi, fs) = filter_pair(&p)?;
    let closed = overlap_closed_form(&fi, &fs)?;
    let numeric = overlap_numeric(&fi, &fs, tol)?;
    let cols = ["omega_k", "omega_l", "tau_i", "tau_s", "k_f", "l_f", "k_f_numeric", "l_f_numeric", "k_f_diff", "l_f_diff"];
    let mut table = Table::new(cols.map(String::from).to_vec());
    table.rows.push(vec![
        fi.omega,
        fs.omega,
        fi.tau,
        fs.tau,
        closed.k_f,
        closed.l_f,
        numeric.k_f,
        numeric.l_f,
        (closed.k_f - numeric.k_f).abs(),
        (closed.l_f - numeric.l_f).abs(),
    ]);
    let bytes = match g.format {
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let mut params = params_json(&p);
            params.as_object_mut().expect("object").remove("model");
            envelope(params, table.row_json(0), json!({ "tol": tol }))
        }
    };
    emit(g.out.as_deref(), &bytes)
}

struct ValidationCase {
    name: String,
    cfg: SimConfig,
    overlap: ftms_core::filters::OverlapFactors,
}

fn reference_cases(n: usize, seed: u64) -> CliResult<Vec<ValidationCase>> {
    let step = |o, t| FilterSpec::step(o, t);
    let ideal = |r| TmsvParams::new(r, 1.0, 1.0, ftms_core::filters::OverlapFactors::IDENTICAL);
    let thermal = ThermalParams::new(0.5, 0.3, 0.8, ftms_core::filters::OverlapFactors::IDENTICAL)?;
    let cases = [
        ("vacuum", SimModel::Tmsv(ideal(0.0)?), step(1.0, 2.0)?, step(0.5, 1.5)?),
        ("tmsv", SimModel::Tmsv(ideal(1.0)?), step(1.0, 2.0)?, step(1.0, 2.0)?),
        ("thermal", SimModel::Thermal(thermal), step(1.0, 2.0)?, step(0.0, 2.0)?),
    ];
    cases
        .into_iter()
        .enumerate()
        .map(|(k, (name, model, fi, fs))| {
            Ok(ValidationCase {
                name: name.into(),
                cfg: SimConfig::with_defaults(model, fi, fs, n, seed.wrapping_add(k as u64)),
                overlap: overlap_closed_form(&fi, &fs)?,
            })
        })
        .collect()
}

fn custom_case(args: &[String], n: usize, seed: u64) -> CliResult<ValidationCase> {
    let p = params_for(args)?;
    if p.values.contains_key("k_f") || p.values.contains_key("l_f") {
        return Err(CliError::usage("validate simulates the filters; give family, omega and tau instead of k_f, l_f"));
    }
    let (fi, fs) = filter_pair(&p)?;
    let state = p.state()?;
    let model = match state.source {
        Source::Tmsv(t) => SimModel::Tmsv(t),
        Source::Thermal(t, ei, es) => {
            if ei != 1.0 || es != 1.0 {
                return Err(CliError::usage("the thermal simulation assumes ideal detection"));
            }
            SimModel::Thermal(t)
        }
    };
    let overlap = overlap_closed_form(&fi, &fs)?;
    Ok(ValidationCase { name: p.model.name().into(), cfg: SimConfig::with_defaults(model, fi, fs, n, seed), overlap })
}

fn cmd_validate(g: &Global, args: &[String], n: usize) -> CliResult<()> {
    let cases = if args.is_empty() { reference_cases(n, g.seed)? } else { vec![custom_case(args, n, g.seed)?] };
    let mut rows = vec![];
    let mut json_cases = vec![];
    let mut failures = 0;
    for case in &cases {
        let out = simulate(&case.cfg)?;
        let truth = case.cfg.model.closed_form(case.overlap);
        let entries = [
            ("d_i", truth.d_i, out.blocks.d_i, out.std_errors.d_i, out.bias_estimate.d_i),
            ("d_s", truth.d_s, out.blocks.d_s, out.std_errors.d_s, out.bias_estimate.d_s),
            ("c11", truth.c11, out.blocks.c11, out.std_errors.c11, out.bias_estimate.c11),
            ("c12", truth.c12, out.blocks.c12, out.std_errors.c12, out.bias_estimate.c12),
        ];
        let mut json_rows = vec![];
        for (block, analytic, estimate, se, bias) in entries {
            let z = (estimate - analytic) / se;
            let pass = z.abs() <= 5.0;
            failures += usize::from(!pass);
            rows.push([
                case.name.clone(),
                block.to_string(),
                fmt_f64(analytic),
                fmt_f64(estimate),
                fmt_f64(se),
                fmt_f64(z),
                fmt_f64(bias),
                if pass { "pass" } else { "fail" }.to_string(),
            ]);
            json_rows.push(json!({
                "block": block, "analytic": json_f64(analytic), "estimate": json_f64(estimate),
                "std_error": json_f64(se), "z": json_f64(z), "bias_estimate": json_f64(bias), "pass": pass,
            }));
        }
        json_cases.push(json!({
            "config": case.name,
            "k_f": json_f64(case.overlap.k_f),
            "l_f": json_f64(case.overlap.l_f),
            "dt": json_f64(case.cfg.dt),
            "horizon": json_f64(case.cfg.horizon),
            "blocks": json_rows,
            "warnings": out.warnings,
        }));
    }
    let bytes = match g.format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
            let err = |e: csv::Error| CliError::usage(format!("csv: {e}"));
            w.write_record(["config", "block", "analytic", "estimate", "std_error", "z", "bias_estimate", "status"]).map_err(err)?;
            for r in &rows {
                w.write_record(r).map_err(err)?;
            }
            w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?
        }
        Format::Json => envelope(
            json!({ "realizations": n, "seed": g.seed, "threshold_sigma": 5.0 }),
            Value::Array(json_cases),
            json!({ "failed_blocks": failures }),
        ),
    };
    emit(g.out.as_deref(), &bytes)
}

fn cmd_recipes(g: &Global) -> CliResult<()> {
    let mut text = String::new();
    for r in sweep::RECIPES {
        let axes: Vec<String> = r.axes.iter().map(|a| format!("{}={}:{}:{}", a.0, a.1, a.2, a.3)).collect();
        text += &format!("{:<28} {:<8} {:<36} {}\n", r.name, r.model.name(), axes.join(" "), r.summary);
    }
    emit(g.out.as_deref(), text.as_bytes())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Point { args, outputs, bell } => cmd_point(g, args, outputs.as_deref(), bell),
        Command::Sweep { args, recipe, axes, outputs, svg, svg_column, bell } => {
            cmd_sweep(g, args, recipe.as_deref(), axes, outputs.as_deref(), svg.as_ref(), svg_column.as_deref(), bell)
        }
        Command::Recipes => cmd_recipes(g),
        Command::Bell { args, bell } => cmd_bell(g, args, bell),
        Command::Overlap { args, tol } => cmd_overlap(g, args, *tol),
        Command::Validate { args, realizations } => cmd_validate(g, args, *realizations),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            let err = CliError::Usage { kind: "usage", message: e.to_string().trim().to_string() };
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
