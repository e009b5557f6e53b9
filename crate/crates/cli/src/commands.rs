use std::path::Path;

use renewal_core::bijections::{asymptotic_params, BijectionSpec, Knots, DEFAULT_ABS_TOL};
use renewal_core::closed_forms::{m_exact, n_exact, M_EXACT_T_CAP};
use renewal_core::montecarlo::{
    estimate_n, estimate_stopped_sum, overshoot_histogram, SimConfig, MIN_BINS,
};
use renewal_core::solver::{solve, MAX_STEP};
use renewal_core::Error;

use crate::args::{
    AsymptArgs, ExactArgs, Format, OvershootArgs, Quantity, SimArgs, SimulateArgs, SolveArgs,
    Target,
};

/// Smallest grid spacing the `solve` command accepts.
pub const MIN_STEP: f64 = 1e-5;
/// Largest horizon the `solve` command accepts.
pub const MAX_T_MAX: f64 = 1e4;
/// Upper bound on simulation workers.
pub const MAX_WORKERS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid arguments; exit code 2.
    Usage(String),
    /// Numerical failure inside the solver or quadrature; exit code 3.
    Numerical(String),
    /// Verification found failing checks; exit code 1.
    Failed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Failed(m) | CliError::Io(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Nonconvergence { .. } | Error::IterationCap { .. } => {
                CliError::Numerical(e.to_string())
            }
            Error::Io(m) => CliError::Io(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Main output plus an optional human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: String,
    pub summary: Option<String>,
}

impl Report {
    fn plain(body: String) -> Self {
        Report {
            body,
            summary: None,
        }
    }
}

/// Fixed 17-significant-digit formatting used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

/// Resolves `--f`: built-in names take precedence over file paths.
pub fn resolve_spec(arg: &str) -> Result<BijectionSpec, CliError> {
    let lowered = arg.trim().to_ascii_lowercase();
    if lowered == "identity" || lowered == "logproduct" || lowered.starts_with("power:") {
        return arg.parse::<BijectionSpec>().map_err(CliError::from);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(usage(format!(
            "`{arg}` is neither a built-in bijection (identity, logproduct, power:<p>) nor a knot file"
        )));
    }
    Knots::from_file(path)
        .map(BijectionSpec::PiecewiseLinear)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn cmd_exact(args: &ExactArgs) -> Result<Report, CliError> {
    let t = args.t;
    let (spec, value, label) = match args.target {
        Target::Product => {
            require((0.0..=2.0).contains(&t), || {
                "product closed form defined for t in [0,2]; use solve".to_string()
            })?;
            (BijectionSpec::LogProduct, n_exact(t)?, "product")
        }
        Target::Sum => {
            require((0.0..=M_EXACT_T_CAP).contains(&t), || {
                format!("sum closed form defined for t in [0,{M_EXACT_T_CAP}]; use solve")
            })?;
            (BijectionSpec::Identity, m_exact(t)?, "sum")
        }
    };
    let asymptote = asymptotic_params(&spec, DEFAULT_ABS_TOL)?.asymptote(t);
    let body = match args.out.format {
        Format::Csv => format!(
            "t,exact,asymptote\n{},{},{}\n",
            fmt_f64(t),
            fmt_f64(value),
            fmt_f64(asymptote)
        ),
        Format::Json => json_text(&serde_json::json!({
            "target": label,
            "t": t,
            "exact": value,
            "asymptote": asymptote,
        })),
    };
    Ok(Report::plain(body))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Report, CliError> {
    let spec = resolve_spec(&args.spec)?;
    require((MIN_STEP..=MAX_STEP).contains(&args.step), || {
        format!(
            "--step must lie in [{MIN_STEP}, {MAX_STEP}], got {}",
            args.step
        )
    })?;
    require(args.t_max >= args.step && args.t_max <= MAX_T_MAX, || {
        format!(
            "--t-max must lie in [step, {MAX_T_MAX}], got {}",
            args.t_max
        )
    })?;

    let curve = solve(&spec, args.t_max, args.step)?;
    let params = asymptotic_params(&spec, DEFAULT_ABS_TOL)?;
    let final_value = curve.eval(args.t_max)?;
    let gap = curve.asymptote_gap(&params, args.t_max)?;
    let body = match args.out.format {
        Format::Csv => curve.to_csv(),
        Format::Json => json_text(&curve.to_json()),
    };
    Ok(Report {
        body,
        summary: Some(format!(
            "{spec}: N({}) = {} ; asymptote gap = {}",
            args.t_max,
            fmt_f64(final_value),
            fmt_f64(gap)
        )),
    })
}

pub fn cmd_asympt(args: &AsymptArgs) -> Result<Report, CliError> {
    let spec = resolve_spec(&args.spec)?;
    require(args.tol > 0.0 && args.tol < 1.0, || {
        format!("--tol must lie in (0, 1), got {}", args.tol)
    })?;
    let p = asymptotic_params(&spec, args.tol)?;
    let body = match args.out.format {
        Format::Csv => format!(
            "spec,mu,sigma2,c,slope,intercept\n{spec},{},{},{},{},{}\n",
            fmt_f64(p.mu),
            fmt_f64(p.sigma2),
            fmt_f64(p.c),
            fmt_f64(p.slope),
            fmt_f64(p.intercept)
        ),
        Format::Json => {
            let mut v = serde_json::to_value(p).expect("params serialize");
            v.as_object_mut()
                .expect("params are an object")
                .insert("spec".into(), spec.label().into());
            json_text(&v)
        }
    };
    Ok(Report::plain(body))
}

fn sim_config(sim: &SimArgs) -> Result<(BijectionSpec, SimConfig), CliError> {
    let spec = resolve_spec(&sim.spec)?;
    require(sim.t >= 0.0 && sim.t.is_finite(), || {
        format!("--t must be a finite value >= 0, got {}", sim.t)
    })?;
    require(sim.samples >= 1, || "--samples must be at least 1".into())?;
    require((1..=MAX_WORKERS).contains(&sim.workers), || {
        format!(
            "--workers must lie in [1, {MAX_WORKERS}], got {}",
            sim.workers
        )
    })?;
    Ok((
        spec,
        SimConfig::new(sim.t, sim.samples, sim.seed).workers(sim.workers),
    ))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Report, CliError> {
    let (spec, cfg) = sim_config(&args.sim)?;
    let (est, name) = match args.quantity {
        Quantity::N => (estimate_n(&spec, cfg)?, "n"),
        Quantity::StoppedSum => (estimate_stopped_sum(&spec, cfg)?, "stopped_sum"),
    };
    let body = match args.out.format {
        Format::Csv => format!(
            "quantity,t,spec,samples,seed,workers,mean,std_error\n{name},{},{},{},{},{},{},{}\n",
            fmt_f64(est.t),
            est.spec,
            est.samples,
            est.seed,
            est.workers,
            fmt_f64(est.mean),
            fmt_f64(est.std_error)
        ),
        Format::Json => json_text(&est.to_json()),
    };
    Ok(Report::plain(body))
}

pub fn cmd_overshoot(args: &OvershootArgs) -> Result<Report, CliError> {
    let (spec, cfg) = sim_config(&args.sim)?;
    require(args.bins >= MIN_BINS, || {
        format!("--bins must be at least {MIN_BINS}, got {}", args.bins)
    })?;
    let hist = overshoot_histogram(&spec, cfg, args.bins)?;
    let body = match args.out.format {
        Format::Csv => {
            let mut s = String::from("bin_lo,bin_hi,density\n");
            for (e, d) in hist.bin_edges.windows(2).zip(&hist.densities) {
                s.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(e[0]),
                    fmt_f64(e[1]),
                    fmt_f64(*d)
                ));
            }
            s
        }
        Format::Json => json_text(&hist.to_json()),
    };
    Ok(Report::plain(body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::OutputArgs;

    fn out() -> OutputArgs {
        OutputArgs {
            format: Format::Csv,
            output: None,
        }
    }

    #[test]
    fn exact_sum_at_one_is_e() {
        let r = cmd_exact(&ExactArgs {
            target: Target::Sum,
            t: 1.0,
            out: out(),
        })
        .unwrap();
        let row = r.body.lines().nth(1).unwrap();
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn exact_product_range() {
        let r = cmd_exact(&ExactArgs {
            target: Target::Product,
            t: 0.0,
            out: out(),
        })
        .unwrap();
        assert!(r
            .body
            .lines()
            .nth(1)
            .unwrap()
            .contains(",1.0000000000000000e0,"));
        let err = cmd_exact(&ExactArgs {
            target: Target::Product,
            t: 2.5,
            out: out(),
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(
            err.to_string(),
            "product closed form defined for t in [0,2]; use solve"
        );
    }

    #[test]
    fn spec_resolution_prefers_builtins() {
        assert_eq!(resolve_spec("identity").unwrap(), BijectionSpec::Identity);
        assert_eq!(
            resolve_spec("power:0.5").unwrap(),
            BijectionSpec::power(0.5).unwrap()
        );
        assert_eq!(resolve_spec("power:50").unwrap_err().exit_code(), 2);
        assert_eq!(resolve_spec("/no/such/file").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let e: CliError = Error::Nonconvergence {
            a: 0.0,
            b: 1.0,
            estimate: 1.0,
            tol: 1e-9,
            panels: 10,
        }
        .into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = Error::Precondition("x".into()).into();
        assert_eq!(e.exit_code(), 2);
    }
}
