mod output;

use clap::{Parser, Subcommand, ValueEnum};
use gcye::fredholm::{cdf_largest_result, IntegralKernel, NystromOptions};
use gcye::painleve::{sigma_pvi_residual, theta_from_gap, theta_pv_residual, ResidualReport};
use gcye::ratelab::{cdf_rate, geometric_grid, kernel_rate, RateTable};
use gcye::sampler::{ks_distance, run_chains, ChainConfig};
use gcye::unitary::{correspondence_check, kernel_u_finite, kernel_u_limit};
use gcye::{EnsembleConfig, Error, KernelHandle, KernelKind, SParam};
use output::{num, write_csv, write_json, RunManifest};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "gcye", version, about = "Largest-eigenvalue statistics of the generalized Cauchy ensemble")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct SArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s_im: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateMode {
    Kernel,
    Cdf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Pvi,
    Pv,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate P[λ₁/N ≤ x].
    Cdf {
        #[command(flatten)]
        s: SArgs,
        /// Matrix size; 0 selects the N → ∞ limit.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Starting Nyström order.
        #[arg(long, default_value_t = 32)]
        order: usize,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// N·gap tables for the kernel or the CDF.
    Rate {
        #[arg(long, value_enum)]
        mode: RateMode,
        #[command(flatten)]
        s: SArgs,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        n_list: Vec<usize>,
        /// Side of the sup grid in kernel mode.
        #[arg(long, default_value_t = 33)]
        grid_size: usize,
        /// Evaluation points in cdf mode.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        x_points: Vec<f64>,
        /// Bound on max/min of the scaled gaps.
        #[arg(long, default_value_t = 4.0)]
        limit: f64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Painlevé residuals of σ (finite N) or θ (scaled).
    Painleve {
        #[arg(long, value_enum)]
        target: Target,
        #[command(flatten)]
        s: SArgs,
        /// Matrix size; 0 selects the limit (pv only).
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        tau_min: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long, default_value_t = 32)]
        cheb: usize,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Metropolis–Hastings draws of λ₁/N with a KS summary.
    Sample {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        s: SArgs,
        /// Sweeps per chain, burn-in included.
        #[arg(long, default_value_t = 20000)]
        steps: usize,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        /// Draws CSV.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// JSON summary; `<out>.json` by default, stderr when writing draws to stdout.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Skip the KS distance to the limit law.
        #[arg(long)]
        no_limit: bool,
    },
    /// Unitary-kernel correspondence and Hermiticity checks.
    UnitaryCheck {
        #[command(flatten)]
        s: SArgs,
        /// Size of the finite unitary kernel in the Hermiticity checks.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_domain() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn s_param(s: SArgs) -> CliResult<SParam> {
    Ok(SParam::new(s.s_re, s.s_im)?)
}

fn kind_for(s: SParam, n: usize) -> CliResult<KernelKind> {
    Ok(if n == 0 {
        KernelKind::Limit(s)
    } else {
        KernelKind::FiniteScaled(EnsembleConfig::new(s, n)?)
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn to_array(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn cmd_cdf(s: SArgs, n: usize, x_min: f64, x_max: f64, points: usize, order: usize, out: &Path) -> CliResult<()> {
    if !(x_min > 0.0) {
        return usage(format!("--x-min must be positive, got {x_min}"));
    }
    if !(x_max >= x_min) {
        return usage(format!("--x-max must be at least --x-min, got {x_max} < {x_min}"));
    }
    if points == 0 || order == 0 {
        return usage("--points and --order must be at least 1");
    }
    let sp = s_param(s)?;
    let kind = kind_for(sp, n)?;
    let opts = NystromOptions {
        order,
        ..Default::default()
    };
    let grid = if x_max == x_min { vec![x_min] } else { geometric_grid(x_min, x_max, points) };
    let rows = grid
        .iter()
        .map(|&x| {
            let g = cdf_largest_result(kind, x, &opts)?;
            Ok(vec![num(x), num(g.value), num(g.error_estimate), g.method.name().to_string()])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = RunManifest::new("cdf", 0)
        .param("s_re", s.s_re)
        .param("s_im", s.s_im)
        .param("n", n)
        .param("x_min", x_min)
        .param("x_max", x_max)
        .param("points", points)
        .param("order", order);
    write_csv(out, &manifest, &["x", "F", "error_estimate", "method"], &rows)?;
    Ok(())
}

fn rate_rows(t: &RateTable, tags: &[String]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, &n) in t.n_list.iter().enumerate() {
        for (j, tag) in tags.iter().enumerate() {
            rows.push(vec![n.to_string(), tag.clone(), num(t.raw_gaps[k][j]), num(t.scaled_gaps[k][j])]);
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn cmd_rate(
    mode: RateMode,
    s: SArgs,
    x0: f64,
    n_list: &[usize],
    grid_size: usize,
    x_points: &[f64],
    limit: f64,
    out: &Path,
) -> CliResult<bool> {
    let sp = s_param(s)?;
    let map = KernelHandle::limit(sp).preferred_map();
    let (table, tags, mode_name) = match mode {
        RateMode::Kernel => {
            let t = kernel_rate(sp, x0, n_list, grid_size)?;
            (t, vec!["sup".to_string()], "kernel")
        }
        RateMode::Cdf => {
            let t = cdf_rate(sp, x_points, n_list)?;
            let tags = x_points.iter().map(|&x| num(x)).collect();
            (t, tags, "cdf")
        }
    };
    let pass = table.bounded(limit);
    let spread = table.spread();
    let manifest = RunManifest::new("rate", 0)
        .param("mode", mode_name)
        .param("s_re", s.s_re)
        .param("s_im", s.s_im)
        .param("x0", x0)
        .param("n_list", join(n_list))
        .param("grid_size", grid_size)
        .param("x_points", join(x_points))
        .param("map", map.name())
        .param("max_over_min", join(&spread))
        .param("verdict", verdict(pass));
    write_csv(out, &manifest, &["N", "x", "raw_gap", "scaled_gap"], &rate_rows(&table, &tags))?;
    eprintln!("{} (max/min {} <= {limit})", verdict(pass), join(&spread));
    Ok(pass)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[allow(clippy::too_many_arguments)]
fn cmd_painleve(
    target: Target,
    s: SArgs,
    n: usize,
    tau_min: f64,
    tau_max: f64,
    points: usize,
    cheb: usize,
    out: &Path,
) -> CliResult<bool> {
    if !(tau_min > 0.0 && tau_max > tau_min) {
        return usage(format!("need 0 < --tau-min < --tau-max, got [{tau_min}, {tau_max}]"));
    }
    if points < 2 {
        return usage("--points must be at least 2");
    }
    let sp = s_param(s)?;
    let taus: Vec<f64> = (0..points)
        .map(|k| tau_min + (tau_max - tau_min) * k as f64 / (points - 1) as f64)
        .collect();
    let (target_name, grid, pairs) = match target {
        Target::Pv => {
            let kind = kind_for(sp, n)?;
            let th = theta_from_gap(kind, [tau_min, tau_max], cheb)?;
            let pairs = taus
                .iter()
                .map(|&t| Ok(theta_pv_residual(&th.sample(t)?, sp)))
                .collect::<CliResult<Vec<_>>>()?;
            ("pv", taus, pairs)
        }
        Target::Pvi => {
            if n == 0 {
                return usage("--target pvi needs --n >= 1");
            }
            let cfg = EnsembleConfig::new(sp, n)?;
            let th = theta_from_gap(KernelKind::FiniteScaled(cfg), [tau_min, tau_max], cheb)?;
            let samples = taus.iter().map(|&t| th.sigma_at(t)).collect::<Result<Vec<_>, _>>()?;
            let pairs = samples.iter().map(|p| sigma_pvi_residual(p, &cfg)).collect();
            ("pvi", samples.iter().map(|p| p.t).collect(), pairs)
        }
    };
    let report = ResidualReport::from_pairs(grid, &pairs);
    let pass = report.max_relative < 1e-3;
    let manifest = RunManifest::new("painleve", 0)
        .param("target", target_name)
        .param("s_re", s.s_re)
        .param("s_im", s.s_im)
        .param("n", n)
        .param("tau_min", tau_min)
        .param("tau_max", tau_max)
        .param("points", points)
        .param("cheb", cheb);
    let mut fields = Map::new();
    fields.insert("grid".into(), to_array(&report.grid));
    fields.insert("residuals".into(), to_array(&report.residuals));
    fields.insert("normalizers".into(), to_array(&report.normalizers));
    fields.insert("max_relative".into(), json!(report.max_relative));
    fields.insert("verdict".into(), json!(verdict(pass)));
    write_json(out, &manifest, fields)?;
    eprintln!("{} (max relative residual {:.3e})", verdict(pass), report.max_relative);
    Ok(pass)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    n: usize,
    s: SArgs,
    steps: usize,
    chains: usize,
    seed: u64,
    thin: usize,
    out: &Path,
    summary: Option<&Path>,
    no_limit: bool,
) -> CliResult<()> {
    let start = Instant::now();
    let sp = s_param(s)?;
    let cfg = EnsembleConfig::new(sp, n)?;
    let cc = ChainConfig {
        thin,
        ..ChainConfig::new(cfg, steps, seed)
    };
    let batch = run_chains(cc, chains)?;
    let per_chain = (batch.draws.len() / chains).max(1);
    let rows: Vec<Vec<String>> = batch
        .draws
        .iter()
        .enumerate()
        .map(|(i, &d)| vec![(i / per_chain).to_string(), (i % per_chain).to_string(), num(d)])
        .collect();
    let mut manifest = RunManifest::new("sample", seed)
        .param("n", n)
        .param("s_re", s.s_re)
        .param("s_im", s.s_im)
        .param("steps", steps)
        .param("burn_in", cc.burn_in)
        .param("chains", chains)
        .param("thin", thin);
    write_csv(out, &manifest, &["chain", "index", "lambda1_over_n"], &rows)?;

    let ks_finite = ks_distance(&batch, KernelKind::FiniteScaled(cfg))?;
    let ks_limit = if no_limit { None } else { Some(ks_distance(&batch, KernelKind::Limit(sp))?) };
    manifest.wall_time_s = Some(start.elapsed().as_secs_f64());
    let mut fields = Map::new();
    fields.insert("draws".into(), json!(batch.draws.len()));
    fields.insert("ess".into(), json!(batch.ess));
    fields.insert("acceptance_rate".into(), json!(batch.acceptance_rate));
    fields.insert("step_scale".into(), json!(batch.step_scale));
    fields.insert("ks_finite".into(), json!(ks_finite));
    fields.insert("ks_limit".into(), ks_limit.map_or(Value::Null, |v| json!(v)));
    let path = match summary {
        Some(p) => p.to_path_buf(),
        None if out.as_os_str() == "-" => {
            let mut obj = manifest.to_json();
            obj.extend(fields);
            eprintln!("{}", serde_json::to_string_pretty(&Value::Object(obj)).unwrap_or_default());
            return Ok(());
        }
        None => {
            let mut p = out.as_os_str().to_owned();
            p.push(".json");
            PathBuf::from(p)
        }
    };
    write_json(&path, &manifest, fields)?;
    Ok(())
}

fn cmd_unitary_check(s: SArgs, n: usize, tol: f64, out: &Path) -> CliResult<bool> {
    let sp = s_param(s)?;
    let cfg = EnsembleConfig::new(sp, n)?;
    let grid: Vec<f64> = (0..10).map(|k| 0.5 * 10f64.powf(k as f64 / 9.0)).collect();
    let c = correspondence_check(sp, &grid, tol)?;
    let angles = [-2.5, -1.1, -0.3, 0.4, 1.7, 2.9];
    let (mut herm_finite, mut herm_limit): (f64, f64) = (0.0, 0.0);
    for &a in &angles {
        for &b in angles.iter().filter(|&&b| b != a) {
            let (f1, f2) = (kernel_u_finite(a, b, cfg)?, kernel_u_finite(b, a, cfg)?);
            herm_finite = herm_finite.max((f1 - f2.conj()).norm() / f1.norm().max(1e-300));
            let (l1, l2) = (kernel_u_limit(4.0 * a, 4.0 * b, sp)?, kernel_u_limit(4.0 * b, 4.0 * a, sp)?);
            herm_limit = herm_limit.max((l1 - l2.conj()).norm() / l1.norm().max(1e-300));
        }
    }
    let herm_pass = herm_finite < 1e-10 && herm_limit < 1e-10;
    let pass = herm_pass && c.variation <= tol;
    let manifest = RunManifest::new("unitary-check", 0)
        .param("s_re", s.s_re)
        .param("s_im", s.s_im)
        .param("n", n)
        .param("tol", tol);
    let mut fields = Map::new();
    fields.insert("orientation".into(), json!(c.orientation.name()));
    fields.insert("jacobian".into(), json!(c.jacobian));
    fields.insert("constant_re".into(), json!(c.constant.re));
    fields.insert("constant_im".into(), json!(c.constant.im));
    fields.insert("variation".into(), json!(c.variation));
    fields.insert("hermiticity_finite".into(), json!(herm_finite));
    fields.insert("hermiticity_limit".into(), json!(herm_limit));
    fields.insert("hermiticity".into(), json!(verdict(herm_pass)));
    fields.insert("verdict".into(), json!(verdict(pass)));
    write_json(out, &manifest, fields)?;
    eprintln!(
        "{} ({} orientation, {} ratio, variation {:.1e})",
        verdict(pass),
        c.orientation.name(),
        if c.jacobian { "Jacobian" } else { "bare" },
        c.variation
    );
    Ok(pass)
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GCYE_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("GCYE_THREADS must be a positive integer, got {v:?}")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    // a FAIL verdict is a reported result, not an error
    match cli.command {
        Command::Cdf {
            s,
            n,
            x_min,
            x_max,
            points,
            order,
            out,
        } => cmd_cdf(s, n, x_min, x_max, points, order, &out),
        Command::Rate {
            mode,
            s,
            x0,
            n_list,
            grid_size,
            x_points,
            limit,
            out,
        } => cmd_rate(mode, s, x0, &n_list, grid_size, &x_points, limit, &out).map(drop),
        Command::Painleve {
            target,
            s,
            n,
            tau_min,
            tau_max,
            points,
            cheb,
            out,
        } => cmd_painleve(target, s, n, tau_min, tau_max, points, cheb, &out).map(drop),
        Command::Sample {
            n,
            s,
            steps,
            chains,
            seed,
            thin,
            out,
            summary,
            no_limit,
        } => cmd_sample(n, s, steps, chains, seed, thin, &out, summary.as_deref(), no_limit),
        Command::UnitaryCheck { s, n, tol, out } => cmd_unitary_check(s, n, tol, &out).map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
