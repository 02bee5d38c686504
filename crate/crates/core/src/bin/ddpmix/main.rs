#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod settings;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddpmix::estimation::{coverage_report, effective_sample_size, gelman_rubin, linspace, summarize};
use ddpmix::gibbs::{read_archive_path, run_chains, write_archive_path, Draw, PosteriorDraws, RunOptions};
use ddpmix::mixture::{mean_functional, simulate_toy, toy_density, toy_mean};
use ddpmix::validate::{run_battery, ValidateOptions};
use ddpmix::{Error, Result, TimeGridDataset};

use settings::Settings;

#[derive(Parser)]
#[command(name = "ddpmix", version, about = "Diffusive Dirichlet process mixtures for time-varying densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the toy dataset N(cos(2t) + t/2, 1/10) on an equally spaced grid.
    Simulate(SimulateArgs),
    /// Fit the model with the slice Gibbs sampler and write a draws archive.
    Fit(Box<FitArgs>),
    /// Summarize a draws archive into density-surface and mean-functional exports.
    Summarize(SummarizeArgs),
    /// Run the analytic-identity validation battery.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    times: usize,
    #[arg(long, default_value_t = 1)]
    per_time: usize,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (time,value).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Config file: JSON object or key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV with columns time,value.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Read times from this YYYY-MM-DD column (days since the first row).
    #[arg(long)]
    date_column: Option<String>,
    /// Draws archive to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Per-sweep telemetry file (suffixed per chain).
    #[arg(long)]
    telemetry: Option<PathBuf>,
    /// Checkpoint file (suffixed per chain).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Continue from existing checkpoints.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// dirichlet or pitman_yor.
    #[arg(long)]
    stick_law: Option<String>,
    /// Starting concentration.
    #[arg(long)]
    theta: Option<f64>,
    /// Pitman-Yor discount.
    #[arg(long)]
    sigma: Option<f64>,
    /// Starting shared rate.
    #[arg(long)]
    c: Option<f64>,
    /// shared or standard.
    #[arg(long)]
    time_scale: Option<String>,
    #[arg(long)]
    fix_theta: Option<f64>,
    #[arg(long)]
    fix_c: Option<f64>,
    /// Gamma prior as shape,rate.
    #[arg(long)]
    theta_prior: Option<String>,
    /// Gamma prior as shape,rate.
    #[arg(long)]
    c_prior: Option<String>,
    /// Normal-Gamma centering as mean0,kappa0,shape,rate.
    #[arg(long)]
    centering: Option<String>,
    #[arg(long)]
    slice_eta: Option<f64>,
    #[arg(long)]
    trans_slice_eta: Option<f64>,
    #[arg(long)]
    m_cap: Option<usize>,
    /// Represent exactly m_cap components.
    #[arg(long)]
    truncate_at_cap: bool,
    #[arg(long)]
    mh_initial_step: Option<f64>,
}

impl FitArgs {
    fn settings(&self) -> Settings {
        let mut s = Settings::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                s.insert(k.to_string(), v);
            }
        };
        let p = |x: &Option<PathBuf>| x.as_ref().map(|p| p.display().to_string());
        let n = |x: Option<f64>| x.map(|v| v.to_string());
        let u = |x: Option<usize>| x.map(|v| v.to_string());
        put("data", p(&self.data));
        put("date_column", self.date_column.clone());
        put("output", p(&self.output));
        put("telemetry", p(&self.telemetry));
        put("checkpoint", p(&self.checkpoint));
        put("checkpoint_every", u(self.checkpoint_every));
        put("chains", u(self.chains));
        put("burn_in", u(self.burn_in));
        put("iters", u(self.iters));
        put("thin", u(self.thin));
        put("seed", self.seed.map(|v| v.to_string()));
        put("stick_law", self.stick_law.clone());
        put("theta", n(self.theta));
        put("sigma", n(self.sigma));
        put("c", n(self.c));
        put("time_scale", self.time_scale.clone());
        put("fix_theta", n(self.fix_theta));
        put("fix_c", n(self.fix_c));
        put("theta_prior", self.theta_prior.clone());
        put("c_prior", self.c_prior.clone());
        put("centering", self.centering.clone());
        put("slice_eta", n(self.slice_eta));
        put("trans_slice_eta", n(self.trans_slice_eta));
        put("m_cap", u(self.m_cap));
        put("truncate_at_cap", self.truncate_at_cap.then(|| "true".to_string()));
        put("mh_initial_step", n(self.mh_initial_step));
        s
    }
}

#[derive(Args)]
struct SummarizeArgs {
    /// Draws archive written by `fit`.
    #[arg(long)]
    draws: PathBuf,
    /// Density grid as lo:hi:n, or `auto`.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    y_grid: String,
    /// Long-format surface CSV (t,y,q025,q50,q975,mean).
    #[arg(long)]
    surface_csv: Option<PathBuf>,
    /// Mean-functional CSV (t,mode,mean,lo,hi).
    #[arg(long)]
    mean_csv: Option<PathBuf>,
    /// Full surface as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Report coverage against the toy generating process.
    #[arg(long)]
    toy_truth: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Smaller Monte Carlo sizes.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = ValidateOptions::default().seed)]
    seed: u64,
    /// Monte Carlo tolerance in standard errors.
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    tolerance: f64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Fit(a) => fit(&a),
        Command::Summarize(a) => summarize_cmd(&a),
        Command::Validate(a) => validate(&a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn simulate(a: &SimulateArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let data = simulate_toy(a.times, a.per_time, a.t_max, &mut rng)?;
    data.write_csv(create(&a.output)?)?;
    println!(
        "wrote {} rows ({} times x {}) to {}",
        data.n_observations(),
        data.n_times(),
        a.per_time,
        a.output.display()
    );
    Ok(0)
}

fn fit(a: &FitArgs) -> Result<u8> {
    let file = match &a.config {
        Some(p) => settings::load_config(p)?,
        None => Settings::new(),
    };
    let s = settings::merge(file, a.settings());
    let cfg = settings::sampler_config(&s)?;
    let data_path =
        settings::path(&s, "data").ok_or_else(|| Error::InvalidParameter("no dataset given (--data)".into()))?;
    let output =
        settings::path(&s, "output").ok_or_else(|| Error::InvalidParameter("no output given (--output)".into()))?;
    let data = TimeGridDataset::read_csv_path(&data_path, s.get("date_column").map(String::as_str))?;
    let n_chains = settings::chains(&s)?;
    let opts = RunOptions {
        checkpoint: settings::path(&s, "checkpoint"),
        checkpoint_every: settings::checkpoint_every(&s)?,
        resume: a.resume,
        telemetry: settings::path(&s, "telemetry"),
        ..RunOptions::default()
    };
    let chains = run_chains(&data, &cfg, n_chains, &opts)?;
    write_archive_path(&output, &chains)?;
    for c in &chains {
        println!(
            "chain={} draws={} theta_acceptance={:.3} c_acceptance={:.3}",
            c.chain,
            c.draws.len(),
            c.theta_acceptance,
            c.c_acceptance
        );
    }
    println!("archive={}", output.display());
    Ok(0)
}

fn parse_grid(spec: &str, draws: &[&Draw]) -> Result<Vec<f64>> {
    if spec == "auto" {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for d in draws {
            let m = &d.measure;
            for i in 0..m.n_times() {
                let w = m.weights_at(i).weights;
                for (x, w) in m.atoms.iter().zip(w) {
                    if w >= 0.01 {
                        let sd = x.precision.recip().sqrt();
                        lo = lo.min(x.mean - 3.0 * sd);
                        hi = hi.max(x.mean + 3.0 * sd);
                    }
                }
            }
        }
        if !(lo < hi) {
            return Err(Error::Data("cannot derive a y grid from the draws".into()));
        }
        return Ok(linspace(lo, hi, 100));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("y grid `{spec}` is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo < hi) || n < 2 {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

type Trace = Box<dyn Fn(&Draw) -> Option<f64>>;

fn print_diagnostics(chains: &[PosteriorDraws]) {
    let traces: Vec<(&str, Trace)> = vec![
        ("theta", Box::new(|d: &Draw| d.theta)),
        ("c", Box::new(|d: &Draw| d.c)),
        ("m", Box::new(|d: &Draw| Some(d.m as f64))),
        ("mean_mid", Box::new(|d: &Draw| Some(mean_functional(&d.measure, d.measure.n_times() / 2)))),
    ];
    for (name, f) in traces {
        let per_chain: Option<Vec<Vec<f64>>> = chains.iter().map(|c| c.draws.iter().map(&f).collect()).collect();
        let Some(per_chain) = per_chain else { continue };
        for (c, t) in chains.iter().zip(&per_chain) {
            match effective_sample_size(t) {
                Ok(e) => println!("diagnostic=ess chain={} trace={name} value={e:.1}", c.chain),
                Err(e) => println!("diagnostic=ess chain={} trace={name} value=na reason=\"{e}\"", c.chain),
            }
        }
        if per_chain.len() >= 2 {
            let n = per_chain.iter().map(Vec::len).min().unwrap_or(0);
            let cut: Vec<Vec<f64>> = per_chain.iter().map(|t| t[..n].to_vec()).collect();
            match gelman_rubin(&cut) {
                Ok(r) => println!("diagnostic=psrf trace={name} value={r:.4}"),
                Err(e) => println!("diagnostic=psrf trace={name} value=na reason=\"{e}\""),
            }
        }
    }
}

fn summarize_cmd(a: &SummarizeArgs) -> Result<u8> {
    if !a.draws.exists() {
        return Err(Error::Data(format!("{}: no such file", a.draws.display())));
    }
    let chains = read_archive_path(&a.draws)?;
    let refs: Vec<&Draw> = chains.iter().flat_map(|c| &c.draws).collect();
    let grid = parse_grid(&a.y_grid, &refs)?;
    let pooled: Vec<Draw> = refs.into_iter().cloned().collect();
    let surface = summarize(&pooled, &grid)?;
    if let Some(p) = &a.surface_csv {
        surface.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.mean_csv {
        surface.write_mean_csv(create(p)?)?;
    }
    if let Some(p) = &a.json {
        surface.write_json(create(p)?)?;
    }
    println!("draws={} chains={} times={} y_points={}", pooled.len(), chains.len(), surface.times.len(), grid.len());
    print_diagnostics(&chains);
    if a.toy_truth {
        let r = coverage_report(&surface, toy_mean, toy_density)?;
        println!(
            "coverage mean_band={:.3} density_band={:.3} median_rmse={:.4} mode_rmse={:.4}",
            r.mean_coverage, r.density_coverage, r.median_rmse, r.mode_rmse
        );
    }
    Ok(0)
}

fn validate(a: &ValidateArgs) -> Result<u8> {
    let opts = ValidateOptions { seed: a.seed, quick: a.quick, n_se: a.tolerance, ..ValidateOptions::default() };
    let report = run_battery(&opts)?;
    let all = report.iter().all(|r| r.pass);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for r in &report {
            println!(
                "check={} status={} {}={:.6} threshold={} detail=\"{}\"",
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                r.kind,
                r.statistic,
                r.threshold,
                r.detail
            );
        }
        println!("summary passed={} total={}", report.iter().filter(|r| r.pass).count(), report.len());
    }
    Ok(if all { 0 } else { 3 })
}
