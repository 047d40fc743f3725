//! `chainfrac`: runs the chain experiments described by a JSON configuration
//! and writes CSV/JSON results under `--out`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainfrac_core::config::Resolved;
use chainfrac_core::continuum::{crack_predictor_f, estimate_inf_h, ArgmaxComponent};
use chainfrac_core::discrete::{minimize_hn, MinimizeReport};
use chainfrac_core::effective::EffectiveProfile;
use chainfrac_core::gamma_dev::{build_competitors, run_sweep};
use chainfrac_core::potentials::validate_axioms;
use chainfrac_core::{parse_config, ChainState, ContinuumProfile, Error, ExperimentConfig};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "chainfrac",
    version,
    about = "Lennard-Jones chain experiments: effective potential, minimizers, limits and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; defaults to the configuration's output_dir, then ".".
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate J0, its convex envelope and the splitter (effective.csv, effective.json).
    Effective(Common),
    /// Minimize H_n at the largest n of n_list (minimize.csv, minimize_report.json).
    Minimize(Common),
    /// Estimate inf H and its minimizer (continuum_min.json).
    ContinuumMin(Common),
    /// Cumulative force F and its argmax set M (cracks.csv, cracks_M.json).
    PredictCracks(Common),
    /// Even/odd competitors of the minimizer at the largest n (competitors.json).
    Competitors(Common),
    /// Compactness and lower-bound sweep over n_list (sweep.csv, sweep_summary.json).
    Sweep(Common),
    /// Check the structural assumptions on the potentials (axioms.json).
    ValidateAxioms(Common),
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Domain(format!("CSV error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Domain(format!("JSON error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHAINFRAC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

struct Context {
    config: ExperimentConfig,
    out: PathBuf,
}

impl Context {
    fn open(common: &Common) -> Result<Self, Failure> {
        let config = parse_config(&common.config).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", common.config.display())),
            other => Failure::Usage(format!("{}: {other}", common.config.display())),
        })?;
        if let Some(jobs) = common.jobs {
            if jobs == 0 {
                return Err(Failure::Usage("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| Failure::Domain(format!("cannot start {jobs} workers: {e}")))?;
        }
        let out = common.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out)?;
        Ok(Self { config, out })
    }

    fn effective(&self) -> Result<EffectiveProfile, Failure> {
        info!("building the effective profile");
        Ok(self.config.build_effective()?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn largest_n(&self) -> Result<usize, Failure> {
        self.config.n_list.iter().copied().max().ok_or_else(|| Failure::Usage("n_list is empty".into()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    Ok(())
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Outcome
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Effective(c) => effective(&Context::open(&c)?),
        Command::Minimize(c) => minimize(&Context::open(&c)?),
        Command::ContinuumMin(c) => continuum_min(&Context::open(&c)?),
        Command::PredictCracks(c) => predict_cracks(&Context::open(&c)?),
        Command::Competitors(c) => competitors(&Context::open(&c)?),
        Command::Sweep(c) => sweep(&Context::open(&c)?),
        Command::ValidateAxioms(c) => validate(&Context::open(&c)?),
    }
}

fn effective(ctx: &Context) -> Outcome {
    let p = ctx.effective()?;
    let rows = p
        .grid()
        .iter()
        .zip(p.j0_values())
        .zip(p.splitter())
        .map(|((&z, &j0), &b)| [z.to_string(), j0.to_string(), p.envelope(z).to_string(), b.to_string()]);
    write_csv(&ctx.path("effective.csv"), &["z", "j0", "j0_star_star", "splitter_b"], rows)?;
    write_json(&ctx.path("effective.json"), &p)?;
    println!("gamma = {}\ngamma_c = {}\nJ0(gamma) = {}", p.gamma(), p.gamma_c(), p.j0_at_gamma());
    Ok(())
}

fn validate(ctx: &Context) -> Outcome {
    let p = ctx.effective()?;
    let report = validate_axioms(&ctx.config.potential, &p);
    print!("{report}");
    write_json(&ctx.path("axioms.json"), &report)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Domain("axiom validation failed".into()))
    }
}

/// Builds the profile and fails with the printed report when an axiom does
/// not hold.
fn checked_effective(ctx: &Context) -> Result<(EffectiveProfile, Resolved), Failure> {
    let p = ctx.effective()?;
    let report = validate_axioms(&ctx.config.potential, &p);
    if !report.all_passed() {
        print!("{report}");
        return Err(Failure::Domain("axiom validation failed".into()));
    }
    let r = ctx.config.resolve(&p)?;
    Ok((p, r))
}

/// Point components of the argmax set of F for the affine profile, used as
/// crack seeds.
fn crack_seeds(ctx: &Context, r: &Resolved) -> Vec<f64> {
    let pred = crack_predictor_f(&r.load, &ContinuumProfile::affine(r.ell), &ctx.config.continuum.cracks);
    pred.argmax.iter().filter(|c| c.is_point()).map(|c| c.start).collect()
}

fn minimize_at(ctx: &Context, p: &EffectiveProfile, r: &Resolved, n: usize) -> Result<MinimizeReport, Failure> {
    let mut opts = ctx.config.minimize_opts();
    opts.slope_cap = Some(p.gamma());
    opts.crack_sites = crack_seeds(ctx, r);
    let start = ChainState::affine(n, r.ell, r.theta0, r.theta1);
    info!("minimizing H_n at n = {n}");
    Ok(minimize_hn(&start, &ctx.config.potential, &r.load, &opts)?)
}

fn minimize(ctx: &Context) -> Outcome {
    let (p, r) = checked_effective(ctx)?;
    let n = ctx.largest_n()?;
    let report = minimize_at(ctx, &p, &r, n)?;
    let st = &report.state;
    let slopes = st.slopes();
    let rows = (0..=n).map(|i| {
        let slope = slopes.get(i).map_or(String::new(), f64::to_string);
        [i.to_string(), (i as f64 / n as f64).to_string(), st.u[i].to_string(), slope]
    });
    write_csv(&ctx.path("minimize.csv"), &["i", "x", "u", "slope"], rows)?;
    write_json(&ctx.path("minimize_report.json"), &report)?;
    println!("n = {n}\nenergy = {}\ntermination = {:?}", report.energy, report.termination);
    Ok(())
}

fn continuum_min(ctx: &Context) -> Outcome {
    let (p, r) = checked_effective(ctx)?;
    let est = estimate_inf_h(&p, &r.load, r.ell, &ctx.config.continuum)?;
    write_json(&ctx.path("continuum_min.json"), &est)?;
    println!("inf_h = {}", est.value);
    Ok(())
}

#[derive(Serialize)]
struct ArgmaxDocument<'a> {
    max_f: f64,
    argmax: &'a [ArgmaxComponent],
}

fn predict_cracks(ctx: &Context) -> Outcome {
    let p = ctx.effective()?;
    let r = ctx.config.resolve(&p)?;
    let pred = crack_predictor_f(&r.load, &ContinuumProfile::affine(r.ell), &ctx.config.continuum.cracks);
    let rows = pred.x.iter().zip(&pred.f).map(|(x, f)| [x.to_string(), f.to_string()]);
    write_csv(&ctx.path("cracks.csv"), &["x", "F"], rows)?;
    write_json(&ctx.path("cracks_M.json"), &ArgmaxDocument { max_f: pred.max_f, argmax: &pred.argmax })?;
    println!("max F = {}", pred.max_f);
    for c in &pred.argmax {
        println!("M component [{}, {}]", c.start, c.end);
    }
    Ok(())
}

fn competitors(ctx: &Context) -> Outcome {
    let (p, r) = checked_effective(ctx)?;
    let n = ctx.largest_n()?;
    let report = minimize_at(ctx, &p, &r, n)?;
    let pair = build_competitors(&report.state, p.gamma())?;
    write_json(&ctx.path("competitors.json"), &pair)?;
    println!("n = {n}\ncloseness = {}", pair.closeness);
    Ok(())
}

fn sweep(ctx: &Context) -> Outcome {
    let (p, _) = checked_effective(ctx)?;
    if ctx.config.n_list.is_empty() {
        return Err(Failure::Usage("n_list is empty".into()));
    }
    let cfg = ctx.config.sweep_config(&p)?;
    let res = run_sweep(&cfg, &p)?;
    let header = res.csv_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.path("sweep.csv"), &header, res.csv_records())?;
    write_json(&ctx.path("sweep_summary.json"), &res.summary)?;
    let s = &res.summary;
    println!("completed n = {:?}", s.n_completed);
    if let Some(v) = s.inf_h {
        println!("inf_h = {v}");
    }
    println!("degenerate = {}", s.degenerate);
    if !s.failures.is_empty() {
        for f in &s.failures {
            eprintln!("n = {}: {}", f.n, f.error);
        }
        return Err(Failure::Domain(format!("{} of {} sizes failed", s.failures.len(), ctx.config.n_list.len())));
    }
    Ok(())
}
