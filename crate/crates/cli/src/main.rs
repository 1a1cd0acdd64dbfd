use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use solitonlab::asymptotics::write_summary;
use solitonlab::config::ExperimentConfig;
use solitonlab::experiment::{self, DecayAnalysis};
use solitonlab::identities::IdentityReport;
use solitonlab::modulation::verify_modulation_odes;
use solitonlab::series::{fmt17, TimeSeries};
use solitonlab::Error;

#[derive(Parser, Debug)]
#[command(name = "solitonlab", version, about = "Solitary-wave experiments for the cubic NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration; the reference defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for `series/` and `reports/`.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for per-frame transforms (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evolve the configured initial data and record conserved quantities.
    Simulate,
    /// Simulate, then fit modulation parameters at every stored frame.
    FitModulation,
    /// Closed-form spectral identities against quadrature.
    VerifyIdentities,
    /// Distorted Fourier transform roundtrips on the configured grid.
    VerifyDft,
    /// Full asymptotic harness with fitted decay rates.
    DecayReport,
}

/// Exit statuses: 0 pass, 1 check failure, 2 usage/config, 3 numerical.
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Io(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn dir(&self, sub: &str) -> Result<PathBuf, Failure> {
        let d = self.out.join(sub);
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn save_series(&self, s: &TimeSeries) -> Result<(), Failure> {
        let path = self.dir("series")?.join(format!("{}.csv", s.name));
        s.save(&path)?;
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_checks(path: &Path, checks: &[(String, f64, f64, bool)]) -> Result<(), Failure> {
    let mut w = create(path)?;
    writeln!(w, "check,value,bound,pass")?;
    for (name, v, b, p) in checks {
        writeln!(w, "{name},{},{},{p}", fmt17(*v), fmt17(*b))?;
    }
    w.flush()?;
    Ok(())
}

fn write_reports(path: &Path, reports: &[IdentityReport]) -> Result<(), Failure> {
    let mut w = create(path)?;
    IdentityReport::write_csv(reports, &mut w)?;
    w.flush()?;
    Ok(())
}

fn simulate(ctx: &Ctx) -> Result<bool, Failure> {
    ctx.note(format!("simulating to T = {} on n = {}, L = {}", ctx.cfg.t_final, ctx.cfg.n, ctx.cfg.half_width));
    let traj = experiment::simulate(&ctx.cfg)?;
    let cons = experiment::conserved_series(&traj);
    ctx.save_series(&cons)?;
    let final_field = traj.snapshots.last().expect("initial frame is stored");
    let mut w = create(&ctx.dir("series")?.join("final_field.csv"))?;
    writeln!(w, "x,re_psi,im_psi")?;
    for (x, v) in final_field.grid.x().iter().zip(&final_field.values) {
        writeln!(w, "{},{},{}", fmt17(*x), fmt17(v.re), fmt17(v.im))?;
    }
    w.flush()?;

    let mass = cons.column("mass").expect("mass column");
    let m0 = mass[0];
    let drift = mass.iter().fold(0.0f64, |m, v| m.max((v - m0).abs() / m0));
    let clean = traj.clean_until();
    let checks = vec![
        ("mass_relative_drift".to_string(), drift, 1e-12, drift < 1e-12),
        ("boundary_clean_until".to_string(), clean, ctx.cfg.t_final, clean >= *traj.times.last().unwrap()),
    ];
    write_checks(&ctx.dir("reports")?.join("simulate.csv"), &checks)?;
    Ok(checks.iter().all(|c| c.3))
}

fn fit_modulation(ctx: &Ctx) -> Result<bool, Failure> {
    let traj = experiment::simulate(&ctx.cfg)?;
    ctx.note("fitting modulation parameters");
    let series = experiment::fit_modulation(&ctx.cfg, &traj)?;
    let last = series.last().expect("nonempty series").params;
    let mut w = create(&ctx.dir("series")?.join("modulation.csv"))?;
    series.write_csv(&mut w, last.omega, last.p)?;
    w.flush()?;
    if series.states.len() >= 3 {
        let mut r = verify_modulation_odes(&series)?;
        r.name = "modulation_ode_residual".into();
        ctx.save_series(&r)?;
    }
    let worst = series.states.iter().fold(0.0f64, |m, s| m.max(s.newton_residual));
    let tol = 10.0 * ctx.cfg.newton_tol;
    write_checks(
        &ctx.dir("reports")?.join("modulation.csv"),
        &[("newton_residual".to_string(), worst, tol, worst <= tol)],
    )?;
    Ok(worst <= tol)
}

fn verify_identities(ctx: &Ctx) -> Result<bool, Failure> {
    let reports = experiment::verify_identities(ctx.cfg.soliton.omega, ctx.cfg.seed);
    write_reports(&ctx.dir("reports")?.join("identities.csv"), &reports)?;
    for r in reports.iter().filter(|r| !r.pass) {
        ctx.note(format!("FAIL {} (rel {:.2e}, abs {:.2e})", r.name, r.max_rel_err, r.max_abs_err));
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn verify_dft(ctx: &Ctx) -> Result<bool, Failure> {
    let reports = experiment::verify_dft(&ctx.cfg)?;
    write_reports(&ctx.dir("reports")?.join("dft.csv"), &reports)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn write_profile(path: &Path, a: &DecayAnalysis) -> Result<(), Failure> {
    let p = &a.profile;
    let mut w = create(path)?;
    writeln!(w, "xi,re_wplus,im_wplus,re_wminus,im_wminus")?;
    for (m, xi) in p.fgrid.nodes().iter().enumerate() {
        let (a, b) = (p.w_plus[m], p.w_minus[m]);
        writeln!(w, "{},{},{},{},{}", fmt17(*xi), fmt17(a.re), fmt17(a.im), fmt17(b.re), fmt17(b.im))?;
    }
    w.flush()?;
    Ok(())
}

fn decay_report(ctx: &Ctx) -> Result<bool, Failure> {
    ctx.note(format!("simulating to T = {}", ctx.cfg.t_final));
    let traj = experiment::simulate(&ctx.cfg)?;
    ctx.note("running the asymptotic harness");
    let a = experiment::decay_report(&ctx.cfg, &traj)?;
    ctx.save_series(&experiment::conserved_series(&traj))?;
    for s in &a.series {
        ctx.save_series(s)?;
    }
    ctx.save_series(&a.amplitudes.to_series())?;
    let mut w = create(&ctx.dir("series")?.join("modulation.csv"))?;
    a.modulation.write_csv(&mut w, a.omega_bar, a.p_bar)?;
    w.flush()?;
    write_profile(&ctx.dir("series")?.join("w_profile.csv"), &a)?;

    let reports = ctx.dir("reports")?;
    let mut w = create(&reports.join("summary.csv"))?;
    write_summary(&a.fits, &mut w)?;
    w.flush()?;
    write_checks(&reports.join("checks.csv"), &a.checks)?;
    for f in &a.fits {
        ctx.note(format!(
            "{:18} slope {:+.3} ± {:.3} on [{}, {}]  {}",
            f.name,
            f.slope,
            f.stderr,
            f.t_min,
            f.t_max,
            if f.pass { "pass" } else { "FAIL" }
        ));
    }
    for c in &a.checks {
        ctx.note(format!("{:18} {:.3e} (bound {:.3e})  {}", c.0, c.1, c.2, if c.3 { "pass" } else { "FAIL" }));
    }
    Ok(a.all_pass())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", p.display())),
            other => Failure::from(other),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let ctx = Ctx {
        cfg,
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Simulate => simulate(&ctx),
        Command::FitModulation => fit_modulation(&ctx),
        Command::VerifyIdentities => verify_identities(&ctx),
        Command::VerifyDft => verify_dft(&ctx),
        Command::DecayReport => decay_report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
