mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kgfock::conserved::{argmax_point, conservation_scan, point_recovery};
use kgfock::dynamics::{energy, solve_at_times, NonlinearitySpec};
use kgfock::io::write_path;
use kgfock::majorant::{majorant_of, MajorantSeries};
use kgfock::spectral::SobolevChoice;
use kgfock::trees::enumerate_trees;
use kgfock::{CauchyPair, LinearSolution, SpectralField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use config::{Config, PhiChoice};

#[derive(Parser)]
#[command(name = "kgfock", version, about = "Fock-space conserved quantities for nonlinear Klein-Gordon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write a matplotlib script for the drift table.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the nonlinear equation and store the path.
    Simulate,
    /// Conservation scan of the series functional against I at time 0.
    Conserve,
    /// Majorant certificate for the configured time and data size.
    Certify,
    /// Enumerate the diagrams up to the configured order.
    Trees,
    /// Recover u and its time derivative at a point.
    Recover,
    /// Quick internal checks.
    Selftest,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn classify(e: anyhow::Error) -> Failure {
        match e.downcast_ref::<kgfock::Error>() {
            Some(k) if k.is_numerical() => Failure::Numerical(e),
            Some(kgfock::Error::Io(_)) => Failure::Other(e),
            Some(_) => Failure::Config(e),
            None if e.downcast_ref::<std::io::Error>().is_some() => Failure::Other(e),
            None => Failure::Config(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            let (e, code) = match f {
                Failure::Config(e) => (e, 2),
                Failure::Numerical(e) => (e, 3),
                Failure::Other(e) => (e, 1),
            };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<ExitCode, Failure> {
    if let Command::Selftest = cli.command {
        let report = kgfock::selftest::run(cli.seed);
        for c in &report.checks {
            println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        println!("{} passed, {} failed", report.passed(), report.failed());
        return Ok(if report.failed() == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow::anyhow!("--config is required")))?;
    let cfg = Config::load(path).map_err(Failure::Config)?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))
        .map_err(Failure::Other)?;
    let result = match cli.command {
        Command::Simulate => simulate(&cfg, cli),
        Command::Conserve => conserve(&cfg, cli),
        Command::Certify => certify(&cfg, cli),
        Command::Trees => trees(&cfg, cli),
        Command::Recover => recover(&cfg, cli),
        Command::Selftest => unreachable!(),
    };
    result.map(|_| ExitCode::SUCCESS).map_err(Failure::classify)
}

/// d0 then φ, both drawn from the seeded stream.
fn initial_data(cfg: &Config, seed: u64) -> Result<(CauchyPair, LinearSolution)> {
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = CauchyPair::random(grid, &mut rng, cfg.experiment.d0_norm);
    let x = cfg.experiment.x.unwrap_or_else(|| argmax_point(&d0));
    let zero = SpectralField::zeros(grid);
    let phi = match cfg.experiment.phi {
        PhiChoice::Random => LinearSolution::new(CauchyPair::random(grid, &mut rng, 1.0)),
        PhiChoice::DeltaU => LinearSolution::new(CauchyPair::new(zero, SpectralField::dirichlet_delta(grid, x))?),
        PhiChoice::DeltaDtu => {
            LinearSolution::new(CauchyPair::new(SpectralField::dirichlet_delta(grid, x).scale(-1.0), zero)?)
        }
    };
    Ok((d0, phi))
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    let p = out.join(name);
    fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
}

fn simulate(cfg: &Config, cli: &Cli) -> Result<()> {
    let (d0, _) = initial_data(cfg, cli.seed)?;
    let v = cfg.v();
    let solver = cfg.solver();
    let path = solve_at_times(&d0, &v, &[cfg.experiment.t_end], &solver, true)?;
    write_path(&cli.out, "path", &path)?;
    let e0 = energy(&d0, &v, solver.dealias)?;
    let e1 = energy(path.last(), &v, solver.dealias)?;
    // observation only: the majorant controls functional norms, not the solution
    let envelope = majorant_of(&v, &cfg.grid()?, SobolevChoice::ModeSum)?.flow(cfg.experiment.t_end, d0.norm()).value();
    let max_norm = path.states.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let summary = json!({
        "config": cfg,
        "seed": cli.seed,
        "steps": path.times.len() - 1,
        "residual": path.residual(&v, solver.dealias)?,
        "energy_start": e0,
        "energy_end": e1,
        "energy_drift": (e1 - e0).abs(),
        "max_pair_norm": max_norm,
        "majorant_envelope": envelope,
    });
    write(&cli.out, "simulate.json", &serde_json::to_string_pretty(&summary)?)?;
    println!("wrote {} states to {}", path.times.len(), cli.out.display());
    Ok(())
}

const PLOT_SCRIPT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("drift.csv")))
t = [float(r["t"]) for r in rows]
drift = [max(float(r["rel_drift"]), 1e-18) for r in rows]
plt.semilogy(t, drift, "o-")
plt.xlabel("t")
plt.ylabel("relative drift")
plt.savefig("drift.png", dpi=150)
"#;

fn conserve(cfg: &Config, cli: &Cli) -> Result<()> {
    let (d0, phi) = initial_data(cfg, cli.seed)?;
    let table = conservation_scan(&d0, &phi, &cfg.v(), &cfg.experiment.times, &cfg.series(), &cfg.solver())?;
    write(&cli.out, "drift.csv", &table.to_csv())?;
    let summary = json!({
        "config": cfg,
        "seed": cli.seed,
        "max_rel_drift": table.max_rel_drift,
        "all_certified": table.rows.iter().all(|r| r.certified),
        "rows": table.rows,
    });
    write(&cli.out, "conserve.json", &serde_json::to_string_pretty(&summary)?)?;
    if cli.plot {
        write(&cli.out, "plot_drift.py", PLOT_SCRIPT)?;
    }
    println!("max relative drift {:.3e}", table.max_rel_drift);
    Ok(())
}

fn certify(cfg: &Config, cli: &Cli) -> Result<()> {
    let x = match &cfg.majorant {
        Some(m) => MajorantSeries::new(m.coeffs.clone(), f64::INFINITY)?,
        None => majorant_of(&cfg.v(), &cfg.grid()?, SobolevChoice::ModeSum)?,
    };
    let e = &cfg.experiment;
    let rep = x.admissible(e.t_end, e.d0_norm, e.r_budget);
    let report = json!({
        "t": rep.t,
        "kappa": rep.kappa,
        "r0": rep.r0,
        "e_tX_kappa": rep.e_tx_kappa,
        "ok": rep.ok,
        "theta": rep.theta,
        "majorant": x.coeffs,
    });
    let text = serde_json::to_string_pretty(&report)?;
    write(&cli.out, "certify.json", &text)?;
    println!("{text}");
    Ok(())
}

fn trees(cfg: &Config, cli: &Cli) -> Result<()> {
    let v = cfg.v();
    let n = cfg.grid()?.n;
    let mut all = Vec::new();
    let mut art = String::new();
    for k in 0..=cfg.series.order {
        for t in enumerate_trees(k, &v, n) {
            art.push_str(&format!("order {k}\n{}\n", t.art(&v, n)));
            all.push(json!({
                "order": k,
                "shape": t.child,
                "leaves": t.leaves,
                "sign": t.sign,
                "symmetry": t.symmetry,
            }));
        }
    }
    write(&cli.out, "trees.json", &serde_json::to_string_pretty(&all)?)?;
    write(&cli.out, "trees.txt", &art)?;
    print!("{art}");
    Ok(())
}

fn recover(cfg: &Config, cli: &Cli) -> Result<()> {
    let (d0, _) = initial_data(cfg, cli.seed)?;
    let x = cfg.experiment.x.unwrap_or_else(|| argmax_point(&d0));
    // V = 0 isolates the grid resolution error of the δ data from series truncation
    let free = point_recovery(&d0, &NonlinearitySpec::zero(), cfg.experiment.t_end, x, &cfg.series(), &cfg.solver())?;
    let rec = point_recovery(&d0, &cfg.v(), cfg.experiment.t_end, x, &cfg.series(), &cfg.solver())?;
    let text = serde_json::to_string_pretty(
        &json!({ "config": cfg, "seed": cli.seed, "resolution": free, "recovery": rec }),
    )?;
    write(&cli.out, "recover.json", &text)?;
    println!(
        "u: {:.6e} vs {:.6e} (rel {:.2e}); dtu: {:.6e} vs {:.6e} (rel {:.2e})",
        rec.u_rec, rec.u_true, rec.rel_err_u, rec.dtu_rec, rec.dtu_true, rec.rel_err_dtu
    );
    Ok(())
}
