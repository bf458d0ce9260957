use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sar_core::error::Result;
use sar_core::milp::SolveStatus;
use sar_core::pipeline::{self, RunContext};

#[derive(Parser)]
#[command(name = "sar-locate", version, about = "SAR zonal demand forecasting and asset location")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; overrides the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the manifest.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic event CSV from the manifest's generator config.
    Generate(Common),
    /// Validate and clean the event CSV.
    Ingest(Common),
    /// Classify events and cluster them into zones.
    Zone(Common),
    /// Fit count distributions and response models per zone.
    Fit(Common),
    /// Monte Carlo demand simulation and percentile scenarios.
    Simulate(Common),
    /// Solve the location model for the preset's first weight pair.
    Solve(Common),
    /// Sweep the preset's weight grid.
    Pareto(Common),
    /// Evaluate one scenario's locations under another's demand.
    Crosscheck(Common),
    /// Every stage from ingest to crosscheck.
    Run(Common),
}

fn run(cmd: Command) -> Result<()> {
    let (Command::Generate(c)
    | Command::Ingest(c)
    | Command::Zone(c)
    | Command::Fit(c)
    | Command::Simulate(c)
    | Command::Solve(c)
    | Command::Pareto(c)
    | Command::Crosscheck(c)
    | Command::Run(c)) = &cmd;
    let ctx = RunContext::load(&c.manifest, c.out.as_deref(), c.seed)?;
    match cmd {
        Command::Generate(_) => {
            let path = pipeline::cmd_generate(&ctx)?;
            println!("wrote {}", path.display());
        }
        Command::Ingest(_) => ingest(&ctx)?,
        Command::Zone(_) => zone(&ctx)?,
        Command::Fit(_) => fit(&ctx)?,
        Command::Simulate(_) => simulate(&ctx)?,
        Command::Solve(_) => solve(&ctx)?,
        Command::Pareto(_) => pareto(&ctx)?,
        Command::Crosscheck(_) => crosscheck(&ctx)?,
        Command::Run(_) => {
            ingest(&ctx)?;
            zone(&ctx)?;
            fit(&ctx)?;
            simulate(&ctx)?;
            solve(&ctx)?;
            pareto(&ctx)?;
            crosscheck(&ctx)?;
        }
    }
    Ok(())
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    eprintln!("{stage}: {:.2}s", start.elapsed().as_secs_f64());
    out
}

fn ingest(ctx: &RunContext) -> Result<()> {
    let out = timed("ingest", || pipeline::cmd_ingest(ctx))?;
    let r = &out.report;
    println!("Initial Data Set         {:>6}", r.initial);
    println!("Removed MEDICO           {:>6}", r.removed_medico);
    println!("Removed missing GPS      {:>6}", r.removed_no_gps);
    println!("Removed outside region   {:>6}", r.removed_outside_region);
    println!("Final Data Set           {:>6}", r.retained);
    println!("Retained                 {:>6}", out.retained_percent);
    if !out.rejected_rows.is_empty() {
        println!("Rejected rows            {:>6}", out.rejected_rows.len());
    }
    Ok(())
}

fn zone(ctx: &RunContext) -> Result<()> {
    let out = timed("zone", || pipeline::cmd_zone(ctx))?;
    for z in &out.zones {
        println!(
            "{:<10} {:<28} {:>5} events  lat {:>8.4}  lon {:>9.4}",
            z.id,
            z.category.to_string(),
            z.members.len(),
            z.superaccident.lat_deg(),
            z.superaccident.lon_deg_east()
        );
    }
    Ok(())
}

fn fit(ctx: &RunContext) -> Result<()> {
    let out = timed("fit", || pipeline::cmd_fit(ctx))?;
    for f in &out.fits {
        let d = &f.distribution;
        let gp = d
            .gamma_poisson
            .map_or("--".to_string(), |(a, b)| format!("alpha={a:.3} beta={b:.3}"));
        println!(
            "{:<10} lambda={:>7.3}  p_poisson={}  {}  p_gp={}",
            f.zone_id,
            d.poisson_lambda,
            fmt_p(d.gof_p_poisson),
            gp,
            fmt_p(d.gof_p_gamma_poisson)
        );
    }
    Ok(())
}

fn fmt_p(p: Option<f64>) -> String {
    p.map_or("--".into(), |p| format!("{p:.4}"))
}

fn simulate(ctx: &RunContext) -> Result<()> {
    let (summary, scenarios) = timed("simulate", || pipeline::cmd_simulate(ctx))?;
    println!("{} months, {} zones", summary.months, summary.zones.len());
    for s in &scenarios.scenarios {
        let total: u32 = s.levels.values().flat_map(|l| l.values()).sum();
        println!("p{:<3} total demand {total}", s.percentile);
    }
    Ok(())
}

fn solve(ctx: &RunContext) -> Result<()> {
    let out = timed("solve", || pipeline::cmd_solve(ctx))?;
    let s = &out.solution;
    println!(
        "{:?} w=({}, {}) f1={:.3} f2={:.3} nodes={}",
        s.status, s.weights.0, s.weights.1, s.f1, s.f2, s.stats.nodes
    );
    if s.status == SolveStatus::BoundedGapReached {
        println!("gap {:.3e}", s.bound_gap);
    }
    Ok(())
}

fn pareto(ctx: &RunContext) -> Result<()> {
    let out = timed("pareto", || pipeline::cmd_pareto(ctx))?;
    println!("{:>8} {:>8} {:>12} {:>12} dominated", "w1", "w2", "f1", "f2");
    for e in &out.front.entries {
        println!("{:>8} {:>8} {:>12.3} {:>12.3} {}", e.w1, e.w2, e.f1, e.f2, e.dominated);
    }
    println!("{} non-dominated points", out.front.points.len());
    Ok(())
}

fn crosscheck(ctx: &RunContext) -> Result<()> {
    let out = timed("crosscheck", || pipeline::cmd_crosscheck(ctx))?;
    for e in &out.evaluations {
        let c = &e.cross;
        match (c.f2, e.direct_f2) {
            (Some(f2), Some(d)) => println!(
                "w=({}, {}) fixed f2={f2:.3} direct f2={d:.3} robust={}",
                c.weights.0, c.weights.1, e.robust
            ),
            _ => println!(
                "w=({}, {}) infeasible: {}",
                c.weights.0,
                c.weights.1,
                c.infeasibility.as_deref().unwrap_or("no direct solution")
            ),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
