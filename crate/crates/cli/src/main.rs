use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use basins_core::analysis::{self, BenchmarkReport};
use basins_core::catalog;
use basins_core::engine::resolve_dt;
use basins_core::io::{self, BasinsHeader};
use basins_core::{basins_of_attraction, refine_with_attractors_opts, Error, Grid, RefineOptions};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

mod config;
mod render;

use config::{Mode, Resolved};
use render::Palette;

#[derive(Parser)]
#[command(name = "basins", version, about = "Attractors and basins of attraction on a state-space grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured mode (recurrence by default) and write all artifacts.
    Run(RunArgs),
    /// Label a grid by proximity to attractors found in an earlier run.
    Refine(RunArgs),
    /// Time the recurrence sweep against the fixed-point baseline.
    Benchmark(RunArgs),
    /// Render a 2D slice of a basin array as a binary PPM image.
    Render(RenderArgs),
    /// List the built-in systems with their parameters.
    ListSystems {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for refinement and the baseline (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write basins.csv with one row per cell.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// A basins.bin file with its .json header next to it.
    #[arg(long)]
    input: PathBuf,
    /// One entry per axis, `:` for the two displayed axes, e.g. `:,:,50`.
    #[arg(long)]
    slice: Option<String>,
    #[arg(long, value_enum, default_value_t = Palette::Categorical)]
    palette: Palette,
    #[arg(long)]
    output: PathBuf,
}

/// Files written by this invocation, removed again if it fails.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        self.written.push(path.clone());
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }

    fn json(&mut self, path: PathBuf, value: &impl serde::Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(path, text.as_bytes())
    }

    fn basins(&mut self, dir: &Path, header: &BasinsHeader, labels: &[i32]) -> Result<()> {
        let bin = dir.join("basins.bin");
        self.written.push(bin.clone());
        self.written.push(io::header_path(&bin));
        io::write_basins(&bin, header, labels)?;
        let (h, back) = io::read_basins(&bin)?;
        if h != *header || back != labels {
            bail!("read-back of {} does not match what was written", bin.display());
        }
        Ok(())
    }

    fn remove_all(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut outputs = Outputs::default();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, &mut outputs),
        Command::Refine(a) => cmd_refine(&a, &mut outputs),
        Command::Benchmark(a) => cmd_benchmark(&a, &mut outputs),
        Command::Render(a) => cmd_render(&a, &mut outputs),
        Command::ListSystems { json } => list_systems(json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outputs.remove_all();
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for invalid input, 3 for numerical failure, 1 for anything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Config(_) | Error::Contract(_) | Error::Format(_) => 2,
                Error::AutoDtFailed(_) | Error::Consistency(_) => 3,
                Error::Io(_) => 1,
            };
        }
        if cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn resolve(args: &RunArgs) -> Result<(Resolved, PathBuf)> {
    let cfg = config::load(&args.config)?;
    let resolved = cfg.resolve(&args.config, args.seed)?;
    let out = args
        .out
        .clone()
        .or_else(|| {
            resolved
                .config
                .output_dir
                .as_ref()
                .map(|p| resolved.resolve_path(p))
        })
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok((resolved, out))
}

fn header_for(r: &Resolved, grid: &Grid, attractor_count: usize, dt: f64) -> BasinsHeader {
    let mut h = BasinsHeader::new(grid, attractor_count, r.system.name());
    h.system_params = r.system_params.clone();
    h.recurrence = Some(r.params);
    h.dt = Some(dt);
    h
}

fn metadata(
    command: &str,
    r: &Resolved,
    grid: &Grid,
    dt: f64,
    wall_time_s: f64,
    extra: serde_json::Value,
) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "system": r.system.name(),
        "system_params": r.system_params,
        "wrapper": r.system.wrapper(),
        "projection": r.system.projection(),
        "fill": r.system.fill(),
        "grid": grid.axes(),
        "grid_source": r.grid_source,
        "recurrence": r.params,
        "dt": dt,
        "seed": r.params.seed,
        "mode": r.config.mode,
        "wall_time_s": wall_time_s,
        "details": extra,
    })
}

fn write_common(
    outputs: &mut Outputs,
    dir: &Path,
    header: &BasinsHeader,
    grid: &Grid,
    labels: &[i32],
    csv: bool,
) -> Result<()> {
    outputs.basins(dir, header, labels)?;
    outputs.json(dir.join("fractions.json"), &analysis::basin_fractions(labels)?)?;
    if csv {
        let path = dir.join("basins.csv");
        outputs.written.push(path.clone());
        io::write_basins_csv(&path, grid, labels)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, outputs: &mut Outputs) -> Result<()> {
    let (r, dir) = resolve(args)?;
    match &r.config.mode {
        Mode::Recurrence => {}
        Mode::Naive { .. } => return run_naive(args, &r, &dir, outputs),
        Mode::Refine { .. } => return refine(args, &r, &dir, outputs),
    }
    let start = Instant::now();
    let result = basins_of_attraction(&r.system, &r.grid, &r.params)?;
    let wall = start.elapsed().as_secs_f64();
    result.attractors.validate()?;

    let header = header_for(&r, &r.grid, result.attractor_count(), result.dt);
    write_common(outputs, &dir, &header, &r.grid, &result.basins, args.csv)?;
    let att_path = dir.join("attractors.csv");
    outputs.written.push(att_path.clone());
    io::write_attractors_csv(&att_path, &result.attractors)?;
    let extra = json!({
        "attractor_count": result.attractor_count(),
        "iterations_used": result.iterations_used,
        "warnings": result.warnings,
    });
    outputs.json(dir.join("metadata.json"), &metadata("run", &r, &r.grid, result.dt, wall, extra))?;
    println!(
        "{} attractors on {} cells in {wall:.2} s, written to {}",
        result.attractor_count(),
        r.grid.len(),
        dir.display()
    );
    Ok(())
}

fn run_naive(args: &RunArgs, r: &Resolved, dir: &Path, outputs: &mut Outputs) -> Result<()> {
    let fixed_points = r.fixed_points()?;
    let mut settings = r.naive_settings();
    settings.threads = args.threads;
    let dt = resolve_dt(&r.system, &r.grid, &r.params)?;
    let start = Instant::now();
    let labels =
        analysis::naive_basins_fixed_points(&r.system, &r.grid, &fixed_points, &r.params, &settings)?;
    let wall = start.elapsed().as_secs_f64();
    let header = header_for(r, &r.grid, fixed_points.len(), dt);
    write_common(outputs, dir, &header, &r.grid, &labels, args.csv)?;
    let extra = json!({ "fixed_points": fixed_points, "threads": args.threads });
    outputs.json(dir.join("metadata.json"), &metadata("run", r, &r.grid, dt, wall, extra))?;
    println!("baseline labelled {} cells in {wall:.2} s", r.grid.len());
    Ok(())
}

fn cmd_refine(args: &RunArgs, outputs: &mut Outputs) -> Result<()> {
    let (r, dir) = resolve(args)?;
    if !matches!(r.config.mode, Mode::Refine { .. }) {
        bail!(Error::Config("refine needs a config with mode.type = \"refine\"".into()));
    }
    refine(args, &r, &dir, outputs)
}

fn refine(args: &RunArgs, r: &Resolved, dir: &Path, outputs: &mut Outputs) -> Result<()> {
    let Mode::Refine { attractors, epsilon } = &r.config.mode else {
        unreachable!("caller checked the mode");
    };
    let att_path = r.resolve_path(attractors);
    let store = io::read_attractors_csv(&att_path)
        .with_context(|| format!("reading {}", att_path.display()))?;
    if store.is_empty() {
        bail!(Error::Config(format!("{} lists no attractors", att_path.display())));
    }
    // the coarse run's header sits next to its attractors
    let coarse = io::read_header(&att_path.with_file_name("basins.bin"))
        .ok()
        .and_then(|h| h.grid().ok());
    let epsilon = match (epsilon, &coarse) {
        (Some(e), _) => *e,
        (None, Some(g)) => g.max_step(),
        (None, None) => bail!(Error::Config(
            "mode.epsilon is required when no basins.json accompanies the attractors file".into()
        )),
    };
    let opts = RefineOptions {
        escape_grid: coarse.filter(|g| g.dimension() == r.grid.dimension()),
        threads: args.threads,
    };
    let dt = resolve_dt(&r.system, &r.grid, &r.params)?;
    let start = Instant::now();
    let labels = refine_with_attractors_opts(&r.system, &r.grid, &store, epsilon, &r.params, &opts)?;
    let wall = start.elapsed().as_secs_f64();

    let header = header_for(r, &r.grid, store.len(), dt);
    write_common(outputs, dir, &header, &r.grid, &labels, args.csv)?;
    let copy = dir.join("attractors.csv");
    if copy != att_path {
        outputs.written.push(copy.clone());
        io::write_attractors_csv(&copy, &store)?;
    }
    let extra = json!({
        "epsilon": epsilon,
        "attractors_file": att_path,
        "escape_grid": opts.escape_grid.as_ref().map(Grid::axes),
        "threads": args.threads,
    });
    outputs.json(dir.join("metadata.json"), &metadata("refine", r, &r.grid, dt, wall, extra))?;
    println!("refined {} cells in {wall:.2} s (epsilon {epsilon})", r.grid.len());
    Ok(())
}

fn cmd_benchmark(args: &RunArgs, outputs: &mut Outputs) -> Result<()> {
    let (r, dir) = resolve(args)?;
    let fixed_points = r.fixed_points()?;
    let mut settings = r.naive_settings();
    settings.threads = args.threads;
    let dt = resolve_dt(&r.system, &r.grid, &r.params)?;
    let start = Instant::now();
    let (rec, naive): (BenchmarkReport, BenchmarkReport) =
        analysis::benchmark_compare(&r.system, &r.grid, &r.params, &fixed_points, &settings)?;
    let wall = start.elapsed().as_secs_f64();
    outputs.json(dir.join("benchmark.json"), &json!({ "recurrence": rec, "naive": naive }))?;
    let extra = json!({ "fixed_points": fixed_points, "threads": args.threads });
    outputs.json(dir.join("metadata.json"), &metadata("benchmark", &r, &r.grid, dt, wall, extra))?;
    println!(
        "recurrence {:.2} s, baseline {:.2} s, agreement {:.4}",
        rec.wall_time_s, naive.wall_time_s, rec.agreement
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs, outputs: &mut Outputs) -> Result<()> {
    let (header, labels) = io::read_basins(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let grid = header.grid()?;
    let shape = grid.shape();
    let slice = match &args.slice {
        Some(spec) => render::parse_slice(spec, &shape)?,
        None if shape.len() == 2 => render::default_slice(&shape),
        None => bail!(Error::Config(format!(
            "--slice is required for {}-dimensional arrays",
            shape.len()
        ))),
    };
    let image = render::render_ppm(&grid, &labels, &slice, args.palette);
    outputs.write(args.output.clone(), &image)?;
    Ok(())
}

fn list_systems(as_json: bool) -> Result<()> {
    let mut listing = Vec::new();
    for e in catalog::entries() {
        let s = catalog::default_scenario(e.name)?;
        listing.push(json!({
            "name": e.name,
            "description": e.description,
            "params": e.params.iter().map(|(k, v)| json!({ "name": k, "default": v })).collect::<Vec<_>>(),
            "scenario_grid": s.grid.axes(),
            "grid_source": s.grid_source,
            "notes": s.notes,
        }));
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&listing)?);
        return Ok(());
    }
    for e in catalog::entries() {
        let s = catalog::default_scenario(e.name)?;
        let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let source = match s.grid_source {
            catalog::GridSource::Reference => "reference grid",
            catalog::GridSource::ImplementationChosen => "implementation-chosen grid",
        };
        println!("{:<18} {}", e.name, e.description);
        println!("{:<18} params: {}", "", params.join(", "));
        println!("{:<18} default grid {:?} ({source})", "", s.grid.shape());
    }
    Ok(())
}
