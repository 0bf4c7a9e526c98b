//! `corrosim` — run, calibrate and probe magnesium biodegradation
//! simulations from TOML configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrosim_core::{
    export_csv, export_vtk, load_config, optimize, probe_line, read_reference_csv, read_vtk,
    run_simulation_with, stefan_alpha, stefan_front, CalibrationProblem, CoreError, Result,
    SimConfig, StefanParams, Unit,
};

#[derive(Parser)]
#[command(name = "corrosim", version, about = "Magnesium biodegradation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; writes the observable CSV and VTK snapshots.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Assert per-step invariants (slower).
        #[arg(long)]
        check: bool,
        /// Write VTK snapshots as ASCII instead of binary.
        #[arg(long)]
        ascii_vtk: bool,
    },
    /// Calibrate free parameters against a reference hydrogen curve.
    Calibrate {
        config: PathBuf,
        /// Two-column CSV: time_h, hydrogen_ml.
        reference: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print the 1D front coefficient and the analytic front-position table.
    Stefan1d { config: PathBuf },
    /// Sample fields of a VTK snapshot along a line; writes probe.csv.
    Probe {
        config: PathBuf,
        snapshot: PathBuf,
        /// Start point as x,y,z in mm.
        #[arg(long, value_parser = parse_point)]
        from: Point,
        /// End point as x,y,z in mm.
        #[arg(long, value_parser = parse_point)]
        to: Point,
        /// Number of samples along the line.
        #[arg(short, default_value_t = 50)]
        n: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Clone, Copy, Debug)]
struct Point([f64; 3]);

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z got `{s}`"));
    }
    let mut p = [0.0; 3];
    for (i, t) in parts.iter().enumerate() {
        p[i] = t
            .trim()
            .parse()
            .map_err(|_| format!("bad coordinate `{t}` in `{s}`"))?;
    }
    Ok(Point(p))
}

fn load(config: &Path, seed: Option<u64>) -> Result<SimConfig> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CoreError::io(format!("creating {}", dir.display()), e))
}

fn cmd_simulate(config: &Path, common: &CommonOpts, check: bool, ascii_vtk: bool) -> Result<()> {
    let mut cfg = load(config, common.seed)?;
    if ascii_vtk {
        cfg.ascii_vtk = true;
    }
    ensure_dir(&common.out)?;
    let out = common.out.clone();
    let ascii = cfg.ascii_vtk;
    let ph_floor = cfg.c_oh0;
    let result = run_simulation_with(&cfg, check, |snap| {
        let path = out.join(format!("snapshot_{:06}.vtk", snap.step));
        export_vtk(snap.state, snap.phi, ph_floor, ascii, &path)
    })?;
    let csv = common.out.join("series.csv");
    export_csv(&result.series, &csv)?;
    let rows = result.series.rows();
    let last = rows[rows.len() - 1];
    println!("simulated {} h in {} records -> {}", last.time_h, rows.len(), csv.display());
    println!(
        "mass lost {:.6} g, hydrogen {:.3} mL, final avg pH {:.3}",
        last.mass_lost_g, last.hydrogen_ml, last.avg_ph
    );
    let d = &result.diagnostics;
    println!(
        "diagnostics: clipped [{} {} {}], subcycles {}, reinit skips {}, max penalty dev {:.2e}",
        d.clipped[0], d.clipped[1], d.clipped[2], d.cfl_subcycles, d.reinit_skips,
        d.max_penalty_deviation
    );
    Ok(())
}

fn cmd_calibrate(config: &Path, reference: &Path, common: &CommonOpts) -> Result<()> {
    let cfg = load(config, common.seed)?;
    let curve = read_reference_csv(reference)?;
    let problem = CalibrationProblem::from_config(cfg, curve)?;
    let outcome = optimize(&problem)?;
    ensure_dir(&common.out)?;

    let trace_path = common.out.join("calibration_trace.csv");
    let mut text = String::from("k2,eval,");
    for p in &problem.settings.free {
        text.push_str(p.name.as_str());
        text.push(',');
    }
    text.push_str("objective_ml,incumbent_ml,failed\n");
    for t in &outcome.trace {
        text.push_str(&format!("{},{},", t.k2, t.eval));
        for v in &t.x {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{},{},{}\n", t.objective, t.incumbent, t.failed));
    }
    std::fs::write(&trace_path, text)
        .map_err(|e| CoreError::io(format!("writing {}", trace_path.display()), e))?;

    let best_path = common.out.join("best_params.toml");
    let mut best = String::from("[best]\n");
    for (p, v) in problem.settings.free.iter().zip(&outcome.best_x) {
        best.push_str(&format!("{} = {v}\n", p.name.as_str()));
    }
    best.push_str(&format!("k2 = {}\n", outcome.best_k2));
    best.push_str(&format!("objective_ml = {}\n", outcome.best_y));
    std::fs::write(&best_path, &best)
        .map_err(|e| CoreError::io(format!("writing {}", best_path.display()), e))?;

    println!("{} evaluations -> {}", outcome.trace.len(), trace_path.display());
    print!("{best}");
    Ok(())
}

fn cmd_stefan1d(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let params = StefanParams::from_materials(&cfg.materials);
    let alpha = stefan_alpha(&params)?;
    println!("alpha = {alpha} mm/sqrt(h)");
    println!("time_h,front_mm,displacement_mm");
    let cadence = cfg.dt * cfg.snapshot_every as f64;
    let mut t = 0.0;
    while t <= cfg.t_end + 1e-9 {
        let s = stefan_front(params.s0, alpha, t);
        println!("{t},{s},{}", s - params.s0);
        t += cadence;
    }
    Ok(())
}

fn cmd_probe(
    config: &Path,
    snapshot: &Path,
    from: Point,
    to: Point,
    n: usize,
    common: &CommonOpts,
) -> Result<()> {
    let cfg = load_config(config)?;
    let snap = read_vtk(snapshot)?;
    let grid = cfg.grid()?;
    if snap.grid != grid {
        return Err(CoreError::invalid(format!(
            "snapshot grid {:?} does not match config grid {:?}",
            snap.grid.dims(),
            grid.dims()
        )));
    }
    ensure_dir(&common.out)?;
    let names: Vec<&str> = snap.arrays.iter().map(|(n, _)| n.as_str()).collect();
    let mut columns = Vec::new();
    for name in &names {
        let field = snap.field(name, Unit::Dimensionless)?;
        columns.push(probe_line(&field, from.0, to.0, n)?);
    }
    let path = common.out.join("probe.csv");
    let mut text = format!("distance_mm,{}\n", names.join(","));
    for s in 0..n {
        text.push_str(&format!("{}", columns[0][s].0));
        for col in &columns {
            text.push_str(&format!(",{}", col[s].1));
        }
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| CoreError::io(format!("writing {}", path.display()), e))?;
    println!("{n} samples -> {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            common,
            check,
            ascii_vtk,
        } => cmd_simulate(config, common, *check, *ascii_vtk),
        Command::Calibrate {
            config,
            reference,
            common,
        } => cmd_calibrate(config, reference, common),
        Command::Stefan1d { config } => cmd_stefan1d(config),
        Command::Probe {
            config,
            snapshot,
            from,
            to,
            n,
            common,
        } => cmd_probe(config, snapshot, *from, *to, *n, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
