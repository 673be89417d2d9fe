use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftvc_core::sim::{linear_closed_loop_stability, sweep_max_speed, ControllerKind};
use ftvc_workbench::{run_to_dir, scenario, Error};

const EXIT_DIVERGED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "ftvc", version, about = "Fault-tolerant vehicle stability control workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its CSV log.
    Run {
        scenario: PathBuf,
        /// Overrides the controller named in the file.
        #[arg(long)]
        controller: Option<ControllerKind>,
        /// Integration step, s.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write time-series and trajectory SVGs.
        #[arg(long)]
        svg: bool,
    },
    /// Largest stable initial speed, by bisection.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        controller: ControllerKind,
        #[arg(long)]
        vmin: f64,
        #[arg(long)]
        vmax: f64,
        #[arg(long, default_value_t = 0.25)]
        resolution: f64,
    },
    /// Maximum real part of the linearized closed-loop eigenvalues.
    Stability {
        #[arg(long)]
        v0: f64,
        /// Take gains and vehicle parameters from this scenario file.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config() { EXIT_CONFIG } else { 1 })
}

/// Any failure to read the scenario, missing file included, is the
/// caller's configuration problem.
fn load(path: &std::path::Path) -> Result<ftvc_core::sim::Scenario, ExitCode> {
    scenario::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { scenario: path, controller, dt, out, svg } => {
            let mut sc = match load(&path) {
                Ok(sc) => sc,
                Err(code) => return code,
            };
            if let Some(c) = controller {
                sc.controller = c;
            }
            if let Some(dt) = dt {
                sc.dt = dt;
                if let Err(e) = sc.validate() {
                    return fail(e.into());
                }
            }
            let run = match run_to_dir(&sc, &out, svg) {
                Ok(run) => run,
                Err(e) => return fail(e),
            };
            let m = &run.metrics;
            println!("scenario      {} ({})", sc.name, sc.controller.name());
            println!("max |beta|    {:.3} deg", m.max_side_slip.to_degrees());
            println!("spin          {}", m.spin);
            println!("rms roll      {:.6} rad", m.rms_roll);
            println!("rms pitch     {:.6} rad", m.rms_pitch);
            println!("offset        {:.3} m", m.lateral_offset);
            println!("csv           {}", run.csv.display());
            for p in &run.svgs {
                println!("svg           {}", p.display());
            }
            if let Some(d) = run.log.divergence {
                eprintln!("diverged at t = {:.4} s (state entry {} = {})", d.t, d.index, d.value);
                return ExitCode::from(EXIT_DIVERGED);
            }
            ExitCode::SUCCESS
        }
        Command::Sweep { scenario: path, controller, vmin, vmax, resolution } => {
            let sc = match load(&path) {
                Ok(sc) => sc,
                Err(code) => return code,
            };
            match sweep_max_speed(&sc, controller, vmin, vmax, resolution) {
                Ok(Some(v)) => println!("max stable speed {v:.3} m/s"),
                Ok(None) => println!("no stable speed in [{vmin}, {vmax}] m/s"),
                Err(e) => return fail(e.into()),
            }
            ExitCode::SUCCESS
        }
        Command::Stability { v0, scenario: path } => {
            let (gains, params) = match path.map(|p| load(&p)).transpose() {
                Ok(Some(sc)) => (sc.gains, sc.params),
                Ok(None) => Default::default(),
                Err(code) => return code,
            };
            match linear_closed_loop_stability(&gains, v0, &params) {
                Ok(max_real) => {
                    let verdict = if max_real < 0.0 { "stable" } else { "unstable" };
                    println!("max Re(eig) {max_real:.6e} ({verdict})");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e.into()),
            }
        }
    }
}
