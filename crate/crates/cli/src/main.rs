//! `nks`: numerical checks for almost complex surfaces in the nearly Kähler
//! S³×S³ and their constant mean curvature counterparts in ℝ³.

mod lift;
mod report;
mod surface;
mod verify;
mod wente;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nks_core::connection::check_step;
use nks_core::io::{read_cmc, read_surface};
use nks_core::surface::{builtin, DEFAULT_GRID};
use nks_core::wente::builtin_cmc_with_grid;
use nks_core::{Error, ParamSurface};

use report::{Config, Report};

#[derive(Parser)]
#[command(name = "nks", version, about = "Almost complex surfaces in the nearly Kähler S³×S³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded identity suite for the nearly Kähler structure.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Analyse a builtin surface (torus, torus-isothermal, sphere) or a surface JSON file.
    Surface {
        input: String,
        #[command(flatten)]
        common: Common,
        /// CSV file receiving the per-node fields.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate ε in ℝ³ from a surface and check its mean curvature.
    Wente {
        input: String,
        #[command(flatten)]
        common: Common,
        /// Mesh output, `.obj` or `.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Axes allowed to be periodic, e.g. `u`, `v` or `u,v`.
        #[arg(long, value_parser = parse_periodic)]
        periodic: Option<[bool; 2]>,
    },
    /// Lift a CMC surface (sphere-cmc, cylinder-cmc or a CMC JSON file).
    Lift {
        input: String,
        #[command(flatten)]
        common: Common,
        /// Surface JSON receiving the lifted nodes.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Tolerance of checks that hold exactly in closed form.
    #[arg(long, default_value_t = 1e-12)]
    tol_analytic: f64,
    /// Tolerance of finite-difference checks.
    #[arg(long, default_value_t = 1e-3)]
    tol_fd: f64,
    /// Sampling grid for builtin inputs.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok([n(a)?, n(b)?])
}

fn parse_periodic(s: &str) -> Result<[bool; 2], String> {
    let mut p = [false; 2];
    for axis in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match axis {
            "u" => p[0] = true,
            "v" => p[1] = true,
            _ => return Err(format!("unknown axis {axis:?}; expected u, v or u,v")),
        }
    }
    Ok(p)
}

/// Failure that maps to exit status 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        Self(e.into())
    }
}

fn config(common: &Common, input: Option<&str>) -> Config {
    Config {
        input: input.map(str::to_owned),
        step: common.step,
        tol_analytic: common.tol_analytic,
        tol_fd: common.tol_fd,
        ..Default::default()
    }
}

fn validate(common: &Common) -> Result<(), InputError> {
    check_step(common.step)?;
    for (flag, x) in [("--tol-analytic", common.tol_analytic), ("--tol-fd", common.tol_fd)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::BadInput(format!("{flag} must be positive, got {x}")).into());
        }
    }
    if let Some([nu, nv]) = common.grid {
        if nu < 3 || nv < 3 {
            return Err(Error::BadInput(format!("--grid {nu}x{nv}: need at least 3 nodes per axis")).into());
        }
    }
    Ok(())
}

fn load_surface(input: &str, grid: Option<[usize; 2]>) -> Result<ParamSurface, InputError> {
    match builtin(input) {
        Some(s) => {
            let [nu, nv] = grid.unwrap_or([DEFAULT_GRID, DEFAULT_GRID]);
            Ok(s.with_grid(nu, nv)?)
        }
        None if grid.is_some() => {
            Err(Error::BadInput(format!("--grid applies to builtin surfaces only; {input} is a file")).into())
        }
        None => Ok(read_surface(Path::new(input))?),
    }
}

fn run(cli: Cli) -> Result<Report, InputError> {
    let report = match cli.command {
        Command::Verify { samples, seed, common } => {
            validate(&common)?;
            if samples == 0 {
                return Err(Error::BadInput("--samples must be at least 1".into()).into());
            }
            let args = verify::VerifyArgs {
                samples,
                seed,
                step: common.step,
                tol_analytic: common.tol_analytic,
                tol_fd: common.tol_fd,
            };
            let r = verify::run(&args)?;
            emit_json(&common, &r)?;
            r
        }
        Command::Surface { input, common, out } => {
            validate(&common)?;
            let s = load_surface(&input, common.grid)?;
            let mut r = Report::new("surface", Config { grid: Some([s.geom().nu, s.geom().nv]), ..config(&common, Some(&input)) });
            let args = surface::SurfaceArgs {
                name: &input,
                step: common.step,
                tol_analytic: common.tol_analytic,
                tol_fd: common.tol_fd,
                out: out.as_deref(),
            };
            surface::run(&s, &args, &mut r)?;
            emit_json(&common, &r)?;
            r
        }
        Command::Wente { input, common, out, periodic } => {
            validate(&common)?;
            if let Some(path) = &out {
                wente::out_kind(path)?;
            }
            let s = load_surface(&input, common.grid)?;
            let mut r = Report::new(
                "wente",
                Config { grid: Some([s.geom().nu, s.geom().nv]), periodic, ..config(&common, Some(&input)) },
            );
            let args = wente::WenteArgs {
                name: &input,
                tol_fd: common.tol_fd,
                periodic: periodic.unwrap_or_default(),
                out: out.as_deref(),
            };
            wente::run(&s, &args, &mut r)?;
            emit_json(&common, &r)?;
            r
        }
        Command::Lift { input, common, out } => {
            validate(&common)?;
            let [nu, nv] = common.grid.unwrap_or([DEFAULT_GRID, DEFAULT_GRID]);
            let e = match builtin_cmc_with_grid(&input, nu, nv) {
                Some(e) => e?,
                None if common.grid.is_some() => {
                    return Err(
                        Error::BadInput(format!("--grid applies to builtin inputs only; {input} is a file")).into()
                    )
                }
                None => read_cmc(Path::new(&input))?,
            };
            let mut r = Report::new(
                "lift",
                Config { grid: Some([e.geom().nu, e.geom().nv]), ..config(&common, Some(&input)) },
            );
            let args = lift::LiftArgs { name: &input, step: common.step, tol_fd: common.tol_fd, out: out.as_deref() };
            lift::run(&e, &args, &mut r)?;
            emit_json(&common, &r)?;
            r
        }
    };
    Ok(report)
}

fn emit_json(common: &Common, r: &Report) -> Result<(), InputError> {
    match common.json.as_deref() {
        None => {}
        Some(p) if p == Path::new("-") => std::io::stdout().write_all(r.to_json().as_bytes())?,
        Some(p) => fs::write(p, r.to_json()).map_err(|e| Error::BadInput(format!("{}: {e}", p.display())))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let to_stdout = match &cli.command {
        Command::Verify { common, .. }
        | Command::Surface { common, .. }
        | Command::Wente { common, .. }
        | Command::Lift { common, .. } => common.json.as_deref() == Some(Path::new("-")),
    };
    match run(cli) {
        Ok(r) => {
            let summary = r.summary();
            if to_stdout {
                eprint!("{summary}");
            } else {
                print!("{summary}");
            }
            if r.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
