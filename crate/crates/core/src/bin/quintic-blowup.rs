use clap::{Args, Parser, Subcommand};
use quintic_blowup::pipeline::{exit_code, xi_d_only, Config, Overrides, Pipeline, Stage, EXIT_GATE, EXIT_OK, EXIT_VALIDATION};
use std::path::PathBuf;
use std::process::ExitCode;

/// Blowup-profile construction, residual certification, spectral tables and perturbation runs.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Ground state, fundamental system and forcing profiles.
    DumpProfiles(Common),
    /// First correction f₁, f₂ and their asymptotic heads.
    BuildV1(Common),
    /// Second-correction series and its growth certificate.
    BuildProfile(Common),
    /// Cone-error bounds on dyadic time slices.
    Certify(Common),
    /// Spectral density, bound state and transform checks.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Path of the density table.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the negative eigenvalue only.
        #[arg(long)]
        xi_d: bool,
    },
    /// Forcing-driven perturbation run.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Path of the trajectory table.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot of the cone energy.
        #[arg(long)]
        svg: bool,
    },
    /// Every stage in order, or the subset named by --stage.
    All {
        #[command(flatten)]
        common: Common,
        #[arg(long = "stage")]
        stages: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}

fn run(cli: Cli) -> i32 {
    let mut ov = Overrides::default();
    let (common, stages): (Common, Vec<Stage>) = match cli.cmd {
        Cmd::DumpProfiles(c) => (c, vec![Stage::DumpProfiles]),
        Cmd::BuildV1(c) => (c, vec![Stage::BuildV1]),
        Cmd::BuildProfile(c) => (c, vec![Stage::BuildProfile]),
        Cmd::Certify(c) => (c, vec![Stage::Certify]),
        Cmd::Spectral { common, out, xi_d } => {
            if xi_d {
                return match Config::load(common.config.as_deref()).and_then(|c| xi_d_only(&c)) {
                    Ok(x) => {
                        println!("{x:.16e}");
                        EXIT_OK
                    }
                    Err(e) => fail(&e),
                };
            }
            ov.spectral_out = out;
            (common, vec![Stage::Spectral])
        }
        Cmd::Simulate { common, out, svg } => {
            ov.simulate_out = out;
            ov.svg = svg.then_some(true);
            (common, vec![Stage::Simulate])
        }
        Cmd::All { common, stages } => {
            let mut picked = Vec::new();
            for s in &stages {
                match Stage::parse(s) {
                    Some(st) => picked.push(st),
                    None => {
                        eprintln!("error: unknown stage `{s}`");
                        return EXIT_VALIDATION;
                    }
                }
            }
            if picked.is_empty() {
                picked = Stage::ALL.to_vec();
            }
            (common, picked)
        }
    };
    ov.out_dir = common.out_dir;
    let cfg = match Config::load(common.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let mut p = match Pipeline::new(cfg, ov) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    match p.run(&stages) {
        Ok(m) => {
            for (k, secs) in &m.timings {
                eprintln!("{k}: {secs:.2} s");
            }
            let failed = m.failed_gates();
            if failed.is_empty() {
                EXIT_OK
            } else {
                eprintln!("gate failures: {}", failed.join(", "));
                EXIT_GATE
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &quintic_blowup::Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}
