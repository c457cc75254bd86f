use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nhskin::config::ExperimentConfig;
use nhskin::experiment::{run, Command};
use nhskin::grid::Window;
use nhskin::presets::{preset_sized, PRESET_NAMES};

/// Non-Hermitian lattice experiments: spectra, windings, skin-channel
/// wavepackets and Loschmidt echoes.
#[derive(Parser)]
#[command(name = "nhskin", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bloch bands and the finite-chain spectrum for the configured boundary.
    Spectrum(Common),
    /// Determinant winding over a rectangle of reference energies.
    WindingScan(Common),
    /// Characteristic-polynomial roots at the configured reference energies.
    Gbz(Common),
    /// Wavepacket trajectories, analytic tracks and density heatmaps.
    Evolve(Common),
    /// Loschmidt echo, rate function and critical points.
    Dqpt(Common),
    /// Critical-point intervals across system sizes.
    Scaling(Common),
    /// List the built-in presets.
    PresetList,
    /// Print the configuration a run would use, as TOML.
    ShowConfig(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Momentum points (= lattice cells).
    #[arg(long)]
    nk: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Peak prominence as a fraction of the rate-function range.
    #[arg(long)]
    prominence: Option<f64>,
    /// Brillouin-zone window: 0_2pi or pm_pi.
    #[arg(long)]
    window: Option<Window>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let mut cfg = ExperimentConfig::load(path)?;
                if let Some(n) = self.nk {
                    cfg.grid.n = n;
                }
                cfg
            }
            (None, Some(name)) => preset_sized(name, self.nk)?,
            _ => bail!("pass either --config <path> or --preset <name>"),
        };
        if let Some(t) = self.tmax {
            cfg.grid.t_max = t;
        }
        if let Some(dt) = self.dt {
            cfg.grid.dt = dt;
        }
        if let Some(p) = self.prominence {
            cfg.analysis.prominence = p;
        }
        if let Some(w) = self.window {
            cfg.grid.window = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn execute(cmd: Command, common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let out = common.out_dir(&cfg);
    let outputs = run(&cfg, cmd, &out).with_context(|| format!("{cmd} failed"))?;
    let mut w = io::stdout().lock();
    for line in &outputs.summary {
        writeln!(w, "{line}")?;
    }
    for f in &outputs.files {
        writeln!(w, "wrote {}", f.display())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Spectrum(c) => execute(Command::Spectrum, c),
        Cmd::WindingScan(c) => execute(Command::WindingScan, c),
        Cmd::Gbz(c) => execute(Command::Gbz, c),
        Cmd::Evolve(c) => execute(Command::Evolve, c),
        Cmd::Dqpt(c) => execute(Command::Dqpt, c),
        Cmd::Scaling(c) => execute(Command::Scaling, c),
        Cmd::PresetList => {
            let mut w = io::stdout().lock();
            PRESET_NAMES.iter().try_for_each(|name| writeln!(w, "{name}")).map_err(Into::into)
        }
        Cmd::ShowConfig(c) => c.config().and_then(|cfg| Ok(write!(io::stdout(), "{}", cfg.to_toml()?)?)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
