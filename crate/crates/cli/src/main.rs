use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionbsm_cli::campaign::summary_text;
use ionbsm_cli::{analyze_file, output, run_campaign, CampaignConfig, CampaignKind, CliError};

#[derive(Parser)]
#[command(
    name = "ionbsm",
    version,
    about = "Heralded-absorption Bell-state measurement campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by the configuration.
    Simulate(Common),
    /// Re-analyze an event file with the configuration's estimators.
    Analyze {
        events: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Abort on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Efficiency budget from recorded totals.
    Budget(Common),
    /// Detection-window scan of simulated entanglement transfer.
    Scan(Common),
    /// Stokes-space rotation from prepared and measured polarizations.
    Rotation {
        #[command(flatten)]
        common: Common,
        /// Rows of `px py pz mx my mz`; overrides the configuration.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML campaign file; published defaults apply to anything it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep the accidental truth flag of simulated events.
    #[arg(long)]
    truth: bool,
    /// Larmor-phase bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Bootstrap resamples for uncertainties.
    #[arg(long)]
    bootstrap: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<CampaignConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::load(path)?,
            None => CampaignConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.truth {
            cfg.truth = true;
        }
        if let Some(bins) = self.bins {
            cfg.run.larmor_bins = bins;
        }
        if let Some(n) = self.bootstrap {
            cfg.bootstrap = n;
        }
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let with_kind = |common: &Common, kind: Option<CampaignKind>| {
        let mut cfg = common.load()?;
        if let Some(k) = kind {
            cfg.experiment = k;
        }
        Ok::<_, CliError>(cfg)
    };
    let (cfg, outputs) = match command {
        Command::Simulate(common) => {
            let cfg = with_kind(&common, None)?;
            let out = run_campaign(&cfg);
            (cfg, out)
        }
        Command::Budget(common) => {
            let cfg = with_kind(&common, Some(CampaignKind::EfficiencyBudget))?;
            let out = run_campaign(&cfg);
            (cfg, out)
        }
        Command::Scan(common) => {
            let cfg = with_kind(&common, Some(CampaignKind::WindowScan))?;
            let out = run_campaign(&cfg);
            (cfg, out)
        }
        Command::Rotation { common, pairs } => {
            let mut cfg = with_kind(&common, Some(CampaignKind::RotationEstimate))?;
            if pairs.is_some() {
                cfg.rotation.pairs = pairs;
            }
            let out = run_campaign(&cfg);
            (cfg, out)
        }
        Command::Analyze {
            events,
            common,
            strict,
        } => {
            let cfg = with_kind(&common, None)?;
            let out = analyze_file(&cfg, &events, strict).and_then(|o| {
                o.write(&cfg.out)?;
                Ok(o)
            });
            (cfg, out)
        }
    };
    match outputs {
        Ok(o) => {
            print!("{}", summary_text(&o.summary));
            if o.summary.skipped_lines > 0 {
                eprintln!("skipped {} malformed lines", o.summary.skipped_lines);
            }
            Ok(())
        }
        Err(e) => {
            if e.exit_code() == 4 {
                write_diagnostics(&cfg.out, &e, &cfg);
            }
            Err(e)
        }
    }
}

fn write_diagnostics(dir: &Path, err: &CliError, cfg: &CampaignConfig) {
    let config =
        toml::to_string(cfg).unwrap_or_else(|e| format!("# config not serializable: {e}\n"));
    let text = format!("error: {err}\n\n# effective configuration\n{config}");
    let written =
        output::ensure_dir(dir).and_then(|_| output::write_atomic(dir, output::DIAGNOSTICS, &text));
    match written {
        Ok(()) => eprintln!(
            "diagnostics written to {}",
            dir.join(output::DIAGNOSTICS).display()
        ),
        Err(e) => eprintln!("could not write diagnostics: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
