use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stap_slp::designer::DesignResult;
use stap_slp::experiments::{
    self, preset_names, preset_text, sweep, sweep_csv, CommMode, Scenario, ScenarioConfig, SweepAxis, VariantKind, OUTPUT_DIR_ENV,
};
use stap_slp::Error;

#[derive(Parser)]
#[command(name = "stap-slp", version, about = "STAP waveform design with symbol-level precoding")]
struct Cli {
    /// Worker threads for sweeps and baselines (default: all cores).
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Sweep one scenario parameter and write a CSV table.
    Sweep(SweepArgs),
    /// Evaluate the cross-ambiguity map of a stored design.
    Ambiguity(AmbiguityArgs),
    /// Parse and check a config without running it.
    ValidateConfig(ConfigArgs),
    /// List the built-in presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario TOML file, or `preset:<name>`.
    #[arg(long, short = 'c')]
    config: PathBuf,
    #[arg(long)]
    scene_seed: Option<u64>,
    #[arg(long)]
    channel_seed: Option<u64>,
    #[arg(long)]
    symbol_seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> stap_slp::Result<ScenarioConfig> {
        let mut c = ScenarioConfig::load(&self.config)?;
        if let Some(s) = self.scene_seed {
            c.seeds.scene = s;
        }
        if let Some(s) = self.channel_seed {
            c.seeds.channel = s;
        }
        if let Some(s) = self.symbol_seed {
            c.seeds.symbol = s;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, short = 'o', env = OUTPUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Override the configured waveform constraint (cm, papr, cms).
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// qos_db, power, n_users, n_antennas, doppler, papr_eps or similarity_xi.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "cm")]
    variants: Vec<String>,
    /// ci, zf, radar_only.
    #[arg(long, value_delimiter = ',', default_value = "ci")]
    comms: Vec<String>,
}

#[derive(Args)]
struct AmbiguityArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// `result.json` written by `run`.
    #[arg(long)]
    result: PathBuf,
    /// Grid points per axis.
    #[arg(long)]
    points: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Infeasible(_) => 2,
                Error::Solver(_) => 3,
                _ => 1,
            })
        }
    }
}

fn dispatch(verb: Verb) -> stap_slp::Result<()> {
    match verb {
        Verb::Run(a) => {
            let mut cfg = a.config.load()?;
            if let Some(v) = &a.variant {
                cfg.variant.kind = VariantKind::parse(v)?;
            }
            let out = experiments::run(&cfg, &a.out.out)?;
            let r = &out.result;
            println!(
                "{} {}: SINR {:.3} dB after {} outer iterations{}",
                r.variant.name(),
                r.comm,
                r.sinr_db,
                r.outer_iterations,
                if r.converged { "" } else { " (iteration limit)" }
            );
            if let Some(w) = &r.feasibility.warning {
                println!("warning: {w}");
            }
            for (m, b) in &out.baselines {
                match b {
                    Ok(b) => println!("baseline {}: SINR {:.3} dB", m.name(), b.sinr_db),
                    Err(e) => println!("baseline {}: failed ({e})", m.name()),
                }
            }
            report_files(&out.files);
            Ok(())
        }
        Verb::Sweep(a) => {
            let cfg = a.config.load()?;
            let axis = SweepAxis::parse(&a.axis)?;
            let variants = a.variants.iter().map(|v| VariantKind::parse(v)).collect::<Result<Vec<_>, _>>()?;
            let comms = a.comms.iter().map(|m| CommMode::parse(m)).collect::<Result<Vec<_>, _>>()?;
            let rows = sweep(&cfg, axis, &a.values, &variants, &comms);
            fs::create_dir_all(&a.out.out)?;
            let path = a.out.out.join(format!("sweep_{}.csv", axis.name()));
            fs::write(&path, sweep_csv(&rows))?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} points, {failed} failed", rows.len());
            report_files(&[path]);
            Ok(())
        }
        Verb::Ambiguity(a) => {
            let mut cfg = a.config.load()?;
            if let Some(p) = a.points {
                cfg.outputs.ambiguity_points = p;
            }
            let result = read_result(&a.result)?;
            let sc = Scenario::build(&cfg)?;
            fs::create_dir_all(&a.out.out)?;
            let files = experiments::write_ambiguity(&cfg, &sc.ops, &result, &a.out.out)?;
            report_files(&files);
            Ok(())
        }
        Verb::ValidateConfig(a) => {
            let cfg = a.load()?;
            let a_cfg = &cfg.array;
            println!(
                "ok: Nt={} Nr={} M={} N={} (waveform length {}), {} users, variant {:?}",
                a_cfg.n_tx,
                a_cfg.n_rx,
                a_cfg.n_pulses,
                a_cfg.n_samples,
                a_cfg.waveform_len(),
                cfg.comm.n_users,
                cfg.variant.kind
            );
            Ok(())
        }
        Verb::Presets { name: None } => {
            for n in preset_names() {
                println!("{n}");
            }
            Ok(())
        }
        Verb::Presets { name: Some(n) } => {
            print!("{}", preset_text(&n)?);
            Ok(())
        }
    }
}

fn read_result(path: &Path) -> stap_slp::Result<DesignResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    DesignResult::from_json(&text)
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}
