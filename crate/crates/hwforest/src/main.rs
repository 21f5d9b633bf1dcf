use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hwforest::config::{parse_grains, parse_screening, RunConfig};
use hwforest::core::evalstats::Q_0_1_K7;
use hwforest::core::GrainConfig;
use hwforest::{run, Error, Result};

#[derive(Parser)]
#[command(
    name = "hwforest",
    version,
    about = "Deep forest with hash-screened scanning and window-screened cascade levels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model; writes model.json and report.json.
    Train(Common),
    /// Score a saved model on the configured test set.
    Eval(Common),
    /// Run hash/screening ablation arms and a paired comparison.
    Bench(Common),
    /// Friedman and Nemenyi statistics over a per-dataset accuracy CSV.
    Stats {
        input: PathBuf,
        /// Studentized range critical value for the Nemenyi test.
        #[arg(long, default_value_t = Q_0_1_K7)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScreeningArg {
    Window,
    Binning,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to HWFOREST_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    screening: Option<ScreeningArg>,
    #[arg(long, value_enum)]
    hash_screen: Option<Switch>,
    /// Comma-separated window sizes, e.g. 4,6,8.
    #[arg(long)]
    grains: Option<String>,
    /// Fraction of every data set to keep.
    #[arg(long)]
    subsample: Option<f64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::preset(hwforest::config::Preset::Full),
        };
        let here = Path::new(".");
        if let Some(s) = self.seed {
            cfg.cascade.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.set("threads", &t.to_string(), here)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.screening {
            let name = match s {
                ScreeningArg::Window => "window",
                ScreeningArg::Binning => "binning",
                ScreeningArg::None => "none",
            };
            cfg.cascade.screening = parse_screening(name, cfg.binning_bins)?;
        }
        if let Some(h) = self.hash_screen {
            cfg.scan_mut().hash_screen = matches!(h, Switch::On);
        }
        if let Some(g) = &self.grains {
            let sizes = parse_grains(g).map_err(|m| Error::ConfigValue { key: "--grains".into(), message: m })?;
            let template = cfg.scan_mut().grains.first().copied().unwrap_or(GrainConfig::new(1, 1, 30));
            cfg.scan_mut().grains =
                sizes.into_iter().map(|w| GrainConfig::new(w, template.stride, template.n_trees)).collect();
        }
        if let Some(f) = self.subsample {
            cfg.set("subsample", &f.to_string(), here)?;
        }
        Ok(cfg)
    }
}

fn init_threads(cfg: &RunConfig) -> Result<()> {
    if let Some(n) = cfg.resolved_threads()? {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.resolve()?;
            init_threads(&cfg)?;
            let r = run::cmd_train(&cfg)?;
            match r.accuracy {
                Some(a) => println!(
                    "levels: {}  test accuracy: {a:.4}  wall time: {:.2}s",
                    r.levels.len(),
                    r.wall_time_seconds
                ),
                None => println!("levels: {}  wall time: {:.2}s", r.levels.len(), r.wall_time_seconds),
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Eval(c) => {
            let cfg = c.resolve()?;
            init_threads(&cfg)?;
            let r = run::cmd_eval(&cfg)?;
            println!("accuracy: {:.4} on {} instances", r.accuracy, r.n_test);
        }
        Command::Bench(c) => {
            let cfg = c.resolve()?;
            init_threads(&cfg)?;
            let r = run::cmd_bench(&cfg)?;
            for a in &r.arms {
                println!("{:<28} accuracy {:.4}  time {:.2}s", a.name, a.mean_accuracy, a.mean_wall_time_seconds);
            }
            for s in &r.summary {
                println!(
                    "{} vs {}: accuracy delta {:+.4}, time delta {:+.2}s, paired t {:?}",
                    s.arm, s.baseline, s.mean_accuracy_delta, s.mean_time_delta_seconds, s.paired_t
                );
            }
        }
        Command::Stats { input, q, out } => {
            let r = run::cmd_stats(&input, q, out.as_ref())?;
            print!("{}", r.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
