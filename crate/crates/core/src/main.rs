use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use xgeoml::bench::Preset;
use xgeoml::commands;
use xgeoml::config::RunConfig;
use xgeoml::synth::{ResponseForm, SynthSpec};
use xgeoml::Error;

#[derive(Parser)]
#[command(name = "xgeoml", version, about = "Geographically weighted machine learning with explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its true coefficient surfaces.
    Synth {
        #[arg(long, default_value = "linear")]
        preset: ResponseForm,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        grid_side: usize,
        #[arg(long, default_value_t = 0.5)]
        noise_sd: f64,
        /// Leave the noise term out of the nonlinear response.
        #[arg(long)]
        no_noise_in_nonlinear: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit local models, evaluate LOO R² and write attribution fields.
    Fit { config: PathBuf },
    /// Scan bandwidths for every configured kernel kind and mode.
    Scan { config: PathBuf },
    /// Run the synthetic benchmark.
    Bench {
        /// Overrides bench.preset.
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides io.output_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Draw one value column as an SVG heatmap.
    Render {
        /// CSV with id, cx and cy columns.
        #[arg(long)]
        data: PathBuf,
        /// CSV holding the values, keyed by id.
        #[arg(long)]
        values: PathBuf,
        /// Column to draw, or the feature name with --explainer.
        #[arg(long)]
        column: String,
        /// Read --values as an attribution table and pick this explainer.
        #[arg(long)]
        explainer: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> xgeoml::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn run(cli: Cli) -> xgeoml::Result<()> {
    match cli.command {
        Command::Synth {
            preset,
            seed,
            grid_side,
            noise_sd,
            no_noise_in_nonlinear,
            out_dir,
        } => {
            let spec = SynthSpec {
                grid_side,
                seed,
                noise_sd,
                response_form: preset,
                noise_in_nonlinear: !no_noise_in_nonlinear,
                ..SynthSpec::default()
            };
            let (d, t) = commands::synth(&spec, &out_dir)?;
            println!("wrote {} and {}", d.display(), t.display());
        }
        Command::Fit { config } => {
            let cfg = load_config(&config)?;
            let report = commands::fit(&cfg)?;
            println!("loo_r2 = {}", report.get("loo_r2").unwrap_or("-"));
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Scan { config } => {
            let cfg = load_config(&config)?;
            let report = commands::scan(&cfg)?;
            print!("{}", report.render().split("[results]\n").nth(1).unwrap_or(""));
        }
        Command::Bench {
            preset,
            config,
            seed,
            out_dir,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(p) = preset {
                cfg.bench_preset = p;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            cfg.apply_env()?;
            let (b, _) = commands::bench(&cfg)?;
            print!("{}", b.summary());
        }
        Command::Render {
            data,
            values,
            column,
            explainer,
            out,
        } => {
            commands::render(&data, &values, &column, explainer.as_deref(), &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}
