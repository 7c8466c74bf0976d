use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lrldl_core::data::{resolve_path, save_dataset};
use lrldl_core::experiment::{self, CvConfig, Grid, SweepParam, STANDARD_GRID};
use lrldl_core::report;
use lrldl_core::{
    degrade, evaluate, fit, load_dataset, synth_lowrank, DataFormat, Dataset, Degradation,
    Hyperparams, TlrldlModel, Variant,
};

#[derive(Parser)]
#[command(
    name = "lrldl",
    version,
    about = "Label distribution learning with low-rank label correlation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a dataset and save it
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long, default_value_t = Variant::Full)]
        variant: Variant,
        /// Where to write the model (JSON)
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
        format: OutputFormat,
    },
    /// Predict distributions for every instance of a dataset
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Write predictions here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a saved model on a dataset
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
        format: OutputFormat,
    },
    /// k-fold cross-validation, optionally with nested grid search
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        /// Comma-separated list of variants
        #[arg(long, value_delimiter = ',', default_value = "full")]
        variant: Vec<Variant>,
        #[command(flatten)]
        cv: CvArgs,
    },
    /// Full model against both ablations on the same folds
    Ablate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[command(flatten)]
        cv: CvArgs,
    },
    /// Degrade distributions to multi-label sets
    Degrade {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = Degradation::default())]
        degrade: Degradation,
        /// Multi-label matrix output, one line of 0/1 per instance
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated scores as alpha or lambda varies
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long, default_value_t = Variant::Full)]
        variant: Variant,
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; defaults to the seven standard candidates
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
        format: OutputFormat,
    },
    /// Generate a synthetic dataset with correlated label groups
    Synth {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        d: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output file extension
        #[arg(long)]
        data_format: Option<DataFormat>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file; relative paths also resolve under $LDL_DATA_DIR
    #[arg(long)]
    data: PathBuf,
    /// matrix or csv; defaults to the file extension
    #[arg(long)]
    data_format: Option<DataFormat>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let path = resolve_path(&self.data);
        let format = self
            .data_format
            .unwrap_or_else(|| DataFormat::from_path(&path));
        load_dataset(&path, format).with_context(|| format!("loading {}", path.display()))
    }
}

#[derive(Args)]
struct HpArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// threshold:T or topk:K
    #[arg(long, default_value_t = Degradation::default())]
    degrade: Degradation,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

impl HpArgs {
    fn hyperparams(&self) -> Result<Hyperparams> {
        let hp = Hyperparams {
            alpha: self.alpha,
            lambda: self.lambda,
            degradation: self.degrade,
            max_iters: self.max_iters,
            tol: self.tol,
            ..Hyperparams::default()
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Args)]
struct CvArgs {
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Tune on each training split, e.g. `standard` or
    /// `alpha=0.01,0.1;lambda=0.1,1;degrade=topk:2,topk:3`
    #[arg(long)]
    grid: Option<Grid>,
    #[arg(long, default_value_t = 5)]
    inner_folds: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    format: OutputFormat,
}

impl CvArgs {
    fn config(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            seed: self.seed,
            inner_folds: self.inner_folds,
            ..CvConfig::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Md,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            hp,
            variant,
            model_out,
            format,
        } => {
            let ds = data.load()?;
            let hp = hp.hyperparams()?;
            let res = fit(&ds.features, &ds.distributions, &hp, variant)?;
            res.model
                .save(&model_out)
                .with_context(|| format!("writing {}", model_out.display()))?;
            let pred = res.model.predict_matrix(&ds.features)?;
            let rep = evaluate(&ds.distributions, &pred)?;
            let status = if res.converged {
                "converged".to_string()
            } else {
                format!("not converged (stopped at max_iters={})", hp.max_iters)
            };
            let mut head = String::new();
            writeln!(head, "variant: {variant}")?;
            writeln!(head, "iterations: {}", res.iterations_run)?;
            writeln!(head, "primal residual: {:.3e}", res.final_primal_residual)?;
            writeln!(head, "status: {status}")?;
            match format {
                OutputFormat::Md => {
                    print!(
                        "{head}\n{}",
                        report::report_markdown(&ds.name, variant.as_str(), &rep)
                    );
                }
                OutputFormat::Csv => {
                    eprint!("{head}");
                    print!("{}", report::report_csv(&ds.name, variant.as_str(), &rep));
                }
            }
        }
        Command::Predict { model, data, out } => {
            let model = load_model(&model)?;
            let ds = data.load()?;
            let pred = model.predict_matrix(&ds.features)?;
            let mut text = String::new();
            for col in pred.as_matrix().column_iter() {
                let row: Vec<String> = col.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(text, "{}", row.join(" "))?;
            }
            emit(&text, out.as_deref())?;
        }
        Command::Evaluate {
            model,
            data,
            format,
        } => {
            let model = load_model(&model)?;
            let ds = data.load()?;
            let pred = model.predict_matrix(&ds.features)?;
            let rep = evaluate(&ds.distributions, &pred)?;
            let v = model.variant().as_str();
            print!(
                "{}",
                match format {
                    OutputFormat::Md => report::report_markdown(&ds.name, v, &rep),
                    OutputFormat::Csv => report::report_csv(&ds.name, v, &rep),
                }
            );
        }
        Command::Cv {
            data,
            hp,
            variant,
            cv,
        } => {
            if variant.is_empty() {
                bail!("--variant needs at least one entry");
            }
            let ds = data.load()?;
            let hp = hp.hyperparams()?;
            let s = experiment::cross_validate(&ds, &hp, &variant, cv.grid.as_ref(), &cv.config())?;
            print_summaries(&s, cv.format);
        }
        Command::Ablate { data, hp, cv } => {
            let ds = data.load()?;
            let hp = hp.hyperparams()?;
            let s = experiment::ablate(&ds, &hp, cv.grid.as_ref(), &cv.config())?;
            print_summaries(&s, cv.format);
        }
        Command::Degrade {
            data,
            degrade: how,
            out,
        } => {
            let ds = data.load()?;
            how.validate_for(ds.m())?;
            let l = degrade(&ds.distributions, how)?;
            if let Some(path) = out {
                let mut text = String::new();
                for col in l.as_matrix().column_iter() {
                    let row: Vec<String> = col.iter().map(|&v| (v as u8).to_string()).collect();
                    writeln!(text, "{}", row.join(" "))?;
                }
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("instance,positives");
            for (i, c) in l.positives_per_instance().iter().enumerate() {
                println!("{i},{c}");
            }
        }
        Command::Sweep {
            data,
            hp,
            variant,
            param,
            values,
            folds,
            seed,
            format,
        } => {
            let ds = data.load()?;
            let hp = hp.hyperparams()?;
            let values = if values.is_empty() {
                STANDARD_GRID.to_vec()
            } else {
                values
            };
            let cfg = CvConfig {
                folds,
                seed,
                ..CvConfig::default()
            };
            let points = experiment::sweep(&ds, &hp, variant, param, &values, &cfg)?;
            print!(
                "{}",
                match format {
                    OutputFormat::Md => report::sweep_markdown(param.name(), &points),
                    OutputFormat::Csv => report::sweep_csv(param.name(), &points),
                }
            );
        }
        Command::Synth {
            n,
            d,
            m,
            rank,
            noise,
            seed,
            out,
            data_format,
        } => {
            let ds = synth_lowrank(n, d, m, rank, noise, seed)?;
            let format = data_format.unwrap_or_else(|| DataFormat::from_path(&out));
            save_dataset(&ds, &out, format)
                .with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} (n={n} d={d} m={m})", out.display());
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<TlrldlModel> {
    TlrldlModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_summaries(s: &[experiment::VariantSummary], format: OutputFormat) {
    for v in s {
        let n = v.unconverged_folds();
        if n > 0 {
            eprintln!(
                "note: {} hit max_iters on {n} of {} folds",
                v.variant,
                v.folds.len()
            );
        }
    }
    print!(
        "{}",
        match format {
            OutputFormat::Md => report::summaries_markdown(s),
            OutputFormat::Csv => report::summaries_csv(s),
        }
    );
}
