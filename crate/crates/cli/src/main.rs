use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use paft_cli::commands::{self, Arm, EvalArgs, GenerateArgs, Generator, KernelChoice, MmdArgs, MmdScaleArgs, PerturbArgs};
use paft_cli::{CliError, RunConfig};
use paft_core::eval::PerturbOp;
use paft_core::experiment::AblationGrid;
use paft_core::forge::{MetaStrategy, Split};
use paft_core::mmd::Estimator;
use paft_core::task::Family;

/// Prompt-agnostic fine-tuning experiments at desk scale.
///
/// Exit codes: 0 success, 2 invalid arguments, 3 data errors, 4 upstream endpoint errors.
#[derive(Parser)]
#[command(name = "paft", version)]
struct Cli {
    /// Never touch the network; prompt generation uses the built-in offline generator.
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.set.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Candidate prompt synthesis and partitioning.
    Forge {
        #[command(subcommand)]
        command: ForgeCommand,
    },
    /// Train one arm and evaluate it on the unseen test prompts.
    Train {
        #[arg(value_enum)]
        arm: ArmArg,
        #[command(flatten)]
        config: ConfigArgs,
        /// Parent of the run directory.
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Score a checkpoint on every prompt of a split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prompts: PathBuf,
        /// Split to evaluate; all prompts when omitted.
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        /// Perturbed prompts for conditional accuracy.
        #[arg(long)]
        adversarial: Option<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        top_threshold: f64,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Derive adversarial prompts by perturbing literal template text.
    Perturb {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        /// Comma-separated ops; prompt i gets op i mod len.
        #[arg(long, value_delimiter = ',', default_value = "typo_swap,char_drop,punctuation_jitter,word_shuffle_window,case_flip")]
        ops: Vec<String>,
        #[arg(long, default_value_t = 0.15)]
        intensity: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value = "adversarial.json")]
        out: PathBuf,
    },
    /// MMD between the train and test splits of a prompt set.
    Mmd {
        #[arg(long)]
        prompts: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Loss-class constant C for the discrepancy bound C·MMD.
        #[arg(long)]
        bound_c: Option<f64>,
        #[arg(long, default_value = "mmd.json")]
        out: PathBuf,
    },
    /// MMD of train-prompt subsets of growing size to the test split.
    MmdScale {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,40")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value = "mmd_scale.csv")]
        out: PathBuf,
    },
    /// Sweep steps-per-prompt K and epochs T.
    Ablate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "3")]
        t: Vec<usize>,
        /// Extra K:T cells outside the product, e.g. `1:6`.
        #[arg(long, value_delimiter = ',')]
        extra: Vec<String>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// PAFT with growing numbers of training prompts.
    Scale {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,40")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Bundle eval reports into one markdown table plus CSV and JSON.
    Report {
        /// Report JSON files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "bundle")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ForgeCommand {
    /// Ask the generator for templates and write an unpartitioned prompt set.
    Generate {
        /// Task description inserted into the meta-prompt.
        #[arg(long, default_value = "two-choice commonsense question answering task")]
        task: String,
        #[arg(long, value_enum, default_value = "both")]
        strategy: StrategyArg,
        /// Prompts requested per strategy.
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value = "pattern")]
        family: String,
        /// Answer-format example for few-shot meta-prompts; defaults to the family's human template.
        #[arg(long)]
        example_format: Option<String>,
        /// Seed of the offline generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
        endpoint: String,
        #[arg(long, default_value = "gpt-4o")]
        model: String,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        #[arg(long, default_value = "prompts.json")]
        out: PathBuf,
    },
    /// Split a prompt set into disjoint train and test parts.
    Partition {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, default_value_t = 4)]
        train_weight: u32,
        #[arg(long, default_value_t = 1)]
        test_weight: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "partitioned.json")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// RBF bandwidth; median heuristic when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "biased-v")]
    estimator: EstimatorArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArmArg {
    Paft,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    Adversarial,
    Unassigned,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
            SplitArg::Adversarial => Split::Adversarial,
            SplitArg::Unassigned => Split::Unassigned,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    ZeroShot,
    FewShot,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Rbf,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    BiasedV,
    UnbiasedU,
}

impl KernelArgs {
    fn parts(&self) -> (KernelChoice, Option<f64>, Estimator) {
        let k = match self.kernel {
            KernelArg::Rbf => KernelChoice::Rbf,
            KernelArg::Linear => KernelChoice::Linear,
        };
        let e = match self.estimator {
            EstimatorArg::BiasedV => Estimator::BiasedV,
            EstimatorArg::UnbiasedU => Estimator::UnbiasedU,
        };
        (k, self.sigma, e)
    }
}

fn parse_ops(names: &[String]) -> Result<Vec<PerturbOp>, CliError> {
    names
        .iter()
        .map(|n| PerturbOp::from_name(n.trim()).ok_or_else(|| CliError::Invalid(format!("unknown perturbation op {n:?}"))))
        .collect()
}

fn parse_cells(cells: &[String]) -> Result<Vec<(usize, usize)>, CliError> {
    cells
        .iter()
        .map(|c| {
            let bad = || CliError::Invalid(format!("cell {c:?} is not K:T"));
            let (k, t) = c.split_once(':').ok_or_else(bad)?;
            Ok((k.trim().parse().map_err(|_| bad())?, t.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Forge { command } => match command {
            ForgeCommand::Generate {
                task,
                strategy,
                count,
                family,
                example_format,
                seed,
                endpoint,
                model,
                timeout_secs,
                retries,
                out,
            } => {
                let family = Family::from_name(&family)?;
                let gen = if cli.offline {
                    Generator::Offline { seed, family }
                } else {
                    Generator::Http { endpoint, model, timeout: Duration::from_secs(timeout_secs), retries }
                };
                let strategies = match strategy {
                    StrategyArg::ZeroShot => vec![MetaStrategy::ZeroShot],
                    StrategyArg::FewShot => vec![MetaStrategy::FewShot],
                    StrategyArg::Both => vec![MetaStrategy::ZeroShot, MetaStrategy::FewShot],
                };
                let n = commands::forge_generate(&gen, &GenerateArgs { task, strategies, count, family, example_format, out: out.clone() })?;
                println!("wrote {n} templates to {}", out.display());
            }
            ForgeCommand::Partition { prompts, train_weight, test_weight, seed, out } => {
                let (train, test) = commands::forge_partition(&prompts, train_weight, test_weight, seed, &out)?;
                println!("train {train}, test {test} -> {}", out.display());
            }
        },
        Command::Train { arm, config, out_dir } => {
            let arm = match arm {
                ArmArg::Paft => Arm::Paft,
                ArmArg::Fixed => Arm::Fixed,
            };
            let dir = commands::train(&config.load()?, arm, &out_dir)?;
            println!("{}", dir.display());
        }
        Command::Eval { model, prompts, split, adversarial, top_threshold, out, config } => {
            let args = EvalArgs { model, prompts, split: split.map(Into::into), adversarial, top_threshold, out };
            let r = commands::eval(&config.load()?, &args)?;
            println!("mean {:.4} std {:.4} min {:.4} top {:.4}", r.summary.mean, r.summary.std, r.summary.min_accuracy, r.summary.top_fraction);
        }
        Command::Perturb { prompts, split, ops, intensity, seed, count, out } => {
            let args = PerturbArgs { prompts, split: split.into(), ops: parse_ops(&ops)?, intensity, seed, count, out };
            let n = commands::perturb(&args)?;
            println!("wrote {n} perturbed templates to {}", args.out.display());
        }
        Command::Mmd { prompts, kernel, bound_c, out } => {
            let (kernel, sigma, estimator) = kernel.parts();
            commands::mmd_cmd(&MmdArgs { prompts, kernel, sigma, estimator, bound_c, out })?;
        }
        Command::MmdScale { prompts, sizes, seeds, seed, kernel, out } => {
            let (kernel, sigma, estimator) = kernel.parts();
            commands::mmd_scale(&MmdScaleArgs { prompts, sizes, seeds, seed, kernel, sigma, estimator, out })?;
        }
        Command::Ablate { config, k, t, extra, seeds, out_dir } => {
            let grid = AblationGrid { k_values: k, t_values: t, n_seeds: seeds, extra_cells: parse_cells(&extra)? };
            let dir = commands::ablate(&config.load()?, &grid, &out_dir)?;
            println!("{}", dir.display());
        }
        Command::Scale { config, counts, seeds, out_dir } => {
            let dir = commands::scale(&config.load()?, &counts, seeds, &out_dir)?;
            println!("{}", dir.display());
        }
        Command::Report { inputs, out_dir } => {
            commands::report(&inputs, &out_dir)?;
            println!("{}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
