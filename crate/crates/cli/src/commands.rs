use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use paft_core::eval::{evaluate_rows, perturb_template, EvalReport, PerturbOp, PerturbSpec, ReportBundle};
use paft_core::experiment::{run_ablation, run_scaling, AblationGrid, Workbench};
use paft_core::forge::{
    compose_meta_prompt, generate_templates, partition_prompts, validate_template, GeneratorClient, HttpTransport,
    MetaStrategy, OfflineGenerator, PromptSet, PromptTemplate, RetryingClient, Split,
};
use paft_core::mmd::{curve_to_csv, disc_upper_bound, embed_prompts, mmd, scaling_curve, Estimator, Kernel, EMBED_DIM};
use paft_core::model::HashedTextClassifier;
use paft_core::task::{load_dataset, Dataset, Family};

use crate::config::{run_dir, RunConfig};
use crate::error::CliError;

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn read_prompts(path: &Path) -> Result<PromptSet, CliError> {
    PromptSet::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Where templates come from.
pub enum Generator {
    Offline { seed: u64, family: Family },
    Http { endpoint: String, model: String, timeout: Duration, retries: u32 },
}

impl Generator {
    /// With `Offline`, no transport is ever constructed, so no network access is possible.
    pub fn client(&self) -> Result<Box<dyn GeneratorClient>, CliError> {
        Ok(match self {
            Generator::Offline { seed, family: Family::Pattern } => Box::new(OfflineGenerator::pattern(*seed)),
            Generator::Offline { seed, family: Family::Pattern4 } => Box::new(OfflineGenerator::pattern4(*seed)),
            Generator::Http { endpoint, model, timeout, retries } => {
                Box::new(RetryingClient::new(HttpTransport::from_env(endpoint.clone(), model.clone())?, *timeout, *retries))
            }
        })
    }
}

pub struct GenerateArgs {
    pub task: String,
    pub strategies: Vec<MetaStrategy>,
    pub count: usize,
    pub family: Family,
    pub example_format: Option<String>,
    pub out: PathBuf,
}

/// Composes meta-prompts, collects and parses completions, keeps templates
/// that fit the family schema, dedups and writes an unpartitioned set.
pub fn forge_generate(gen: &Generator, args: &GenerateArgs) -> Result<usize, CliError> {
    let client = gen.client()?;
    let schema = args.family.schema();
    let human = args.family.human_template();
    let example = args.example_format.clone().unwrap_or(human.body.clone());
    let mut all = Vec::new();
    for &strategy in &args.strategies {
        let ex = (strategy == MetaStrategy::FewShot).then_some(example.as_str());
        let meta = compose_meta_prompt(&args.task, strategy, args.count, ex)?;
        let origin = client.identity();
        all.extend(generate_templates(client.as_ref(), &meta, &origin)?);
    }
    let (valid, rejected): (Vec<PromptTemplate>, Vec<PromptTemplate>) =
        all.into_iter().partition(|t| validate_template(t, &schema).is_ok());
    for t in &rejected {
        eprintln!("dropped {}: {}", t.id, validate_template(t, &schema));
    }
    let set = PromptSet::dedup_from(schema.schema_id.clone(), valid);
    if set.is_empty() {
        return Err(CliError::Data("no usable templates were generated".into()));
    }
    write(&args.out, set.to_json())?;
    Ok(set.len())
}

pub fn forge_partition(input: &Path, train_weight: u32, test_weight: u32, seed: u64, out: &Path) -> Result<(usize, usize), CliError> {
    let set = partition_prompts(&read_prompts(input)?, train_weight, test_weight, seed)?;
    write(out, set.to_json())?;
    Ok((set.split(Split::Train).len(), set.split(Split::Test).len()))
}

/// Builds the workbench for `cfg.seed` from configured files or synthetically.
pub fn workbench(cfg: &RunConfig) -> Result<Workbench, CliError> {
    let exp = &cfg.experiment;
    if cfg.dataset.is_none() && cfg.test_dataset.is_none() && cfg.prompts.is_none() {
        return Ok(Workbench::synthetic(exp, exp.seed)?);
    }
    let family = exp.family()?;
    let synth = Workbench::synthetic(exp, exp.seed)?;
    let load = |p: &Option<PathBuf>, fallback: Dataset| -> Result<Dataset, CliError> {
        match p {
            Some(path) => Ok(Dataset::new(family.schema(), load_dataset(path, &family.schema())?)?),
            None => Ok(fallback),
        }
    };
    let train = load(&cfg.dataset, synth.train.clone())?;
    let test = load(&cfg.test_dataset, synth.test.clone())?;
    let prompts = match &cfg.prompts {
        Some(p) => read_prompts(p)?,
        None => synth.prompts.clone(),
    };
    Ok(Workbench::assemble(exp, exp.seed, train, test, prompts, family.human_template())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Paft,
    Fixed,
}

/// Trains one arm and writes config, prompts, trace, checkpoint and report into its run directory.
pub fn train(cfg: &RunConfig, arm: Arm, out_dir: &Path) -> Result<PathBuf, CliError> {
    let name = match arm {
        Arm::Paft => "train-paft",
        Arm::Fixed => "train-fixed",
    };
    let dir = run_dir(out_dir, name, cfg, "")?;
    let wb = workbench(cfg)?;
    let outcome = match arm {
        Arm::Paft => wb.run_paft()?,
        Arm::Fixed => wb.run_fixed()?,
    };
    write(&dir.join("config.toml"), cfg.to_toml())?;
    write(&dir.join("prompts.json"), wb.prompts.to_json())?;
    write(&dir.join("adversarial.json"), PromptSet::new(wb.prompts.schema_id.clone(), wb.seed, wb.adversarial.clone())?.to_json())?;
    outcome.trace.write(&dir.join("trace.jsonl"))?;
    outcome.model.save(&dir.join("model.json"))?;
    outcome.report.write(&dir.join("report.json"))?;
    Ok(dir)
}

pub struct EvalArgs {
    pub model: PathBuf,
    pub prompts: PathBuf,
    pub split: Option<Split>,
    pub adversarial: Option<PathBuf>,
    pub top_threshold: f64,
    pub out: PathBuf,
}

/// Scores a checkpoint on the test data of `cfg` over one split of a prompt file.
pub fn eval(cfg: &RunConfig, args: &EvalArgs) -> Result<EvalReport, CliError> {
    let model = HashedTextClassifier::load(&args.model)?;
    let wb = workbench(cfg)?;
    let set = read_prompts(&args.prompts)?;
    let prompts = match args.split {
        Some(s) => set.split_owned(s),
        None => set.templates().to_vec(),
    };
    if prompts.is_empty() {
        return Err(CliError::Invalid("no prompts in the selected split".into()));
    }
    let mut report = EvalReport::from_rows(evaluate_rows(&model, &wb.test, &prompts)?, args.top_threshold)?;
    if let Some(p) = &args.adversarial {
        let adv = read_prompts(p)?;
        report = report.with_adversarial(evaluate_rows(&model, &wb.test, adv.templates())?)?;
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.write(&args.out)?;
    Ok(report)
}

pub struct PerturbArgs {
    pub prompts: PathBuf,
    pub split: Split,
    pub ops: Vec<PerturbOp>,
    pub intensity: f64,
    pub seed: u64,
    pub count: usize,
    pub out: PathBuf,
}

/// Perturbs the first `count` prompts of a split; with several ops, prompt `i` gets op `i mod |ops|`.
pub fn perturb(args: &PerturbArgs) -> Result<usize, CliError> {
    if args.ops.is_empty() {
        return Err(CliError::Invalid("at least one op is required".into()));
    }
    let set = read_prompts(&args.prompts)?;
    let adv = set
        .split(args.split)
        .into_iter()
        .take(args.count)
        .enumerate()
        .map(|(i, t)| perturb_template(t, &PerturbSpec::new(vec![args.ops[i % args.ops.len()]], args.intensity, args.seed)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = adv.len();
    write(&args.out, PromptSet::new(set.schema_id.clone(), set.partition_seed, adv)?.to_json())?;
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Rbf,
    Linear,
}

fn kernel(choice: KernelChoice, sigma: Option<f64>, points: &[&[f64]]) -> Result<Kernel, CliError> {
    Ok(match (choice, sigma) {
        (KernelChoice::Linear, _) => Kernel::Linear,
        (KernelChoice::Rbf, Some(s)) => Kernel::rbf(s)?,
        (KernelChoice::Rbf, None) => Kernel::rbf_median(points),
    })
}

pub struct MmdArgs {
    pub prompts: PathBuf,
    pub kernel: KernelChoice,
    pub sigma: Option<f64>,
    pub estimator: Estimator,
    pub bound_c: Option<f64>,
    pub out: PathBuf,
}

/// MMD between the train and test splits of a prompt set.
pub fn mmd_cmd(args: &MmdArgs) -> Result<(), CliError> {
    let set = read_prompts(&args.prompts)?;
    let train = embed_prompts(&set.split_owned(Split::Train), EMBED_DIM);
    let test = embed_prompts(&set.split_owned(Split::Test), EMBED_DIM);
    let xs: Vec<&[f64]> = train.iter().map(|e| e.vector.as_slice()).collect();
    let ys: Vec<&[f64]> = test.iter().map(|e| e.vector.as_slice()).collect();
    let pooled: Vec<&[f64]> = xs.iter().chain(&ys).copied().collect();
    let k = kernel(args.kernel, args.sigma, &pooled)?;
    let est = mmd(&xs, &ys, &k, args.estimator)?;
    let bound = args.bound_c.map(|c| disc_upper_bound(&est, c)).transpose()?;
    write(&args.out, pretty(&serde_json::json!({ "estimate": est, "bound": bound }))?)
}

pub struct MmdScaleArgs {
    pub prompts: PathBuf,
    pub sizes: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
    pub kernel: KernelChoice,
    pub sigma: Option<f64>,
    pub estimator: Estimator,
    pub out: PathBuf,
}

/// MMD of growing train-prompt subsets to the test split; writes CSV and JSON.
pub fn mmd_scale(args: &MmdScaleArgs) -> Result<(), CliError> {
    let set = read_prompts(&args.prompts)?;
    let train = embed_prompts(&set.split_owned(Split::Train), EMBED_DIM);
    let test = embed_prompts(&set.split_owned(Split::Test), EMBED_DIM);
    let pooled: Vec<&[f64]> = train.iter().chain(&test).map(|e| e.vector.as_slice()).collect();
    let k = kernel(args.kernel, args.sigma, &pooled)?;
    let curve = scaling_curve(&train, &test, &args.sizes, &k, args.estimator, args.seeds, args.seed)?;
    write(&args.out, curve_to_csv(&curve))?;
    write(&args.out.with_extension("json"), pretty(&curve)?)
}

/// Runs the `K × T` grid; writes markdown, CSV and JSON into the run directory.
pub fn ablate(cfg: &RunConfig, grid: &AblationGrid, out_dir: &Path) -> Result<PathBuf, CliError> {
    if cfg.dataset.is_some() || cfg.test_dataset.is_some() || cfg.prompts.is_some() {
        return Err(CliError::Invalid("ablation runs on synthetic data; remove dataset/prompts keys".into()));
    }
    let dir = run_dir(out_dir, "ablate", cfg, &serde_json::to_string(grid)?)?;
    let result = run_ablation(&cfg.experiment, grid)?;
    write(&dir.join("config.toml"), cfg.to_toml())?;
    write(&dir.join("ablation.md"), result.to_markdown())?;
    write(&dir.join("ablation.csv"), result.to_csv())?;
    write(&dir.join("ablation.json"), pretty(&result)?)?;
    Ok(dir)
}

/// Runs the prompt-count scaling experiment; writes CSV and JSON into the run directory.
pub fn scale(cfg: &RunConfig, counts: &[usize], seeds: usize, out_dir: &Path) -> Result<PathBuf, CliError> {
    if cfg.dataset.is_some() || cfg.test_dataset.is_some() || cfg.prompts.is_some() {
        return Err(CliError::Invalid("scaling runs on synthetic data; remove dataset/prompts keys".into()));
    }
    let dir = run_dir(out_dir, "scale", cfg, &format!("{counts:?}/{seeds}"))?;
    let result = run_scaling(&cfg.experiment, counts, seeds)?;
    write(&dir.join("config.toml"), cfg.to_toml())?;
    write(&dir.join("scaling.csv"), result.to_csv())?;
    write(&dir.join("scaling.json"), pretty(&result)?)?;
    Ok(dir)
}

/// Bundles eval reports (named by their parent directory, or file stem) into one markdown/CSV/JSON set.
pub fn report(inputs: &[PathBuf], out_dir: &Path) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Invalid("no report files given".into()));
    }
    let entries = inputs
        .iter()
        .map(|p| {
            let r = EvalReport::read(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let name = match p.file_stem().and_then(|s| s.to_str()) {
                Some("report") => p.parent().and_then(|d| d.file_name()).and_then(|s| s.to_str()).unwrap_or("report"),
                Some(stem) => stem,
                None => "report",
            };
            Ok((name.to_string(), r))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ReportBundle::new(entries)?.write(out_dir)?;
    Ok(())
}
