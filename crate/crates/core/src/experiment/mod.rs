//! End-to-end experiments on a synthetic task: a PAFT arm against a
//! fixed-prompt arm, the `K × T` ablation grid and the prompt-count scaling run.

mod ablation;
mod scaling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate_rows, perturb_template, EvalError, EvalReport, PerturbOp, PerturbSpec};
use crate::forge::{parse_generated, partition_prompts, ForgeError, MetaStrategy, OfflineGenerator, PromptSet, PromptTemplate, Split, Strategy};
use crate::model::{FeatureNorm, HashedTextClassifier, ModelConfig, ModelError, OptimizerConfig, OptimizerRule};
use crate::rng::derive_seed;
use crate::sched::{train_paft, train_with_templates, TrainError, TrainPlan, TrainTrace};
use crate::task::{Dataset, Family, TaskError};

pub use ablation::{run_ablation, AblationCell, AblationGrid, AblationResult};
pub use scaling::{run_scaling, subsample_indices, ScalingObservation, ScalingResult, ScalingRow};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid prompt count {size} for {pool} training prompts")]
    InvalidSize { size: usize, pool: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cell K={k}, T={t}, seed {seed}: {source}")]
    Cell { k: usize, t: usize, seed: u64, source: Box<ExperimentError> },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything needed to reproduce one experiment, as flat keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: String,
    pub n_train: usize,
    pub n_test: usize,
    /// Size of the generated prompt pool before partitioning.
    pub n_prompts: usize,
    pub train_weight: u32,
    pub test_weight: u32,
    pub epochs: usize,
    pub steps_per_prompt: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerRule,
    pub weight_decay: f64,
    pub dim: usize,
    pub ngram_sizes: Vec<usize>,
    pub hidden: Option<usize>,
    pub feature_norm: FeatureNorm,
    pub top_threshold: f64,
    pub n_adversarial: usize,
    pub perturb_intensity: f64,
    pub perturb_ops: Vec<PerturbOp>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: "pattern".into(),
            n_train: 500,
            n_test: 200,
            n_prompts: 50,
            train_weight: 4,
            test_weight: 1,
            epochs: 3,
            steps_per_prompt: 4,
            learning_rate: 0.01,
            batch_size: 1,
            optimizer: OptimizerRule::Adamw,
            weight_decay: 0.0,
            dim: 1 << 14,
            ngram_sizes: vec![3, 4],
            hidden: None,
            feature_norm: FeatureNorm::L2,
            top_threshold: 0.9,
            n_adversarial: 10,
            perturb_intensity: 0.15,
            perturb_ops: PerturbOp::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn family(&self) -> Result<Family, ExperimentError> {
        Ok(Family::from_name(&self.family)?)
    }

    /// Plan for a run seeded with `seed`.
    pub fn plan(&self, seed: u64) -> TrainPlan {
        TrainPlan {
            epochs: self.epochs,
            steps_per_prompt: self.steps_per_prompt,
            learning_rate: self.learning_rate,
            seed,
            shuffle_data: true,
            batch_size: self.batch_size,
            prompt_seed: None,
            data_seed: None,
        }
    }

    pub fn model_config(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            ngram_sizes: self.ngram_sizes.clone(),
            hidden: self.hidden,
            feature_norm: self.feature_norm,
            optimizer: OptimizerConfig { rule: self.optimizer, weight_decay: self.weight_decay, ..Default::default() },
            init_seed: derive_seed("experiment/init", seed),
        }
    }

    /// Spec for the `i`-th adversarial prompt: one op per prompt, cycling
    /// through `perturb_ops`, so the suite covers every op.
    pub fn perturb_spec(&self, seed: u64, i: usize) -> PerturbSpec {
        let ops = if self.perturb_ops.is_empty() { vec![] } else { vec![self.perturb_ops[i % self.perturb_ops.len()]] };
        PerturbSpec::new(ops, self.perturb_intensity, derive_seed("experiment/perturb", seed))
    }
}

/// Data and prompts for one seed.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub train: Dataset,
    pub test: Dataset,
    /// Partitioned candidate prompts.
    pub prompts: PromptSet,
    /// The single template used by the fixed-prompt arm.
    pub fixed: PromptTemplate,
    /// Perturbed copies of the first `n_adversarial` test prompts.
    pub adversarial: Vec<PromptTemplate>,
}

/// Generates `n` distinct candidate templates offline, half zero-shot and half few-shot.
pub fn offline_prompt_pool(family: Family, n: usize, seed: u64) -> Result<PromptSet, ExperimentError> {
    let gen = match family {
        Family::Pattern => OfflineGenerator::pattern(seed),
        Family::Pattern4 => OfflineGenerator::pattern4(seed),
    };
    let zero = n - n / 2;
    let mut all = parse_generated(&gen.generate_raw(MetaStrategy::ZeroShot, zero), Strategy::ZeroShot, "offline")?;
    all.extend(parse_generated(&gen.generate_raw(MetaStrategy::FewShot, n / 2), Strategy::FewShot, "offline")?);
    let mut set = PromptSet::dedup_from(family.name(), all);
    if set.len() != n {
        return Err(ExperimentError::InvalidArgument(format!("offline grammar yielded {} of {n} prompts", set.len())));
    }
    set.partition_seed = seed;
    Ok(set)
}

impl Workbench {
    /// Synthetic data and an offline prompt pool, all derived from `seed`.
    pub fn synthetic(config: &ExperimentConfig, seed: u64) -> Result<Self, ExperimentError> {
        let family = config.family()?;
        let schema = family.schema();
        let train = Dataset::new(schema.clone(), family.generate(config.n_train, derive_seed("experiment/train", seed)))?;
        let test = Dataset::new(schema, family.generate(config.n_test, derive_seed("experiment/test", seed)))?;
        let pool = offline_prompt_pool(family, config.n_prompts, seed)?;
        let prompts = partition_prompts(&pool, config.train_weight, config.test_weight, seed)?;
        Self::assemble(config, seed, train, test, prompts, family.human_template())
    }

    /// A workbench over caller-supplied data and an already partitioned prompt set.
    pub fn assemble(
        config: &ExperimentConfig,
        seed: u64,
        train: Dataset,
        test: Dataset,
        prompts: PromptSet,
        fixed: PromptTemplate,
    ) -> Result<Self, ExperimentError> {
        let adversarial = prompts
            .split(Split::Test)
            .into_iter()
            .take(config.n_adversarial)
            .enumerate()
            .map(|(i, t)| perturb_template(t, &config.perturb_spec(seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { config: config.clone(), seed, train, test, prompts, fixed, adversarial })
    }

    pub fn test_prompts(&self) -> Vec<PromptTemplate> {
        self.prompts.split_owned(Split::Test)
    }

    pub fn train_prompts(&self) -> Vec<PromptTemplate> {
        self.prompts.split_owned(Split::Train)
    }

    pub fn new_model(&self) -> Result<HashedTextClassifier, ExperimentError> {
        Ok(HashedTextClassifier::new(self.config.model_config(self.seed), self.train.schema.label_space.clone())?)
    }

    /// Trains on `templates` with the plan for this seed (optionally overriding K and T).
    pub fn train_on(
        &self,
        templates: &[PromptTemplate],
        k: Option<usize>,
        t: Option<usize>,
    ) -> Result<(HashedTextClassifier, TrainTrace), ExperimentError> {
        let mut plan = self.config.plan(self.seed);
        if let Some(k) = k {
            plan.steps_per_prompt = k;
        }
        if let Some(t) = t {
            plan.epochs = t;
        }
        let mut model = self.new_model()?;
        let trace = train_with_templates(&plan, &self.train, templates, &mut model)?;
        Ok((model, trace))
    }

    /// Scores a trained model on the unseen test prompts and the adversarial prompts.
    pub fn evaluate(&self, model: &HashedTextClassifier) -> Result<EvalReport, ExperimentError> {
        let rows = evaluate_rows(model, &self.test, &self.test_prompts())?;
        let mut report = EvalReport::from_rows(rows, self.config.top_threshold)?;
        if !self.adversarial.is_empty() {
            report = report.with_adversarial(evaluate_rows(model, &self.test, &self.adversarial)?)?;
        }
        Ok(report)
    }

    pub fn run_paft(&self) -> Result<RunOutcome, ExperimentError> {
        let mut model = self.new_model()?;
        let trace = train_paft(&self.config.plan(self.seed), &self.train, &self.prompts, &mut model)?;
        let report = self.evaluate(&model)?;
        Ok(RunOutcome { model, trace, report })
    }

    pub fn run_fixed(&self) -> Result<RunOutcome, ExperimentError> {
        let (model, trace) = self.train_on(std::slice::from_ref(&self.fixed), None, None)?;
        let report = self.evaluate(&model)?;
        Ok(RunOutcome { model, trace, report })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: HashedTextClassifier,
    pub trace: TrainTrace,
    pub report: EvalReport,
}
