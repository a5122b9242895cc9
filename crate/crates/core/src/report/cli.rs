use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::emit::{emit_report, InterpretArtifacts, UtilityRow};
use super::metrics::{compute_metrics, EvaluationReport};
use crate::data::{load_csv, prepare, synth_blobs, write_csv, Dataset, FittedPreprocessor, Schema, SplitIndices};
use crate::error::{Error, Result};
use crate::interpret::{
    attribute, attribution_similarity_matrix, entropy_stats, icaa, indecision_scan, occlusion_curve,
    prototype_match, rank_features, saliency, tsne_embed, ActivationBank, ActivationSpace, AttributionMethod,
    ClassTarget, Explainable,
};
use crate::model::{evaluate, train, Checkpoint, HybridModel, ModelSpec, TrainingHistory};
use crate::nn::ClassWeights;
use crate::numerics::SeededRng;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const PREPROCESSOR_FILE: &str = "preprocessor.json";
pub const HISTORY_JSON_FILE: &str = "history.json";

#[derive(Debug, Parser)]
#[command(name = "iqnncs", version, about = "Hybrid quantum classifier with interpretability reports")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "IQNNCS_SEED")]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct DataArgs {
    /// Input CSV (default `<out>/data.csv`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Column schema JSON (default `<out>/schema.json`).
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Method {
    Saliency,
    Gradient,
    GradInput,
    Ig,
    Smoothgrad,
    Icaa,
    Occlusion,
    Prototype,
    Indecision,
    Entropy,
    Similarity,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-blob dataset and its schema.
    Synth {
        #[arg(long)]
        n_per_class: Option<usize>,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Split, fit standardization and PCA, and save the fitted state.
    Preprocess {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train the hybrid model and save checkpoint, history and test metrics.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
    },
    /// Metrics of the saved checkpoint on one split.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
    },
    /// Interpretability artifacts for test-split instances.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        method: Vec<Method>,
        /// Test-split index; repeat or comma-separate for several.
        #[arg(long, value_delimiter = ',')]
        instance: Vec<usize>,
        /// Target class; defaults to the predicted class.
        #[arg(long)]
        class: Option<usize>,
        #[arg(long)]
        perturbations: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// t-SNE of quantum activations.
    Embed {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Metrics, history and every interpretability artifact.
    Report {
        #[command(flatten)]
        data: DataArgs,
    },
}

/// Preprocessing state saved next to the checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessState {
    pub seed: u64,
    pub split: SplitIndices,
    pub preprocessor: FittedPreprocessor,
}

/// Parses `argv` (program name first) and runs it. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    let seed = cli.seed.unwrap_or_else(|| cfg.seed());
    cfg.apply_seed(seed);
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    match cli.command {
        Command::Synth {
            n_per_class,
            classes,
            dim,
            separation,
        } => {
            let s = &mut cfg.synth;
            s.n_per_class = n_per_class.unwrap_or(s.n_per_class);
            s.n_classes = classes.unwrap_or(s.n_classes);
            s.dim = dim.unwrap_or(s.dim);
            s.separation = separation.unwrap_or(s.separation);
            synth(&cfg)
        }
        Command::Preprocess { data } => {
            apply_data_args(&mut cfg, data);
            cfg.validate()?;
            let (raw, one_hot) = load_raw(&cfg)?;
            let prepared = prepare(&raw, one_hot, &cfg.preprocessing, &mut SeededRng::new(seed))?;
            write_state(&cfg, &prepared.split, &prepared.preprocessor)
        }
        Command::Train { data, epochs, patience } => {
            apply_data_args(&mut cfg, data);
            cfg.training.epochs = epochs.unwrap_or(cfg.training.epochs);
            cfg.training.patience = patience.unwrap_or(cfg.training.patience).min(cfg.training.epochs);
            cfg.validate()?;
            train_command(&cfg)
        }
        Command::Evaluate { data, split } => {
            apply_data_args(&mut cfg, data);
            let ctx = Context::load(&cfg)?;
            let report = ctx.metrics(ctx.split(split))?;
            let dir = out.join(match split {
                Split::Test => "",
                Split::Val => "eval_val",
                Split::Train => "eval_train",
            });
            emit_report(Some(&report), None, &InterpretArtifacts::default(), &dir)?;
            println!("{:?} accuracy {:.4} macro-F1 {:.4}", split, report.accuracy, report.macro_f1);
            Ok(())
        }
        Command::Explain {
            data,
            method,
            instance,
            class,
            perturbations,
            sigma,
            threshold,
        } => {
            apply_data_args(&mut cfg, data);
            let ind = &mut cfg.interpret.indecision;
            ind.n_perturb = perturbations.unwrap_or(ind.n_perturb);
            ind.sigma = sigma.unwrap_or(ind.sigma);
            ind.threshold = threshold.unwrap_or(ind.threshold);
            let instances = if instance.is_empty() { cfg.interpret.instances.clone() } else { instance };
            let ctx = Context::load(&cfg)?;
            let arts = ctx.explain(&cfg, &method, &instances, class)?;
            emit_report(None, None, &arts, &out)?;
            Ok(())
        }
        Command::Embed {
            data,
            split,
            perplexity,
            iterations,
        } => {
            apply_data_args(&mut cfg, data);
            let t = &mut cfg.interpret.tsne;
            t.perplexity = perplexity.unwrap_or(t.perplexity);
            t.iterations = iterations.unwrap_or(t.iterations);
            let ctx = Context::load(&cfg)?;
            let mut arts = ctx.artifacts_base();
            arts.embedding = Some(ctx.embed(&cfg, ctx.split(split))?);
            emit_report(None, None, &arts, &out)?;
            Ok(())
        }
        Command::Report { data } => {
            apply_data_args(&mut cfg, data);
            let ctx = Context::load(&cfg)?;
            let metrics = ctx.metrics(&ctx.test)?;
            let history = read_history(&out)?;
            let instances = cfg.interpret.instances.clone();
            let mut arts = ctx.explain(&cfg, &[Method::All], &instances, None)?;
            arts.embedding = Some(ctx.embed(&cfg, &ctx.test)?);
            arts.utility = utility(&ctx, &arts)?;
            emit_report(Some(&metrics), history.as_ref(), &arts, &out)?;
            Ok(())
        }
    }
}

fn apply_data_args(cfg: &mut RunConfig, args: DataArgs) {
    if args.data.is_some() {
        cfg.data = args.data;
    }
    if args.schema.is_some() {
        cfg.schema = args.schema;
    }
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let s = &cfg.synth;
    let data = synth_blobs(s.n_per_class, s.n_classes, s.dim, s.separation, &mut SeededRng::new(cfg.seed()))?;
    let out = cfg.out_dir();
    write_csv(&data, &out.join("data.csv"))?;
    Schema::for_dataset(&data).write_json_file(&out.join("schema.json"))?;
    println!("wrote {} rows to {}", data.len(), out.join("data.csv").display());
    Ok(())
}

fn load_raw(cfg: &RunConfig) -> Result<(Dataset, Vec<crate::data::OneHotMap>)> {
    let schema = Schema::from_json_file(&cfg.schema_path())?;
    load_csv(&cfg.data_path(), &schema)
}

fn write_state(cfg: &RunConfig, split: &SplitIndices, pre: &FittedPreprocessor) -> Result<()> {
    let state = PreprocessState {
        seed: cfg.seed(),
        split: split.clone(),
        preprocessor: pre.clone(),
    };
    let path = cfg.out_dir().join(PREPROCESSOR_FILE);
    fs::write(&path, serde_json::to_string_pretty(&state)? + "\n").map_err(|e| Error::io(&path, e))
}

fn train_command(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir();
    let (raw, one_hot) = load_raw(cfg)?;
    let mut rng = SeededRng::new(cfg.seed());
    let prepared = prepare(&raw, one_hot, &cfg.preprocessing, &mut rng)?;
    write_state(cfg, &prepared.split, &prepared.preprocessor)?;
    let spec = ModelSpec {
        input_dim: prepared.train.n_features(),
        n_classes: raw.n_classes(),
        circuit: cfg.circuit,
        post_hidden: cfg.model.post_hidden.clone(),
        dropout: cfg.model.dropout,
    };
    let model = HybridModel::new(&spec, &mut rng)?;
    info!("training {} parameters on {} samples", model.n_params(), prepared.train.len());
    let (model, history) = train(model, &prepared.train, &prepared.val, Some(&prepared.test), &cfg.training)?;
    Checkpoint::from_model(&model, raw.class_names.clone(), Some(prepared.preprocessor.fingerprint()))
        .write(&out.join(CHECKPOINT_FILE))?;
    let path = out.join(HISTORY_JSON_FILE);
    fs::write(&path, serde_json::to_string_pretty(&history)? + "\n").map_err(|e| Error::io(&path, e))?;
    let eval = evaluate(&model, &prepared.test, &ClassWeights::uniform(raw.n_classes()))?;
    let report = compute_metrics(&prepared.test.labels, &eval.predictions, raw.n_classes())?
        .with_class_names(&raw.class_names);
    emit_report(Some(&report), Some(&history), &InterpretArtifacts::default(), &out)?;
    println!(
        "trained {} epochs (best {}), test accuracy {:.4}, macro-F1 {:.4}",
        history.epochs.len(),
        history.best_epoch + 1,
        report.accuracy,
        report.macro_f1
    );
    Ok(())
}

fn read_history(out: &Path) -> Result<Option<TrainingHistory>> {
    let path = out.join(HISTORY_JSON_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Model plus transformed splits, rebuilt from saved state.
struct Context {
    model: HybridModel,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    train: Dataset,
    val: Dataset,
    test: Dataset,
}

impl Context {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let out = cfg.out_dir();
        let path = out.join(PREPROCESSOR_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let state: PreprocessState =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        let ckpt = Checkpoint::read(&out.join(CHECKPOINT_FILE))?;
        if let Some(h) = &ckpt.preprocessing_hash {
            if *h != state.preprocessor.fingerprint() {
                return Err(Error::Incompatible(
                    "checkpoint was trained with a different preprocessor; rerun train".into(),
                ));
            }
        }
        let (raw, _) = load_raw(cfg)?;
        let pre = &state.preprocessor;
        let model = ckpt.to_model_for(pre.output_dim(), raw.n_classes())?;
        let part = |idx: &[usize]| -> Result<Dataset> {
            if let Some(&i) = idx.iter().find(|&&i| i >= raw.len()) {
                return Err(Error::Incompatible(format!("saved split refers to row {i} beyond the data")));
            }
            pre.transform(&raw.subset(idx))
        };
        let test = part(&state.split.test)?;
        Ok(Self {
            class_names: raw.class_names.clone(),
            feature_names: test.feature_names.clone(),
            train: part(&state.split.train)?,
            val: part(&state.split.val)?,
            test,
            model,
        })
    }

    fn split(&self, s: Split) -> &Dataset {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    fn metrics(&self, data: &Dataset) -> Result<EvaluationReport> {
        let eval = evaluate(&self.model, data, &ClassWeights::uniform(self.model.n_classes()))?;
        Ok(compute_metrics(&data.labels, &eval.predictions, self.model.n_classes())?
            .with_class_names(&self.class_names))
    }

    fn artifacts_base(&self) -> InterpretArtifacts {
        InterpretArtifacts {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            ..Default::default()
        }
    }

    fn rows(data: &Dataset) -> Vec<Vec<f64>> {
        (0..data.len()).map(|i| data.row(i).to_vec()).collect()
    }

    fn instance(&self, id: usize) -> Result<&[f64]> {
        if id >= self.test.len() {
            return Err(Error::Index(format!(
                "instance {id} out of range for a test split of {} rows",
                self.test.len()
            )));
        }
        Ok(self.test.row(id))
    }

    fn explain(
        &self,
        cfg: &RunConfig,
        methods: &[Method],
        instances: &[usize],
        class: Option<usize>,
    ) -> Result<InterpretArtifacts> {
        let opts = &cfg.interpret;
        let has = |m: Method| methods.contains(&m) || methods.contains(&Method::All);
        let mut arts = self.artifacts_base();
        let attr_methods: Vec<AttributionMethod> = [
            (Method::Saliency, AttributionMethod::Saliency),
            (Method::Gradient, AttributionMethod::Gradient),
            (Method::GradInput, AttributionMethod::GradientTimesInput),
            (
                Method::Ig,
                AttributionMethod::IntegratedGradients {
                    steps: opts.ig_steps,
                    baseline: None,
                },
            ),
            (
                Method::Smoothgrad,
                AttributionMethod::SmoothGrad {
                    samples: opts.smoothgrad_samples,
                    sigma: opts.smoothgrad_sigma,
                    seed: cfg.seed(),
                },
            ),
        ]
        .into_iter()
        .filter(|(m, _)| has(*m))
        .map(|(_, a)| a)
        .collect();

        let bank = if has(Method::Prototype) {
            Some(ActivationBank::build(&self.model, &self.train)?)
        } else {
            None
        };
        for &id in instances {
            let x = self.instance(id)?;
            let predicted = self.model.predict(x)?;
            let target = class.unwrap_or(predicted);
            for m in &attr_methods {
                arts.attributions.push(attribute(&self.model, x, target, m)?.for_instance(id));
            }
            if has(Method::Icaa) {
                let mut r = icaa(&self.model, x, &AttributionMethod::Gradient)?;
                r.instance = Some(id);
                r.attributions.iter_mut().for_each(|a| a.instance = Some(id));
                r.class_names = self.class_names.clone();
                arts.icaa.push(r);
            }
            if has(Method::Occlusion) {
                let ranking = rank_features(&saliency(&self.model, x, predicted)?);
                arts.occlusion.push((id, occlusion_curve(&self.model, x, &ranking, None)?));
            }
            if let Some(bank) = &bank {
                let q = self.model.activation(x)?;
                arts.prototypes.push((id, prototype_match(&q, self.test.labels[id], bank, opts.prototype_top_k)?));
            }
        }
        let test_rows = Self::rows(&self.test);
        if has(Method::Indecision) {
            arts.indecision = Some(indecision_scan(&self.model, &test_rows, &opts.indecision)?);
        }
        if has(Method::Entropy) {
            arts.entropy = Some(entropy_stats(&self.model, &test_rows, opts.entropy_bins)?);
        }
        if has(Method::Similarity) {
            let target = class.map_or(ClassTarget::Predicted, ClassTarget::Fixed);
            arts.similarity = Some(attribution_similarity_matrix(
                &self.model,
                &test_rows,
                &AttributionMethod::Gradient,
                target,
            )?);
        }
        Ok(arts)
    }

    fn embed(&self, cfg: &RunConfig, data: &Dataset) -> Result<crate::interpret::Embedding2D> {
        let acts = Self::rows(data)
            .iter()
            .map(|x| self.model.activation(x))
            .collect::<Result<Vec<_>>>()?;
        tsne_embed(&acts, &data.labels, &cfg.interpret.tsne)
    }
}

/// Raw measurements behind a method-utility table. Grading is left to the
/// reader.
fn utility(ctx: &Context, arts: &InterpretArtifacts) -> Result<Vec<UtilityRow>> {
    let row = |method: &str, measurement: &str, value: f64| UtilityRow {
        method: method.into(),
        measurement: measurement.into(),
        value,
    };
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut rows = Vec::new();
    if let Some(ind) = &arts.indecision {
        let stds: Vec<f64> = ind.rows.iter().map(|r| r.std).collect();
        rows.push(row("saliency", "mean_perturbation_std", mean(&stds)));
        rows.push(row("saliency", "indecisive_fraction", ind.n_indecisive() as f64 / ind.rows.len() as f64));
    }
    let mut completeness = Vec::new();
    for a in arts.attributions.iter().filter(|a| a.method == "ig") {
        let x = ctx.instance(a.instance.unwrap_or(0))?;
        let zero = vec![0.0; x.len()];
        let delta = ctx.model.logits(x)?[a.class] - ctx.model.logits(&zero)?[a.class];
        let total: f64 = a.scores.iter().sum();
        completeness.push((total - delta).abs() / delta.abs().max(1e-12));
    }
    rows.push(row("ig", "mean_completeness_error", mean(&completeness)));
    let first: Vec<f64> = arts.occlusion.iter().map(|(_, c)| c.drops().first().copied().unwrap_or(0.0)).collect();
    let area: Vec<f64> = arts.occlusion.iter().map(|(_, c)| c.area()).collect();
    rows.push(row("occlusion", "mean_first_step_drop", mean(&first)));
    rows.push(row("occlusion", "mean_curve_area", mean(&area)));
    let same: Vec<f64> = arts
        .prototypes
        .iter()
        .filter_map(|(_, m)| m.first().map(|m| f64::from(u8::from(m.same_class))))
        .collect();
    rows.push(row("prototype", "top1_same_class_rate", mean(&same)));
    let off: Vec<f64> = arts.icaa.iter().filter_map(|r| r.matrix.mean_off_diagonal()).collect();
    rows.push(row("icaa", "mean_off_diagonal", mean(&off)));
    if let Some(e) = &arts.entropy {
        rows.push(row("entropy", "mean_entropy", e.mean));
    }
    if let Some(e) = &arts.embedding {
        rows.push(row("tsne", "knn_label_agreement", e.knn_agreement()));
    }
    Ok(rows)
}
