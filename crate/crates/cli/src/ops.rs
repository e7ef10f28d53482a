//! Command implementations.
//!
//! Option precedence is flags > config file > defaults; the fully
//! resolved configuration is written into every output directory as
//! `run_config.json` so a run can be reproduced exactly.

use crate::{Command, Common};
use anyhow::{anyhow, bail, Context};
use finemotion_core::dataset::{
    build_corpus, compute_stats, split_corpus, tally_audits, write_corpus_lines, AuditRecord,
    CorpusRecord, RuleTagger, Split,
};
use finemotion_core::diffusion::{
    init_model_params, make_schedule, sample, training_step, Ablation, GenerationRequest,
    ModelConfig, TrainBatch, TrainItem, TrainedModel, Variant,
};
use finemotion_core::eval::{
    evaluate_model, train_contrastive, ContrastiveConfig, ContrastiveModel, ContrastivePair,
};
use finemotion_core::motion::{
    load_motion, normalize, schema::stick5_schema, save_motion, NormStats, SchemaRegistry,
};
use finemotion_core::nn::{Adam, ParamStore};
use finemotion_core::prompt::{
    expand_corpus, template, ExpandInput, ExpandOptions, FixtureDirClient, HttpLlmClient,
    LlmClient, LlmClientConfig, SystemClock, TemplateId,
};
use finemotion_core::render::{render_motion, RenderConfig, RenderFormat};
use finemotion_core::stepmark::{parse_stepmarks, strip_steps, CorpusLine};
use finemotion_core::synth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl From<anyhow::Error> for CliError {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn transport_error(error: anyhow::Error) -> CliError {
    CliError { code: 2, error }
}

fn all_dropped(error: anyhow::Error) -> CliError {
    CliError { code: 3, error }
}

/// Resolved-option helper: flag > config file > default.
struct Resolver {
    file: Option<Value>,
}

impl Resolver {
    fn new(common: &Common) -> anyhow::Result<Self> {
        let file = match &common.config {
            Some(path) => Some(
                serde_json::from_str(
                    &std::fs::read_to_string(path)
                        .with_context(|| format!("reading config {}", path.display()))?,
                )
                .with_context(|| format!("parsing config {}", path.display()))?,
            ),
            None => None,
        };
        Ok(Self { file })
    }

    fn get<T: DeserializeOwned + Clone>(&self, flag: Option<T>, key: &str, default: T) -> T {
        if let Some(v) = flag {
            return v;
        }
        if let Some(file) = &self.file {
            if let Some(raw) = file.get(key) {
                if let Ok(v) = serde_json::from_value::<T>(raw.clone()) {
                    return v;
                }
            }
        }
        default
    }
}

fn write_run_config(out: &Path, command: &str, resolved: Value) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    let snapshot = json!({ "command": command, "resolved": resolved });
    std::fs::write(out.join("run_config.json"), serde_json::to_string_pretty(&snapshot)?)?;
    Ok(())
}

fn read_corpus_lines(path: &Path) -> anyhow::Result<Vec<CorpusLine>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<CorpusLine>(l).map_err(|e| anyhow!("corpus line: {e}")))
        .collect()
}

/// Loads corpus records with motions verified on disk; motion paths are
/// resolved against the corpus file's directory.
fn load_records(corpus: &Path, mirror: bool) -> anyhow::Result<Vec<CorpusRecord>> {
    let root = corpus
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
        .canonicalize()
        .with_context(|| format!("resolving corpus root of {}", corpus.display()))?;
    let registry = SchemaRegistry::default();
    build_corpus(corpus, &root, mirror, &registry).map_err(|e| anyhow!(e))
}

fn split_records(
    records: &mut [CorpusRecord],
    test_fraction: f64,
    split_seed: u64,
) -> (Vec<CorpusRecord>, Vec<CorpusRecord>) {
    split_corpus(records, test_fraction, split_seed);
    let train: Vec<CorpusRecord> =
        records.iter().filter(|r| r.split == Some(Split::Train)).cloned().collect();
    let test: Vec<CorpusRecord> =
        records.iter().filter(|r| r.split == Some(Split::Test)).cloned().collect();
    (train, test)
}

fn train_norm_stats(records: &[CorpusRecord]) -> anyhow::Result<NormStats> {
    let mut motions = Vec::with_capacity(records.len());
    for r in records {
        motions.push(load_motion(&r.motion_file)?.0);
    }
    Ok(NormStats::from_motions(motions.iter()))
}

fn model_preset(preset: &str, variant: Variant) -> anyhow::Result<ModelConfig> {
    match preset {
        "desk" => Ok(ModelConfig::desk(variant)),
        "tiny" => Ok(ModelConfig::tiny(variant)),
        other => bail!("unknown preset `{other}` (expected tiny|desk)"),
    }
}

struct TrainSpec {
    config: ModelConfig,
    steps: usize,
    batch: usize,
    lr: f64,
}

fn train_diffusion(
    spec: &TrainSpec,
    train_records: &[CorpusRecord],
    stats: &NormStats,
    log: Option<&mut Vec<Value>>,
) -> anyhow::Result<TrainedModel> {
    let mut items = Vec::with_capacity(train_records.len());
    for r in train_records {
        let motion = load_motion(&r.motion_file)?.0;
        let normalized = normalize(&motion, stats)?;
        items.push(TrainItem {
            motion_norm: normalized.features,
            coarse: r.coarse.clone(),
            fine: Some(r.fine.clone()),
        });
    }
    if items.is_empty() {
        bail!("training split is empty");
    }
    let sched = make_schedule(spec.config.timesteps, spec.config.beta_start, spec.config.beta_end)?;
    let mut store = ParamStore::new();
    let enc = init_model_params(&mut store, &spec.config);
    let mut adam = Adam::new(spec.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.config.seed);
    let mut log_rows = Vec::new();
    for step in 0..spec.steps {
        // Cosine decay to lr/10 over the run.
        let progress = step as f64 / spec.steps as f64;
        adam.lr = spec.lr / 10.0
            + 0.5 * (spec.lr - spec.lr / 10.0) * (1.0 + (std::f64::consts::PI * progress).cos());
        let batch = TrainBatch {
            items: (0..spec.batch.min(items.len()))
                .map(|_| items[rng.gen_range(0..items.len())].clone())
                .collect(),
        };
        let loss =
            training_step(&batch, &spec.config, &sched, &mut store, &mut adam, enc.as_ref(), &mut rng)?;
        if step % 50 == 0 || step + 1 == spec.steps {
            log_rows.push(json!({"step": step, "loss": loss}));
        }
    }
    if let Some(log) = log {
        *log = log_rows;
    }
    Ok(TrainedModel {
        store,
        config: spec.config.clone(),
        stats: stats.clone(),
        schema_id: stick5_schema().id,
    })
}

fn train_evaluator(
    config: &ContrastiveConfig,
    train_records: &[CorpusRecord],
    stats: &NormStats,
    steps: usize,
    batch: usize,
    lr: f64,
) -> anyhow::Result<ContrastiveModel> {
    let mut pairs = Vec::with_capacity(train_records.len());
    for r in train_records {
        let motion = load_motion(&r.motion_file)?.0;
        let normalized = normalize(&motion, stats)?;
        pairs.push(ContrastivePair {
            text: strip_steps(&r.fine).join(" "),
            motion_norm: normalized.features,
        });
    }
    train_contrastive(&pairs, config, stats, steps, batch, lr).map_err(|e| anyhow!(e))
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { common, families, per_family } => cmd_synth(common, families, per_family),
        Command::Expand {
            common,
            inputs,
            template,
            offline_fixtures,
            retries,
            concurrency,
            requests_per_minute,
        } => cmd_expand(common, inputs, template, offline_fixtures, retries, concurrency, requests_per_minute),
        Command::Build { common, expansion, motion_root, mirror } => {
            cmd_build(common, expansion, motion_root, mirror)
        }
        Command::Stats { common, corpus, audits } => cmd_stats(common, corpus, audits),
        Command::Train {
            common,
            corpus,
            kind,
            variant,
            ablations,
            preset,
            steps,
            batch,
            lr,
            test_fraction,
            split_seed,
        } => cmd_train(
            common, corpus, kind, variant, ablations, preset, steps, batch, lr, test_fraction,
            split_seed,
        ),
        Command::Sample { common, checkpoint, coarse, fine, fine_file, frames } => {
            cmd_sample(common, checkpoint, coarse, fine, fine_file, frames)
        }
        Command::Eval { common, checkpoint, eval_checkpoint, corpus, runs, test_fraction, split_seed } => {
            cmd_eval(common, checkpoint, eval_checkpoint, corpus, runs, test_fraction, split_seed)
        }
        Command::Ablate {
            common,
            corpus,
            preset,
            steps,
            batch,
            lr,
            runs,
            test_fraction,
            split_seed,
            eval_steps,
        } => cmd_ablate(
            common, corpus, preset, steps, batch, lr, runs, test_fraction, split_seed, eval_steps,
        ),
        Command::Render { common, motion, format } => cmd_render(common, motion, format),
    }
}

fn cmd_synth(
    common: Common,
    families: Option<String>,
    per_family: Option<usize>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let seed = r.get(common.seed, "seed", 0u64);
    let families_str =
        r.get(families, "families", synth::FAMILIES.join(","));
    let per_family = r.get(per_family, "per_family", 50usize);
    let family_list: Vec<&str> = families_str.split(',').map(str::trim).collect();
    for f in &family_list {
        if !synth::FAMILIES.contains(f) {
            return Err(anyhow!("unknown family `{f}` (known: {})", synth::FAMILIES.join(", ")).into());
        }
    }
    write_run_config(
        &common.out,
        "synth",
        json!({"families": families_str, "per_family": per_family, "seed": seed}),
    )?;
    let records = synth::generate_set(&family_list, per_family, seed);
    let jsonl = synth::write_corpus(&common.out, &records).map_err(|e| anyhow!(e))?;
    println!("wrote {} records to {}", records.len(), jsonl.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_expand(
    common: Common,
    inputs: PathBuf,
    template_id: Option<String>,
    offline_fixtures: Option<PathBuf>,
    retries: Option<u32>,
    concurrency: Option<usize>,
    requests_per_minute: Option<u32>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let template_name = r.get(template_id, "template", "P8".to_string());
    let tid = TemplateId::from_str(&template_name).map_err(|e| anyhow!(e))?;
    let retries = r.get(retries, "retries", 2u32);
    let concurrency = r.get(concurrency, "concurrency", 4usize);
    let rpm = r.get(requests_per_minute, "requests_per_minute", 600u32);
    let offline: Option<PathBuf> = match offline_fixtures {
        Some(p) => Some(p),
        None => r.get(None, "offline_fixtures", None::<PathBuf>),
    };

    let text = std::fs::read_to_string(&inputs)
        .with_context(|| format!("reading inputs {}", inputs.display()))
        .map_err(CliError::from)?;
    let parsed: Vec<ExpandInput> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<ExpandInput>(l).map_err(|e| anyhow!("input line: {e}")))
        .collect::<anyhow::Result<_>>()?;

    write_run_config(
        &common.out,
        "expand",
        json!({
            "inputs": inputs.display().to_string(),
            "template": template_name,
            "offline_fixtures": offline.as_ref().map(|p| p.display().to_string()),
            "retries": retries,
            "concurrency": concurrency,
            "requests_per_minute": rpm,
        }),
    )?;

    let client: Box<dyn LlmClient> = match &offline {
        Some(dir) => Box::new(FixtureDirClient { dir: dir.clone() }),
        None => Box::new(HttpLlmClient { config: LlmClientConfig::default() }),
    };
    let options = ExpandOptions { max_retries: retries, concurrency, requests_per_minute: rpm };
    let t = template(tid);
    let report = expand_corpus(
        &parsed,
        &t,
        client.as_ref(),
        &options,
        &common.out.join("corpus.jsonl"),
        &common.out.join("expand.checkpoint.json"),
        Some(&common.out.join("exchanges.jsonl")),
        &SystemClock,
    )
    .map_err(|e| anyhow!(e))?;

    let report_json = serde_json::to_string_pretty(&report).map_err(|e| anyhow!(e))?;
    std::fs::write(common.out.join("report.json"), &report_json).map_err(|e| anyhow!(e))?;
    println!("{report_json}");
    if report.transport_failed > 0 {
        return Err(transport_error(anyhow!(
            "{} inputs failed on transport; rerun to retry them",
            report.transport_failed
        )));
    }
    if report.valid == 0 && !parsed.is_empty() {
        return Err(all_dropped(anyhow!("every input was dropped")));
    }
    Ok(())
}

fn cmd_build(
    common: Common,
    expansion: PathBuf,
    motion_root: PathBuf,
    mirror: bool,
) -> Result<(), CliError> {
    let _ = Resolver::new(&common)?;
    write_run_config(
        &common.out,
        "build",
        json!({
            "expansion": expansion.display().to_string(),
            "motion_root": motion_root.display().to_string(),
            "mirror": mirror,
        }),
    )?;
    let registry = SchemaRegistry::default();
    let root = motion_root.canonicalize().context("resolving motion root")?;
    let records = build_corpus(&expansion, &root, mirror, &registry).map_err(|e| anyhow!(e))?;
    let out_file = common.out.join("corpus.jsonl");
    write_corpus_lines(&records, &out_file).map_err(|e| anyhow!(e))?;
    println!(
        "built {} records ({} mirrored) -> {}",
        records.len(),
        records.iter().filter(|r| r.mirrored).count(),
        out_file.display()
    );
    Ok(())
}

fn cmd_stats(common: Common, corpus: PathBuf, audits: Option<PathBuf>) -> Result<(), CliError> {
    let _ = Resolver::new(&common)?;
    write_run_config(
        &common.out,
        "stats",
        json!({
            "corpus": corpus.display().to_string(),
            "audits": audits.as_ref().map(|p| p.display().to_string()),
        }),
    )?;
    let lines = read_corpus_lines(&corpus)?;
    let records: Vec<CorpusRecord> = lines
        .iter()
        .map(|line| {
            let fine = parse_stepmarks(&line.fine).map_err(|e| anyhow!("{}: {e}", line.source_id))?;
            Ok(CorpusRecord {
                motion_id: line.source_id.clone(),
                motion_file: PathBuf::from(&line.motion_file),
                coarse: line.coarse.clone(),
                fine,
                mirrored: false,
                split: None,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let stats = compute_stats(&records, &RuleTagger);
    std::fs::write(
        common.out.join("stats.json"),
        serde_json::to_string_pretty(&stats).map_err(|e| anyhow!(e))?,
    )
    .map_err(|e| anyhow!(e))?;
    print!("{}", stats.render_table());

    if let Some(audits_path) = audits {
        let text = std::fs::read_to_string(&audits_path)
            .with_context(|| format!("reading audits {}", audits_path.display()))?;
        let records: Vec<AuditRecord> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<AuditRecord>(l).map_err(|e| anyhow!("audit line: {e}")))
            .collect::<anyhow::Result<_>>()?;
        let summary = tally_audits(&records).map_err(|e| anyhow!(e))?;
        std::fs::write(
            common.out.join("audit_summary.json"),
            serde_json::to_string_pretty(&summary).map_err(|e| anyhow!(e))?,
        )
        .map_err(|e| anyhow!(e))?;
        print!("{}", summary.render_table());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    common: Common,
    corpus: PathBuf,
    kind: Option<String>,
    variant: Option<String>,
    ablations: Vec<String>,
    preset: Option<String>,
    steps: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    test_fraction: Option<f64>,
    split_seed: Option<u64>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let seed = r.get(common.seed, "seed", 0u64);
    let kind = r.get(kind, "kind", "diffusion".to_string());
    let variant_name = r.get(variant, "variant", "FineMotionDiffuse".to_string());
    let preset = r.get(preset, "preset", "desk".to_string());
    let steps = r.get(steps, "steps", 1000usize);
    let batch = r.get(batch, "batch", 8usize);
    let lr = r.get(lr, "lr", 1e-3);
    let test_fraction = r.get(test_fraction, "test_fraction", 0.2);
    let split_seed = r.get(split_seed, "split_seed", seed);
    let ablation_names: Vec<String> =
        if ablations.is_empty() { r.get(None, "ablations", Vec::new()) } else { ablations };

    write_run_config(
        &common.out,
        "train",
        json!({
            "corpus": corpus.display().to_string(),
            "kind": kind,
            "variant": variant_name,
            "ablations": ablation_names,
            "preset": preset,
            "steps": steps,
            "batch": batch,
            "lr": lr,
            "test_fraction": test_fraction,
            "split_seed": split_seed,
            "seed": seed,
        }),
    )?;

    let mut records = load_records(&corpus, false)?;
    let (train, test) = split_records(&mut records, test_fraction, split_seed);
    println!("split: {} train / {} test records", train.len(), test.len());
    let stats = train_norm_stats(&train)?;

    match kind.as_str() {
        "diffusion" => {
            let variant = Variant::from_str(&variant_name).map_err(|e| anyhow!(e))?;
            let mut config = model_preset(&preset, variant)?;
            config.seed = seed;
            config.motion_dim = load_motion(&train[0].motion_file).map_err(|e| anyhow!(e))?.0.dim();
            for name in &ablation_names {
                let a = Ablation::from_str(name).map_err(|e| anyhow!(e))?;
                config.ablations.insert(a);
            }
            let spec = TrainSpec { config, steps, batch, lr };
            let mut log = Vec::new();
            let model = train_diffusion(&spec, &train, &stats, Some(&mut log))?;
            let path = common.out.join("model.fmck");
            model.save(&path).map_err(|e| anyhow!(e))?;
            let log_lines: Vec<String> = log.iter().map(|v| v.to_string()).collect();
            std::fs::write(common.out.join("train_log.jsonl"), log_lines.join("\n") + "\n")
                .map_err(|e| anyhow!(e))?;
            println!("saved diffusion checkpoint to {}", path.display());
        }
        "evaluator" => {
            let motion_dim = load_motion(&train[0].motion_file).map_err(|e| anyhow!(e))?.0.dim();
            let mut config = match preset.as_str() {
                "desk" => ContrastiveConfig::desk(motion_dim),
                "tiny" => ContrastiveConfig::tiny(motion_dim),
                other => return Err(anyhow!("unknown preset `{other}`").into()),
            };
            config.seed = seed;
            let model = train_evaluator(&config, &train, &stats, steps, batch, lr)?;
            let path = common.out.join("evaluator.fmck");
            model.save(&path).map_err(|e| anyhow!(e))?;
            println!("saved evaluator checkpoint to {}", path.display());
        }
        other => return Err(anyhow!("unknown kind `{other}` (expected diffusion|evaluator)").into()),
    }
    Ok(())
}

fn cmd_sample(
    common: Common,
    checkpoint: PathBuf,
    coarse: String,
    fine: Option<String>,
    fine_file: Option<PathBuf>,
    frames: Option<usize>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let seed = r.get(common.seed, "seed", 0u64);
    let frames = r.get(frames, "frames", 40usize);
    let fine_text = match (fine, fine_file) {
        (Some(inline), _) => Some(inline),
        (None, Some(path)) => Some(
            std::fs::read_to_string(&path)
                .with_context(|| format!("reading fine text {}", path.display()))?,
        ),
        (None, None) => None,
    };
    write_run_config(
        &common.out,
        "sample",
        json!({
            "checkpoint": checkpoint.display().to_string(),
            "coarse": coarse,
            "fine": fine_text,
            "frames": frames,
            "seed": seed,
        }),
    )?;
    let model = TrainedModel::load(&checkpoint).map_err(|e| anyhow!(e))?;
    let fine_parsed = match &fine_text {
        Some(text) => Some(parse_stepmarks(text).map_err(|e| anyhow!("fine text: {e}"))?),
        None => None,
    };
    let req = GenerationRequest { coarse, fine: fine_parsed, frames, seed };
    let enc = model.encoder();
    let motion = sample(&req, &model.config, &model.store, enc.as_ref(), &model.stats, &model.schema_id)
        .map_err(|e| anyhow!(e))?;
    let out_path = common.out.join("sample_0000.json");
    save_motion(&out_path, &motion, &stick5_schema().skeleton).map_err(|e| anyhow!(e))?;
    println!("wrote {} ({} frames)", out_path.display(), motion.frames());
    Ok(())
}

fn cmd_eval(
    common: Common,
    checkpoint: PathBuf,
    eval_checkpoint: PathBuf,
    corpus: PathBuf,
    runs: Option<usize>,
    test_fraction: Option<f64>,
    split_seed: Option<u64>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let seed = r.get(common.seed, "seed", 0u64);
    let runs = r.get(runs, "runs", 10usize);
    let test_fraction = r.get(test_fraction, "test_fraction", 0.2);
    let split_seed = r.get(split_seed, "split_seed", seed);
    write_run_config(
        &common.out,
        "eval",
        json!({
            "checkpoint": checkpoint.display().to_string(),
            "eval_checkpoint": eval_checkpoint.display().to_string(),
            "corpus": corpus.display().to_string(),
            "runs": runs,
            "test_fraction": test_fraction,
            "split_seed": split_seed,
            "seed": seed,
        }),
    )?;
    let model = TrainedModel::load(&checkpoint).map_err(|e| anyhow!(e))?;
    let evaluator = ContrastiveModel::load(&eval_checkpoint).map_err(|e| anyhow!(e))?;
    let mut records = load_records(&corpus, false)?;
    let (_, test) = split_records(&mut records, test_fraction, split_seed);
    let report = evaluate_model(&test, &model, &evaluator, runs, seed).map_err(|e| anyhow!(e))?;
    std::fs::write(
        common.out.join("eval_report.json"),
        serde_json::to_string_pretty(&report).map_err(|e| anyhow!(e))?,
    )
    .map_err(|e| anyhow!(e))?;
    print!("{}", report.render_table());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ablate(
    common: Common,
    corpus: PathBuf,
    preset: Option<String>,
    steps: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    runs: Option<usize>,
    test_fraction: Option<f64>,
    split_seed: Option<u64>,
    eval_steps: Option<usize>,
) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let seed = r.get(common.seed, "seed", 0u64);
    let preset = r.get(preset, "preset", "desk".to_string());
    let steps = r.get(steps, "steps", 400usize);
    let batch = r.get(batch, "batch", 8usize);
    let lr = r.get(lr, "lr", 1e-3);
    let runs = r.get(runs, "runs", 3usize);
    let test_fraction = r.get(test_fraction, "test_fraction", 0.2);
    let split_seed = r.get(split_seed, "split_seed", seed);
    let eval_steps = r.get(eval_steps, "eval_steps", 300usize);
    write_run_config(
        &common.out,
        "ablate",
        json!({
            "corpus": corpus.display().to_string(),
            "preset": preset,
            "steps": steps,
            "batch": batch,
            "lr": lr,
            "runs": runs,
            "test_fraction": test_fraction,
            "split_seed": split_seed,
            "eval_steps": eval_steps,
            "seed": seed,
        }),
    )?;

    let mut records = load_records(&corpus, false)?;
    let (train, test) = split_records(&mut records, test_fraction, split_seed);
    let stats = train_norm_stats(&train)?;
    let motion_dim = load_motion(&train[0].motion_file).map_err(|e| anyhow!(e))?.0.dim();
    let mut eval_config = match preset.as_str() {
        "desk" => ContrastiveConfig::desk(motion_dim),
        _ => ContrastiveConfig::tiny(motion_dim),
    };
    eval_config.seed = seed;
    let evaluator = train_evaluator(&eval_config, &train, &stats, eval_steps, 16, 1e-3)?;

    let mut sweeps: Vec<(String, BTreeSet<Ablation>)> =
        vec![("FineMotionDiffuse".to_string(), BTreeSet::new())];
    for a in finemotion_core::diffusion::ALL_ABLATIONS {
        let mut set = BTreeSet::new();
        set.insert(*a);
        sweeps.push((format!("{a}"), set));
    }

    let mut rows = Vec::new();
    for (name, ablations) in sweeps {
        let mut config = model_preset(&preset, Variant::FineMotionDiffuse)?;
        config.seed = seed;
        config.motion_dim = motion_dim;
        config.ablations = ablations;
        let spec = TrainSpec { config, steps, batch, lr };
        let outcome = train_diffusion(&spec, &train, &stats, None)
            .and_then(|model| evaluate_model(&test, &model, &evaluator, runs, seed).map_err(|e| anyhow!(e)));
        match outcome {
            Ok(report) => {
                println!(
                    "{name:<22} FID {:.3}±{:.3}",
                    report.generated.fid.mean, report.generated.fid.ci95
                );
                rows.push(json!({
                    "name": name,
                    "fid": report.generated.fid,
                    "r_precision_top1": report.generated.r_precision_top1,
                    "r_precision_top2": report.generated.r_precision_top2,
                    "diversity": report.generated.diversity,
                }));
            }
            Err(e) => {
                // Per-variant failures must not abort the sweep.
                println!("{name:<22} FAILED: {e:#}");
                rows.push(json!({"name": name, "error": format!("{e:#}")}));
            }
        }
    }
    std::fs::write(
        common.out.join("ablation_report.json"),
        serde_json::to_string_pretty(&rows).map_err(|e| anyhow!(e))?,
    )
    .map_err(|e| anyhow!(e))?;
    println!("{} rows written", rows.len());
    Ok(())
}

fn cmd_render(common: Common, motion: PathBuf, format: Option<String>) -> Result<(), CliError> {
    let r = Resolver::new(&common)?;
    let format_name = r.get(format, "format", "png_frames".to_string());
    let format = RenderFormat::from_str(&format_name).map_err(|e| anyhow!(e))?;
    write_run_config(
        &common.out,
        "render",
        json!({"motion": motion.display().to_string(), "format": format_name}),
    )?;
    let (loaded, sidecar) = load_motion(&motion).map_err(|e| anyhow!(e))?;
    let registry = SchemaRegistry::default();
    let schema = registry
        .get(&sidecar.schema_id)
        .ok_or_else(|| anyhow!("unknown schema `{}`", sidecar.schema_id))?;
    let paths = render_motion(&loaded, schema, &RenderConfig::default(), format, &common.out)
        .map_err(|e| anyhow!(e))?;
    println!("wrote {} file(s) under {}", paths.len(), common.out.display());
    Ok(())
}
