//! Pipeline stages. Each stage reads its upstream artifact from the output
//! directory, writes its own, and records rows/notes/hashes in the manifest,
//! so the staged subcommands compose into exactly the same run as the
//! one-shot `run` command.

use std::path::Path;

use nids_core::boost::{train_boosted, FeatureRanking};
use nids_core::dataset::Dataset;
use nids_core::eval::{evaluate_learners, scalability_check, stratified_sample, CvScope};
use nids_core::ingest::{prepare, standardize};
use nids_core::learners::{train, LearnerSpec, MLPConfig};
use nids_core::select::{search_subsets, SelectionResult};
use nids_core::smote::smote;
use nids_core::store::{
    load_dataset, load_json, save_dataset, save_json, sha256_file, write_confusion_csv,
    write_metrics_csv, write_roc_csv, write_selection_csv,
};
use nids_core::synth::{generate_csv, SynthSpec};
use nids_core::{Error, EvalReport, Result};

use crate::config::PipelineConfig;
use crate::manifest::RunManifest;

pub const PREPARED: &str = "prepared.bin";
pub const BALANCED: &str = "balanced.bin";
pub const FOREST: &str = "forest.json";
pub const RANKING: &str = "ranking.json";
pub const SELECTION: &str = "selection.json";
pub const SELECTION_CSV: &str = "selection.csv";
pub const EVAL: &str = "eval.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const SCALABILITY: &str = "scalability.json";

fn load_stage_dataset(out: &Path, file: &str, producer: &str) -> Result<Dataset> {
    let path = out.join(file);
    if !path.exists() {
        return Err(Error::Data(format!(
            "missing '{}'; run the {producer} stage first",
            path.display()
        )));
    }
    Ok(load_dataset(&path)?.0)
}

fn record_dataset_files(m: &mut RunManifest, out: &Path, file: &str) -> Result<()> {
    m.record_file(out, &out.join(file))?;
    m.record_file(out, &out.join(format!("{file}.json")))?;
    Ok(())
}

pub fn stage_synth(spec: &SynthSpec, path: &Path) -> Result<()> {
    let data = generate_csv(spec, path)?;
    log::info!(
        "wrote {} rows x {} features ({} classes) to {}",
        data.n_rows(),
        data.n_features(),
        data.n_classes(),
        path.display()
    );
    Ok(())
}

pub fn stage_ingest(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let kind = cfg.kind()?;
    let task = cfg.task()?;
    let (mut data, info) = prepare(&cfg.input.path, kind, task, false)?;
    m.input_hash = Some(sha256_file(&cfg.input.path)?);

    let stage = m.stage_mut("ingest");
    stage.rows_in = Some(info.clean.rows_in);
    stage.notes.push(format!(
        "dropped {} non-finite and {} duplicate rows",
        info.clean.dropped_non_finite, info.clean.dropped_duplicate
    ));

    if cfg.run.sample_rows > 0 && data.n_rows() > cfg.run.sample_rows {
        let idx = stratified_sample(
            &data.y,
            data.n_classes(),
            cfg.run.sample_rows,
            cfg.run.seed,
        );
        stage.notes.push(format!(
            "stratified sample: {} -> {} rows",
            data.n_rows(),
            idx.len()
        ));
        data = data.take_rows(&idx)?;
    }

    match cfg.scope()? {
        CvScope::GlobalSmote => {
            let (scaled, stats) = standardize(&data.x);
            data = Dataset::new(
                scaled,
                data.y,
                data.feature_names,
                data.class_names,
                Some(stats),
            )?;
            stage.notes.push("standardized (population std)".into());
        }
        CvScope::TrainOnlySmote => {
            stage
                .notes
                .push("left unscaled: train-only scope standardizes inside folds".into());
        }
    }
    stage.rows_out = Some(data.n_rows());

    save_dataset(&data, Some(&info), &out.join(PREPARED))?;
    record_dataset_files(m, out, PREPARED)
}

pub fn stage_balance(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let data = load_stage_dataset(out, PREPARED, "ingest")?;
    let counts = data.class_counts();
    let scope = cfg.scope()?;

    let (balanced, note) = if scope == CvScope::TrainOnlySmote {
        (
            data,
            "train-only scope: balancing deferred to training folds".to_string(),
        )
    } else if counts.iter().all(|&c| c == counts[0]) {
        let shown = counts
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" vs ");
        (data, format!("balanced, skipped ({shown})"))
    } else {
        let result = smote(&data, &cfg.smote_config())?;
        let note = format!(
            "SMOTE: {:?} -> {:?} (k={}, seed={})",
            counts,
            result.class_counts(),
            cfg.smote.k_neighbors,
            cfg.smote_config().seed,
        );
        (result, note)
    };
    log::info!("balance: {note}");

    let stage = m.stage_mut("balance");
    stage.rows_in = Some(counts.iter().sum());
    stage.rows_out = Some(balanced.n_rows());
    stage.notes.push(note);

    save_dataset(&balanced, None, &out.join(BALANCED))?;
    record_dataset_files(m, out, BALANCED)
}

pub fn stage_rank(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let data = load_stage_dataset(out, BALANCED, "balance")?;
    let gb = cfg.gb_config(data.n_classes());
    let forest = train_boosted(&data, &gb)?;
    let ranking = forest.feature_importance();

    let stage = m.stage_mut("rank");
    stage.rows_in = Some(data.n_rows());
    stage.notes.push(format!(
        "{} trees, ranking head: {:?}",
        forest.trees.len(),
        &ranking.order[..ranking.order.len().min(10)]
    ));

    save_json(&forest, "nids-forest", &out.join(FOREST))?;
    save_json(&ranking, "nids-ranking", &out.join(RANKING))?;
    m.record_file(out, &out.join(FOREST))?;
    m.record_file(out, &out.join(RANKING))
}

pub fn stage_select(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let data = load_stage_dataset(out, BALANCED, "balance")?;
    let ranking: FeatureRanking = load_json("nids-ranking", &out.join(RANKING))
        .map_err(|_| Error::Data("missing or invalid ranking; run the rank stage first".into()))?;

    let (result, note) = if cfg.select.top_k > 0 {
        let k = cfg.select.top_k.min(ranking.order.len());
        (
            SelectionResult {
                candidates: vec![],
                chosen: ranking.top(k).to_vec(),
                chosen_k: k,
                threshold: cfg.select.threshold,
                step: cfg.select.step,
                no_pass: false,
            },
            format!("prefix pinned to top-{k} (sweep skipped)"),
        )
    } else {
        let learners = cfg.named_learners(&cfg.select.learners)?;
        let smote_cfg = cfg.smote_config();
        let smote_opt = (cfg.scope()? == CvScope::TrainOnlySmote).then_some(&smote_cfg);
        let result = search_subsets(
            &data,
            &ranking,
            &learners,
            &cfg.select_config(),
            &cfg.select_fold_spec()?,
            smote_opt,
        )?;
        let note = if result.no_pass {
            format!(
                "no prefix cleared threshold {}; falling back to all {} features",
                result.threshold, result.chosen_k
            )
        } else {
            format!(
                "chose top-{} of {} features at threshold {}",
                result.chosen_k,
                ranking.order.len(),
                result.threshold
            )
        };
        (result, note)
    };
    log::info!("select: {note}");

    m.chosen_features = Some(result.chosen.clone());
    let stage = m.stage_mut("select");
    stage.notes.push(note);

    save_json(&result, "nids-selection", &out.join(SELECTION))?;
    write_selection_csv(&result, &out.join(SELECTION_CSV))?;
    m.record_file(out, &out.join(SELECTION))?;
    m.record_file(out, &out.join(SELECTION_CSV))
}

fn chosen_features(cfg: &PipelineConfig, d: usize, notes: &mut Vec<String>) -> Result<Vec<usize>> {
    let path = cfg.run.out_dir.join(SELECTION);
    if path.exists() {
        let sel: SelectionResult = load_json("nids-selection", &path)?;
        Ok(sel.chosen)
    } else {
        notes.push("no selection artifact: using all features".into());
        Ok((0..d).collect())
    }
}

pub fn stage_train(cfg: &PipelineConfig, m: &mut RunManifest, learner: &str) -> Result<()> {
    let out = &cfg.run.out_dir;
    let data = load_stage_dataset(out, BALANCED, "balance")?;
    let mut notes = Vec::new();
    let features = chosen_features(cfg, data.n_features(), &mut notes)?;
    let view = data.select_features(&features)?;
    let spec = cfg.learner_spec(learner)?;
    let model = train(&view, &spec)?;

    let file = format!("model_{learner}.json");
    save_json(&model, "nids-model", &out.join(&file))?;
    let stage = m.stage_mut("train");
    stage.rows_in = Some(view.n_rows());
    stage.notes.append(&mut notes);
    stage
        .notes
        .push(format!("trained {learner} on {} features -> {file}", features.len()));
    m.record_file(out, &out.join(&file))
}

pub fn stage_evaluate(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let scope = cfg.scope()?;
    // global scope evaluates the balanced dataset; train-only evaluates the
    // raw prepared dataset and balances/scales inside each fold
    let data = match scope {
        CvScope::GlobalSmote => load_stage_dataset(out, BALANCED, "balance")?,
        CvScope::TrainOnlySmote => load_stage_dataset(out, PREPARED, "ingest")?,
    };
    let mut notes = Vec::new();
    let features = chosen_features(cfg, data.n_features(), &mut notes)?;
    let label = if features.len() == data.n_features() {
        "all".to_string()
    } else {
        format!("top{}", features.len())
    };
    let specs = cfg.named_learners(&cfg.eval.learners)?;
    let smote_cfg = cfg.smote_config();
    let smote_opt = (scope == CvScope::TrainOnlySmote).then_some(&smote_cfg);

    let report = evaluate_learners(
        &data,
        &specs,
        &features,
        &cfg.fold_spec()?,
        smote_opt,
        &label,
    )?;

    for learner in &report.learners {
        let mean = &learner.outcome.mean;
        let line = format!(
            "{}: accuracy {:.4}% f1 {:.4}% rmse {:.4}%{}",
            learner.name,
            mean.accuracy * 100.0,
            mean.f1 * 100.0,
            mean.rmse * 100.0,
            mean.auc
                .map(|a| format!(" auc {:.4}%", a * 100.0))
                .unwrap_or_default(),
        );
        log::info!("evaluate: {line}");
        notes.push(line);
    }

    save_json(&report, "nids-eval", &out.join(EVAL))?;
    m.record_file(out, &out.join(EVAL))?;
    write_reports(&report, out, m)?;

    if !cfg.eval.scalability_epochs.is_empty() {
        let mlp = match cfg.learner_spec("mlp")? {
            LearnerSpec::Mlp(c) => c,
            _ => unreachable!("mlp spec is always an MLP"),
        };
        let view = data.select_features(&features)?;
        let sc = run_scalability(cfg, &view, &mlp)?;
        notes.push(format!(
            "scalability: {:?} max delta {:.4}pp -> {}",
            sc.accuracies
                .iter()
                .map(|&(e, a)| (e, (a * 1e6).round() / 1e4))
                .collect::<Vec<_>>(),
            sc.max_delta * 100.0,
            if sc.scalable { "scalable" } else { "NOT scalable" }
        ));
        save_json(&sc, "nids-scalability", &out.join(SCALABILITY))?;
        m.record_file(out, &out.join(SCALABILITY))?;
    }

    let stage = m.stage_mut("evaluate");
    stage.rows_in = Some(data.n_rows());
    stage.notes.append(&mut notes);
    Ok(())
}

fn run_scalability(
    cfg: &PipelineConfig,
    view: &Dataset,
    mlp: &MLPConfig,
) -> Result<nids_core::eval::ScalabilityReport> {
    scalability_check(
        view,
        mlp,
        &cfg.eval.scalability_epochs,
        cfg.eval.scalability_tolerance,
        cfg.run.seed,
    )
}

fn write_reports(report: &EvalReport, out: &Path, m: &mut RunManifest) -> Result<()> {
    write_metrics_csv(report, &out.join(METRICS_CSV))?;
    m.record_file(out, &out.join(METRICS_CSV))?;
    for path in write_confusion_csv(report, out)? {
        m.record_file(out, &path)?;
    }
    for path in write_roc_csv(report, out)? {
        m.record_file(out, &path)?;
    }
    Ok(())
}

/// Re-emit the CSV artifacts from a stored evaluation without retraining.
pub fn stage_report(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    let out = &cfg.run.out_dir;
    let path = out.join(EVAL);
    if !path.exists() {
        return Err(Error::Data(format!(
            "missing '{}'; run the evaluate stage first",
            path.display()
        )));
    }
    let report: EvalReport = load_json("nids-eval", &path)?;
    write_reports(&report, out, m)?;
    m.stage_mut("report")
        .notes
        .push("regenerated CSV reports from eval.json".into());
    Ok(())
}

/// The staged pipeline as one command.
pub fn stage_names_for_run() -> [&'static str; 5] {
    ["ingest", "balance", "rank", "select", "evaluate"]
}

pub fn dispatch_stage(name: &str, cfg: &PipelineConfig, m: &mut RunManifest) -> Result<()> {
    match name {
        "ingest" => stage_ingest(cfg, m),
        "balance" => stage_balance(cfg, m),
        "rank" => stage_rank(cfg, m),
        "select" => stage_select(cfg, m),
        "evaluate" => stage_evaluate(cfg, m),
        "report" => stage_report(cfg, m),
        other => Err(Error::Argument(format!("unknown stage '{other}'"))),
    }
}
