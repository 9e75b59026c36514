use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use stabgnn::dataset::{generate, sre_threshold_labels, DatasetManifest, DatasetRecord};
use stabgnn::encode::{read_graph_cache, write_graph_cache, CalibrationTable, EncodeConfig, D_GATE, D_HARDWARE};
use stabgnn::harness::eval::{write_csv, write_predictions};
use stabgnn::harness::{
    ablation_suite, clifford_depth_curve, evaluate, m2_bin_analysis, run_experiment, run_repeated, Corpus, ExperimentResult,
    SplitKind, Task,
};
use stabgnn::nn::Checkpoint;
use stabgnn::par::Exec;
use stabgnn::{jsonl, Error, Result};

use crate::config::{self, require, CurveKind, CurveSettings, EncodeCommand, EncodeSettings, EvalSettings, GenSettings, RunSettings};
use crate::{Common, CurveArgs, EncodeArgs, EncodeFlags, EvalArgs, GenArgs, RepeatArgs, RunArgs};

fn exec(common: &Common) -> Exec {
    if common.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    write_csv(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

fn manifest(command: &str, settings: &impl Serialize, outputs: &[&Path], extra: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "settings": settings,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "result": extra,
    })
}

fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let records = jsonl::read_records(BufReader::new(File::open(path)?))?;
    if records.is_empty() {
        return Err(Error::Validation(format!("{} holds no records", path.display())));
    }
    Ok(records)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string()
}

fn apply_encode_flags(settings: &mut EncodeSettings, flags: &EncodeFlags) {
    if flags.d_q.is_some() {
        settings.d_q = flags.d_q;
    }
    if flags.calibration.is_some() {
        settings.calibration = flags.calibration.clone();
    }
    settings.angle_onehot |= flags.angle_onehot;
}

fn encode_config(settings: &EncodeSettings, records: &[DatasetRecord]) -> Result<EncodeConfig> {
    let widest = records.iter().map(|r| r.circuit.n_qubits).max().unwrap_or(1);
    let calibration = match &settings.calibration {
        Some(path) => Some(CalibrationTable::from_json(&fs::read_to_string(path)?)?),
        None => None,
    };
    Ok(EncodeConfig { d_q: settings.d_q.unwrap_or(widest), calibration, angle_onehot: settings.angle_onehot })
}

/// Encoding that reproduces a checkpoint's node width: `d_q` is recovered
/// from the stored node dimension unless given explicitly.
fn encode_for_checkpoint(settings: &EncodeSettings, ck: &Checkpoint, records: &[DatasetRecord]) -> Result<EncodeConfig> {
    let mut cfg = encode_config(settings, records)?;
    if settings.d_q.is_none() {
        let fixed = D_GATE
            + if cfg.calibration.is_some() { D_HARDWARE } else { 0 }
            + if cfg.angle_onehot { stabgnn::encode::ANGLE_BINS } else { 0 };
        cfg.d_q = ck.params.config.node_dim.checked_sub(fixed).ok_or_else(|| {
            Error::Config(format!("checkpoint node width {} is smaller than the fixed blocks", ck.params.config.node_dim))
        })?;
    }
    if cfg.node_dim() != ck.params.config.node_dim {
        return Err(Error::Dimension(format!(
            "encoding gives node width {} but the checkpoint expects {}",
            cfg.node_dim(),
            ck.params.config.node_dim
        )));
    }
    Ok(cfg)
}

fn checkpoint_task(ck: &Checkpoint, explicit: Option<Task>) -> Result<Task> {
    if let Some(task) = explicit {
        return Ok(task);
    }
    let extra: Value = serde_json::from_str(&ck.extra).unwrap_or(Value::Null);
    extra
        .get("task")
        .and_then(|t| serde_json::from_value(t.clone()).ok())
        .ok_or_else(|| Error::Config("checkpoint does not record a task; pass --task".into()))
}

pub fn gen(a: GenArgs) -> Result<()> {
    let mut s: GenSettings = config::load(a.common.config.as_deref())?;
    if a.family.is_some() {
        s.family = a.family;
    }
    if let Some(v) = a.min_qubits {
        s.config.min_qubits = v;
    }
    if let Some(v) = a.max_qubits {
        s.config.max_qubits = v;
    }
    if let Some(v) = a.per_cell {
        s.config.per_cell = v;
    }
    if let Some(v) = a.seed {
        s.config.master_seed = v;
    }
    if a.out.is_some() {
        s.out = a.out;
    }
    s.threshold |= a.threshold;
    let family = require(s.family, "family")?;
    let out = require(s.out.clone(), "out")?;
    s.config.validate()?;

    let mut records = generate(family, &s.config, exec(&a.common))?;
    let threshold = if s.threshold {
        let (th, labeled) = sre_threshold_labels(&records)?;
        records = labeled;
        Some(th)
    } else {
        None
    };
    let mut w = create(&out)?;
    jsonl::write_records(&mut w, &records)?;
    w.flush()?;
    let manifest_path = out.with_extension("manifest.json");
    write_json(&manifest_path, &DatasetManifest::build(family, &s.config, &records, threshold))?;
    eprintln!("wrote {} {family} records to {}", records.len(), out.display());
    Ok(())
}

pub fn encode(a: EncodeArgs) -> Result<()> {
    let mut s: EncodeCommand = config::load(a.common.config.as_deref())?;
    if a.dataset.is_some() {
        s.dataset = a.dataset;
    }
    if a.out.is_some() {
        s.out = a.out;
    }
    apply_encode_flags(&mut s.encode, &a.encode);
    let dataset = require(s.dataset.clone(), "dataset")?;
    let out = require(s.out.clone(), "out")?;
    let records = read_dataset(&dataset)?;
    let cfg = encode_config(&s.encode, &records)?;
    let corpus = Corpus::encode(records, &cfg, exec(&a.common))?;
    let mut w = create(&out)?;
    write_graph_cache(&mut w, &corpus.graphs)?;
    w.flush()?;
    let manifest_path = out.with_extension("manifest.json");
    let extra = json!({ "records": corpus.len(), "node_dim": cfg.node_dim(), "d_q": cfg.d_q, "hardware": cfg.calibration.is_some() });
    write_json(&manifest_path, &manifest("encode", &s, &[&out], extra))?;
    eprintln!("encoded {} graphs (node width {}) to {}", corpus.len(), cfg.node_dim(), out.display());
    Ok(())
}

fn resolve_run(a: &RunArgs) -> Result<RunSettings> {
    let mut s: RunSettings = config::load(a.common.config.as_deref())?;
    if a.dataset.is_some() {
        s.dataset = a.dataset.clone();
    }
    if a.graphs.is_some() {
        s.graphs = a.graphs.clone();
    }
    if a.task.is_some() {
        s.task = a.task;
    }
    if a.out.is_some() {
        s.out = a.out.clone();
    }
    if let Some(seed) = a.seed {
        s.split.seed = seed;
        s.train.seed = seed;
    }
    if let Some(kind) = a.split {
        s.split.kind = kind;
    }
    if let Some(r) = a.ratio {
        s.split.ratio = r;
    }
    if a.axis.is_some() {
        s.split.axis = a.axis;
    }
    if a.train_range.is_some() {
        s.split.train_bounds = a.train_range;
    }
    if a.test_range.is_some() {
        s.split.test_bounds = a.test_range;
    }
    s.split.stratify_by_label |= a.stratify;
    if a.epochs.is_some() {
        s.train.epochs = a.epochs;
    }
    if let Some(v) = a.batch_size {
        s.train.batch_size = v;
    }
    if let Some(v) = a.lr {
        s.train.adam.lr = v;
    }
    if let Some(v) = a.patience {
        s.train.patience = v;
    }
    if let Some(v) = &a.tc_dims {
        s.model.tc_dims = v.clone();
    }
    if let Some(v) = &a.global_dims {
        s.model.global_dims = v.clone();
    }
    if let Some(v) = &a.head_dims {
        s.model.head_dims = v.clone();
    }
    if let Some(v) = a.heads {
        s.model.heads = v;
    }
    s.model.ablate_graph |= a.ablate_graph;
    apply_encode_flags(&mut s.encode, &a.encode);
    s.train.exec = exec(&a.common);
    s.split.validate()?;
    s.train.validate()?;
    Ok(s)
}

fn load_corpus(s: &RunSettings, exec: Exec) -> Result<Corpus> {
    let dataset = require(s.dataset.clone(), "dataset")?;
    let records = read_dataset(&dataset)?;
    match &s.graphs {
        Some(path) => Corpus::from_parts(records, read_graph_cache(BufReader::new(File::open(path)?))?),
        None => {
            let cfg = encode_config(&s.encode, &records)?;
            Corpus::encode(records, &cfg, exec)
        }
    }
}

/// Checkpoint, metrics, per-set predictions and training history of one run.
fn write_experiment(dir: &Path, r: &ExperimentResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let ck = dir.join("model.ckpt");
    r.outcome.checkpoint.save(&ck)?;
    let metrics = dir.join("metrics.csv");
    write_rows(&metrics, &r.metrics)?;
    let history = dir.join("history.csv");
    write_rows(&history, &r.outcome.history)?;
    let mut files = vec![ck, metrics, history];
    for (name, preds) in &r.predictions {
        let path = dir.join(format!("predictions_{name}.csv"));
        let mut w = create(&path)?;
        write_predictions(&mut w, preds)?;
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

pub fn train(a: RunArgs) -> Result<()> {
    let s = resolve_run(&a)?;
    let task = require(s.task, "task")?;
    let out = require(s.out.clone(), "out")?;
    let corpus = load_corpus(&s, s.train.exec)?;
    let r = run_experiment(&corpus, &s.split, task, &s.model, &s.train)?;
    let files = write_experiment(&out, &r)?;
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let extra = json!({
        "records": corpus.len(),
        "best_epoch": r.outcome.best_epoch,
        "split_fingerprint": r.split.fingerprint(),
        "metrics": r.summary(),
    });
    write_json(&out.join("manifest.json"), &manifest("train", &s, &refs, extra))?;
    for m in &r.metrics {
        eprintln!("{}: n={} accuracy={:?} mse={:?}", m.dataset, m.n, m.accuracy, m.mse);
    }
    Ok(())
}

pub fn repeat(a: RepeatArgs) -> Result<()> {
    let mut s = resolve_run(&a.run)?;
    if a.runs.is_some() {
        s.runs = a.runs;
    }
    let n_runs = s.runs.unwrap_or(10);
    let task = require(s.task, "task")?;
    let out = require(s.out.clone(), "out")?;
    let corpus = load_corpus(&s, s.train.exec)?;
    let base = s.train.seed;
    let agg = run_repeated(n_runs, base, s.train.exec, |index, seed| {
        let mut spec = s.split.clone();
        spec.seed = seed;
        let cfg = stabgnn::harness::TrainConfig { seed, ..s.train.clone() };
        let r = run_experiment(&corpus, &spec, task, &s.model, &cfg)?;
        write_experiment(&out.join(format!("run{index}")), &r)?;
        Ok(r.summary())
    })?;
    let csv_path = out.join("repeat.csv");
    let mut w = create(&csv_path)?;
    agg.write_csv(&mut w)?;
    w.flush()?;
    let extra = json!({ "runs": n_runs, "seeds": agg.seeds, "mean": agg.mean, "std": agg.std });
    write_json(&out.join("manifest.json"), &manifest("repeat", &s, &[&csv_path], extra))?;
    for (k, m) in &agg.mean {
        eprintln!("{k}: {m:.6} +- {:.6}", agg.std[k]);
    }
    Ok(())
}

pub fn ablate(a: RunArgs) -> Result<()> {
    let s = resolve_run(&a)?;
    if let Some(task) = s.task.filter(|t| *t != Task::SreReg) {
        return Err(Error::Config(format!("ablation compares regression models; got task {task}")));
    }
    if s.split.kind != SplitKind::Extrapolation {
        log::warn!("ablation without an extrapolation split reports no extrapolation MSE");
    }
    let out = require(s.out.clone(), "out")?;
    let dataset = require(s.dataset.clone(), "dataset")?;
    let corpus = load_corpus(&s, s.train.exec)?;
    let report = ablation_suite(&corpus, &s.split, &s.model, &s.train, &dataset_name(&dataset))?;
    let csv_path = out.join("ablation.csv");
    write_rows(&csv_path, &report.rows)?;
    let extra = json!({ "relative_difference": report.relative_difference });
    write_json(&out.join("manifest.json"), &manifest("ablate", &s, &[&csv_path], extra))?;
    for row in &report.rows {
        eprintln!("{}: extrapolation mse {:?}", row.variant, row.extrapolation_mse);
    }
    Ok(())
}

struct Loaded {
    checkpoint: Checkpoint,
    corpus: Corpus,
    task: Task,
}

fn load_for_eval(ck: &Path, dataset: &Path, task: Option<Task>, encode: &EncodeSettings, exec: Exec) -> Result<Loaded> {
    let checkpoint = Checkpoint::load(ck)?;
    let task = checkpoint_task(&checkpoint, task)?;
    let records = read_dataset(dataset)?;
    let cfg = encode_for_checkpoint(encode, &checkpoint, &records)?;
    let corpus = Corpus::encode(records, &cfg, exec)?;
    Ok(Loaded { checkpoint, corpus, task })
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let mut s: EvalSettings = config::load(a.common.config.as_deref())?;
    if a.checkpoint.is_some() {
        s.checkpoint = a.checkpoint;
    }
    if a.dataset.is_some() {
        s.dataset = a.dataset;
    }
    if a.task.is_some() {
        s.task = a.task;
    }
    if a.out.is_some() {
        s.out = a.out;
    }
    apply_encode_flags(&mut s.encode, &a.encode);
    let dataset = require(s.dataset.clone(), "dataset")?;
    let out = require(s.out.clone(), "out")?;
    let ex = exec(&a.common);
    let l = load_for_eval(&require(s.checkpoint.clone(), "checkpoint")?, &dataset, s.task, &s.encode, ex)?;
    let idx: Vec<usize> = (0..l.corpus.len()).collect();
    let (m, preds) = evaluate(&l.checkpoint, &l.corpus, &idx, l.task, &dataset_name(&dataset), ex)?;
    let metrics = out.join("metrics.csv");
    write_rows(&metrics, std::slice::from_ref(&m))?;
    let pred_path = out.join("predictions.csv");
    let mut w = create(&pred_path)?;
    write_predictions(&mut w, &preds)?;
    w.flush()?;
    write_json(&out.join("manifest.json"), &manifest("eval", &s, &[&metrics, &pred_path], serde_json::to_value(&m)?))?;
    eprintln!("{}: n={} accuracy={:?} mse={:?}", m.dataset, m.n, m.accuracy, m.mse);
    Ok(())
}

/// Whitespace-separated copy of a curve for gnuplot.
fn write_dat(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# {header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn curve(a: CurveArgs) -> Result<()> {
    let mut s: CurveSettings = config::load(a.common.config.as_deref())?;
    if let Some(k) = a.kind {
        s.kind = k;
    }
    if a.checkpoint.is_some() {
        s.checkpoint = a.checkpoint;
    }
    if a.dataset.is_some() {
        s.dataset = a.dataset;
    }
    if a.task.is_some() {
        s.task = a.task;
    }
    if a.out.is_some() {
        s.out = a.out;
    }
    if let Some(b) = a.bins {
        s.bins = b;
    }
    if a.range.is_some() {
        s.range = a.range;
    }
    if let Some(d) = a.max_depth {
        s.max_depth = d;
    }
    s.density |= a.density;
    apply_encode_flags(&mut s.encode, &a.encode);
    let dataset = require(s.dataset.clone(), "dataset")?;
    let out = require(s.out.clone(), "out")?;
    let ex = exec(&a.common);
    let l = load_for_eval(&require(s.checkpoint.clone(), "checkpoint")?, &dataset, s.task, &s.encode, ex)?;
    if !l.task.is_classification() {
        return Err(Error::Config("curves need a classification checkpoint".into()));
    }
    let idx: Vec<usize> = (0..l.corpus.len()).collect();
    let (_, preds) = evaluate(&l.checkpoint, &l.corpus, &idx, l.task, &dataset_name(&dataset), ex)?;
    let refs: Vec<&DatasetRecord> = l.corpus.records.iter().collect();
    let csv_path = out.join("curve.csv");
    let dat_path = out.join("curve.dat");
    let extra = match s.kind {
        CurveKind::CliffordDepth => {
            let rows = clifford_depth_curve(&refs, &preds, s.max_depth)?;
            write_rows(&csv_path, &rows)?;
            let fmt = |v: Option<f64>| v.map_or("nan".to_string(), |v| v.to_string());
            write_dat(
                &dat_path,
                "depth class accuracy count",
                rows.iter().map(|r| format!("{} {} {} {}", r.depth, r.class, fmt(r.accuracy), r.count)),
            )?;
            json!({ "rows": rows.len() })
        }
        CurveKind::M2Bins => {
            let range = match s.range {
                Some(r) => r,
                None if s.density => (0.0, 0.24),
                None => (0.0, refs.iter().filter_map(|r| r.m2_value()).fold(0.0, f64::max)),
            };
            let analysis = m2_bin_analysis(&refs, &preds, s.bins, range, s.density)?;
            write_rows(&csv_path, &analysis.rows)?;
            write_dat(
                &dat_path,
                "lo hi count misclassified ratio",
                analysis.rows.iter().map(|r| {
                    format!("{} {} {} {} {}", r.lo, r.hi, r.count, r.misclassified, r.ratio.map_or("nan".into(), |v| v.to_string()))
                }),
            )?;
            json!({
                "range": range,
                "peak_bin": analysis.peak(),
                "median_all": analysis.median_all,
                "median_misclassified": analysis.median_misclassified,
                "out_of_range": analysis.out_of_range,
            })
        }
    };
    write_json(&out.join("manifest.json"), &manifest("curve", &s, &[&csv_path, &dat_path], extra))?;
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}
