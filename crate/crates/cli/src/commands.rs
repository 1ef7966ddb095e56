use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hlsrnn::activation::ActivationSet;
use hlsrnn::data::Dataset;
use hlsrnn::fixtures::{self, Benchmark, Task};
use hlsrnn::metrics::{MetricsError, ScoredDataset};
use hlsrnn::model::{count_parameters, load_model};
use hlsrnn::perf::{Calibration, DeviceDb, Estimator};
use hlsrnn::sweep::{self, ModeComparison};
use hlsrnn::{EngineConfig, HardwareConfig, LayerKind, NetworkModel, QuantPolicy};
use serde::Serialize;

use crate::args::*;

pub const SCORES_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Marks an error as a usage problem (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn load(model: &ModelArgs) -> Result<NetworkModel> {
    match (&model.model, model.benchmark) {
        (Some(path), _) => load_model(path).with_context(|| format!("loading model {}", path.display())),
        (None, Some(b)) => Ok(fixtures::make_benchmark_shape(b, model.cell.into())?),
        (None, None) => Err(UsageError("one of --model or --benchmark is required".into()).into()),
    }
}

fn load_data(path: &Path, model: &NetworkModel) -> Result<Dataset> {
    let data = Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))?;
    if data.seq_len != model.seq_len() || data.input_dim != model.input_dim() {
        bail!(
            "dataset {} is {} x {} but the model expects {} x {}",
            path.display(),
            data.seq_len,
            data.input_dim,
            model.seq_len(),
            model.input_dim()
        );
    }
    Ok(data)
}

fn activations(n: &NumericArgs) -> Result<ActivationSet> {
    if let Some(path) = &n.activation_config {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let set = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        return Ok(set);
    }
    Ok(match n.tables {
        TablesArg::Lut => ActivationSet::default(),
        TablesArg::LeftEdge => ActivationSet::left_edge(),
        TablesArg::Direct => ActivationSet::direct(),
    })
}

fn engine_config(precision: hlsrnn::FxpFormat, mode: ModeArg, n: &NumericArgs) -> Result<EngineConfig> {
    Ok(EngineConfig::new(precision)
        .with_mode(mode.into())
        .with_policy(QuantPolicy::new(n.rounding.into(), n.overflow.into()))
        .with_activations(activations(n)?))
}

fn hardware(hw: &HardwareArgs, reuse: hlsrnn::ReusePair, mode: ModeArg) -> Result<(HardwareConfig, Estimator)> {
    let mut cfg = HardwareConfig::new(reuse)
        .with_strategy(hw.strategy.into())
        .with_mode(mode.into());
    cfg.clock_mhz = hw.clock_mhz;
    cfg.dsp_input_width = hw.dsp_width;
    if let Some(name) = &hw.device {
        let db = match &hw.device_db {
            Some(p) => DeviceDb::from_path(p)?,
            None => DeviceDb::builtin(),
        };
        cfg.budget = Some(db.get(name)?);
    }
    cfg.validate()?;
    let cal = match &hw.calibration {
        Some(p) => Calibration::from_path(p)?,
        None => Calibration::default(),
    };
    Ok((cfg, Estimator::new(cal)))
}

/// Opens `path`, or stdout when `None`.
fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct InferSummary {
    schema_version: u32,
    model: String,
    precision: String,
    mode: hlsrnn::RnnMode,
    samples: usize,
    accuracy: Option<f64>,
    /// Per-class AUC; absent when a class is missing from the labels.
    auc: Option<Vec<f64>>,
}

pub fn infer(a: &InferArgs) -> Result<()> {
    let model = load(&a.model)?;
    let data = load_data(&a.data, &model)?;
    let cfg = engine_config(a.precision, a.mode, &a.numeric)?;
    let scores = sweep::fixed_scores(&model, &data, cfg)?;

    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    let k = scores.num_outputs().max(model.output_dim());
    let mut header = vec!["schema_version".to_string(), "row".into(), "label".into()];
    header.extend((0..k).map(|c| format!("score_{c}")));
    w.write_record(&header)?;
    for (i, (row, label)) in scores.scores.iter().zip(&scores.labels).enumerate() {
        let mut rec = vec![SCORES_SCHEMA_VERSION.to_string(), i.to_string(), label.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let auc = match scores.class_aucs() {
        Ok(a) => Some(a),
        Err(MetricsError::DegenerateLabels | MetricsError::Empty) => None,
        Err(e) => return Err(e.into()),
    };
    let summary = InferSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        model: model.name.clone(),
        precision: a.precision.to_string(),
        mode: a.mode.into(),
        samples: scores.len(),
        accuracy: ScoredDataset::accuracy(&scores).ok(),
        auc,
    };
    match &a.summary {
        Some(_) => write_json(&summary, &a.summary),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

pub fn sweep_quant(a: &SweepQuantArgs) -> Result<()> {
    let model = load(&a.model)?;
    let data = load_data(&a.data, &model)?;
    // The precision is replaced at every sweep point.
    let base = engine_config(hlsrnn::FxpFormat::signed(16, 6)?, a.mode, &a.numeric)?;
    let report = sweep::sweep_quant(&model, &data, &a.integer_bits.0, &a.frac_bits.0, &base)?;
    let mut out = sink(&a.output)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn sweep_reuse(a: &SweepReuseArgs) -> Result<()> {
    let model = load(&a.model)?;
    let (hw, est) = hardware(&a.hardware, a.reuse[0], a.mode)?;
    let rows = sweep::sweep_reuse(&model, &a.reuse, &a.widths.0, a.integer_bits, &hw, &est)?;
    for w in rows
        .iter()
        .flat_map(|r| &r.estimate.warnings)
        .collect::<std::collections::BTreeSet<_>>()
    {
        eprintln!("warning: {w}");
    }
    let mut out = sink(&a.output)?;
    sweep::write_reuse_csv(&rows, &model, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CompareReport<'a> {
    schema_version: u32,
    model: &'a str,
    #[serde(flatten)]
    comparison: &'a ModeComparison,
}

pub fn compare_modes(a: &CompareModesArgs) -> Result<()> {
    let model = load(&a.model)?;
    let cfg = engine_config(a.precision, ModeArg::Static, &a.numeric)?;
    let (hw, est) = hardware(&a.hardware, a.reuse, ModeArg::Static)?;
    let probe = sweep::probe_sequence(&model, a.probe_seed, 1.0);
    let comparison = sweep::compare_modes(&model, &cfg, &hw, &est, &probe)?;
    write_json(
        &CompareReport {
            schema_version: SUMMARY_SCHEMA_VERSION,
            model: &model.name,
            comparison: &comparison,
        },
        &a.output,
    )
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    schema_version: u32,
    model: &'a str,
    precision: String,
    hardware: &'a HardwareConfig,
    parameters: usize,
    estimate: hlsrnn::PerfEstimate,
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let model = load(&a.model)?;
    let (hw, est) = hardware(&a.hardware, a.reuse, a.mode)?;
    let estimate = est.estimate(&model, &hw, a.precision)?;
    for w in &estimate.warnings {
        eprintln!("warning: {w}");
    }
    write_json(
        &EstimateReport {
            schema_version: SUMMARY_SCHEMA_VERSION,
            model: &model.name,
            precision: a.precision.to_string(),
            hardware: &hw,
            parameters: count_parameters(&model).total,
            estimate,
        },
        &a.output,
    )
}

pub fn gen_fixtures(a: &GenFixturesArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let benches: Vec<Benchmark> = match a.benchmark {
        Some(b) => vec![b],
        None => Benchmark::ALL.to_vec(),
    };
    for b in &benches {
        for cell in [LayerKind::Lstm, LayerKind::Gru] {
            let m = fixtures::make_benchmark_shape_seeded(*b, cell, a.seed)?;
            let path = a.out_dir.join(format!("{}.json", m.name));
            hlsrnn::model::save_model(&m, &path)?;
        }
    }
    let ext = if a.json { "json" } else { "csv" };
    for task in [Task::BinarySeq, Task::MulticlassSeq] {
        let d = fixtures::make_synthetic_dataset(task, a.samples, a.seed)?;
        d.save(a.out_dir.join(format!("{task}.{ext}")))?;
    }
    Ok(())
}
