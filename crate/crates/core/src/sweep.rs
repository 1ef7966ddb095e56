//! Quantization and reuse sweeps, and the static/non-static comparison.
//!
//! Sweep points run in parallel; rows are sorted before they are returned,
//! so output never depends on scheduling. CSV tables start with a
//! `schema_version` column.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;
use crate::engine::{run_sequence_float, Engine, EngineConfig, EngineError, RnnMode};
use crate::fxp::{FxpError, FxpFormat};
use crate::metrics::{ratio_against, MetricsError, ScoredDataset};
use crate::model::NetworkModel;
use crate::perf::{Estimator, HardwareConfig, PerfError, PerfEstimate, ReusePair};

pub const QUANT_SCHEMA_VERSION: u32 = 1;
pub const REUSE_SCHEMA_VERSION: u32 = 1;

/// Integer-bit settings profiled by default.
pub const DEFAULT_INTEGER_BITS: [u32; 4] = [6, 8, 10, 12];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Perf(#[from] PerfError),
    #[error("invalid precision fixed<{total},{integer}>: {source}")]
    Precision {
        total: u32,
        integer: u32,
        #[source]
        source: FxpError,
    },
    #[error("dataset is {data_seq} x {data_dim} but the model expects {model_seq} x {model_dim}")]
    Shape {
        data_seq: usize,
        data_dim: usize,
        model_seq: usize,
        model_dim: usize,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn check_shape(model: &NetworkModel, data: &Dataset) -> Result<(), SweepError> {
    if data.seq_len != model.seq_len() || data.input_dim != model.input_dim() {
        return Err(SweepError::Shape {
            data_seq: data.seq_len,
            data_dim: data.input_dim,
            model_seq: model.seq_len(),
            model_dim: model.input_dim(),
        });
    }
    Ok(())
}

/// Scores every row with the double-precision reference.
pub fn reference_scores(model: &NetworkModel, data: &Dataset) -> Result<ScoredDataset, SweepError> {
    check_shape(model, data)?;
    let scores = data
        .rows
        .par_iter()
        .map(|r| run_sequence_float(model, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoredDataset::new(scores, data.labels.clone())?)
}

pub fn fixed_scores(model: &NetworkModel, data: &Dataset, cfg: EngineConfig) -> Result<ScoredDataset, SweepError> {
    check_shape(model, data)?;
    let scores = Engine::new(model, cfg)?.run_batch(&data.rows)?;
    Ok(ScoredDataset::new(scores, data.labels.clone())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantRow {
    pub integer_bits: u32,
    pub frac_bits: u32,
    pub aucs: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl QuantRow {
    pub fn total_bits(&self) -> u32 {
        self.integer_bits + self.frac_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantSweep {
    pub reference_aucs: Vec<f64>,
    pub rows: Vec<QuantRow>,
}

impl QuantSweep {
    pub fn row(&self, integer_bits: u32, frac_bits: u32) -> Option<&QuantRow> {
        self.rows
            .iter()
            .find(|r| r.integer_bits == integer_bits && r.frac_bits == frac_bits)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SweepError> {
        let k = self.reference_aucs.len();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["schema_version", "integer_bits", "frac_bits", "total_bits"]
            .map(String::from)
            .to_vec();
        header.extend((0..k).map(|c| format!("reference_auc_{c}")));
        header.extend((0..k).map(|c| format!("auc_{c}")));
        header.extend((0..k).map(|c| format!("auc_ratio_{c}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                QUANT_SCHEMA_VERSION.to_string(),
                r.integer_bits.to_string(),
                r.frac_bits.to_string(),
                r.total_bits().to_string(),
            ];
            rec.extend(self.reference_aucs.iter().map(f64::to_string));
            rec.extend(r.aucs.iter().map(f64::to_string));
            rec.extend(r.ratios.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// AUC ratio at every `fixed<I+F, I>` point. `base` supplies everything but
/// the precision. The reference pass runs once.
pub fn sweep_quant(
    model: &NetworkModel,
    data: &Dataset,
    integer_bits: &[u32],
    frac_bits: &[u32],
    base: &EngineConfig,
) -> Result<QuantSweep, SweepError> {
    let reference = reference_scores(model, data)?;
    let reference_aucs = reference.class_aucs()?;
    let mut points = Vec::new();
    for &i in integer_bits {
        for &f in frac_bits {
            let fmt = FxpFormat::signed(i + f, i).map_err(|source| SweepError::Precision {
                total: i + f,
                integer: i,
                source,
            })?;
            points.push((i, f, fmt));
        }
    }
    let mut rows = points
        .into_par_iter()
        .map(|(i, f, fmt)| {
            let cfg = EngineConfig {
                precision: fmt,
                ..*base
            };
            let q = fixed_scores(model, data, cfg)?;
            let aucs = q.class_aucs()?;
            let ratios = ratio_against(&q, &reference_aucs)?;
            Ok(QuantRow {
                integer_bits: i,
                frac_bits: f,
                aucs,
                ratios,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    rows.sort_by_key(|r| (r.integer_bits, r.frac_bits));
    Ok(QuantSweep { reference_aucs, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReuseRow {
    pub reuse: ReusePair,
    pub total_bits: u32,
    pub integer_bits: u32,
    pub estimate: PerfEstimate,
}

pub fn sweep_reuse(
    model: &NetworkModel,
    reuse: &[ReusePair],
    total_bits: &[u32],
    integer_bits: u32,
    base: &HardwareConfig,
    estimator: &Estimator,
) -> Result<Vec<ReuseRow>, SweepError> {
    let mut points = Vec::new();
    for &r in reuse {
        for &w in total_bits {
            let fmt = FxpFormat::signed(w, integer_bits.min(w)).map_err(|source| SweepError::Precision {
                total: w,
                integer: integer_bits,
                source,
            })?;
            points.push((r, w, fmt));
        }
    }
    let mut rows = points
        .into_par_iter()
        .map(|(r, w, fmt)| {
            let hw = HardwareConfig { reuse: r, ..*base };
            Ok(ReuseRow {
                reuse: r,
                total_bits: w,
                integer_bits: fmt.integer_bits(),
                estimate: estimator.estimate(model, &hw, fmt)?,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    rows.sort_by_key(|r| (r.reuse.kernel, r.reuse.recurrent, r.reuse.lstm_recurrent, r.total_bits));
    Ok(rows)
}

pub const REUSE_HEADER: [&str; 20] = [
    "schema_version",
    "reuse",
    "kernel_reuse",
    "recurrent_reuse",
    "total_bits",
    "integer_bits",
    "dsp",
    "ff",
    "lut",
    "bram",
    "latency_cycles_min",
    "latency_cycles_max",
    "latency_us_min",
    "latency_us_max",
    "ii_cycles",
    "throughput_hz",
    "fits_dsp",
    "fits_ff",
    "fits_lut",
    "fits_bram",
];

fn fit_cell(fits: Option<bool>) -> String {
    fits.map_or_else(String::new, |b| b.to_string())
}

pub fn write_reuse_csv<W: Write>(rows: &[ReuseRow], model: &NetworkModel, writer: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REUSE_HEADER)?;
    let kind = model.recurrent_layer().map(|l| l.spec.kind);
    for r in rows {
        let e = &r.estimate;
        let (x, y) = kind.map_or((r.reuse.kernel, r.reuse.recurrent), |k| r.reuse.for_kind(k));
        let fits = e.fits;
        w.write_record([
            REUSE_SCHEMA_VERSION.to_string(),
            r.reuse.to_string(),
            x.to_string(),
            y.to_string(),
            r.total_bits.to_string(),
            r.integer_bits.to_string(),
            e.dsp.to_string(),
            e.ff.to_string(),
            e.lut.to_string(),
            e.bram.to_string(),
            e.latency_cycles_min.to_string(),
            e.latency_cycles_max.to_string(),
            e.latency_us_min.to_string(),
            e.latency_us_max.to_string(),
            e.ii_cycles.to_string(),
            e.throughput_hz.to_string(),
            fit_cell(fits.map(|f| f.dsp.fits)),
            fit_cell(fits.map(|f| f.ff.fits)),
            fit_cell(fits.map(|f| f.lut.fits)),
            fit_cell(fits.map(|f| f.bram.fits)),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub precision: FxpFormat,
    pub reuse: ReusePair,
    #[serde(rename = "static")]
    pub static_mode: PerfEstimate,
    pub non_static: PerfEstimate,
    /// Both execution orders produced identical raw outputs on the probe.
    pub outputs_identical: bool,
    pub probe_output: Vec<f64>,
}

/// A deterministic probe sequence for `model`, uniform in `[-range, range)`.
pub fn probe_sequence(model: &NetworkModel, seed: u64, range: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..model.seq_len() * model.input_dim())
        .map(|_| rng.gen_range(-range..range))
        .collect()
}

pub fn compare_modes(
    model: &NetworkModel,
    engine: &EngineConfig,
    hw: &HardwareConfig,
    estimator: &Estimator,
    probe: &[f64],
) -> Result<ModeComparison, SweepError> {
    let precision = engine.precision;
    let static_hw = HardwareConfig {
        mode: RnnMode::Static,
        ..hw.clone()
    };
    let non_static_hw = HardwareConfig {
        mode: RnnMode::NonStatic,
        ..hw.clone()
    };
    let run =
        |mode| -> Result<_, SweepError> { Ok(Engine::new(model, (*engine).with_mode(mode))?.run_sequence(probe)?) };
    let a = run(RnnMode::Static)?;
    let b = run(RnnMode::NonStatic)?;
    Ok(ModeComparison {
        precision,
        reuse: hw.reuse,
        static_mode: estimator.estimate(model, &static_hw, precision)?,
        non_static: estimator.estimate(model, &non_static_hw, precision)?,
        outputs_identical: a == b,
        probe_output: a.iter().map(|v| v.to_f64()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{make_benchmark_shape, make_synthetic_dataset, Benchmark, Task};
    use crate::model::LayerKind;

    fn small() -> (NetworkModel, Dataset) {
        let m = make_benchmark_shape(Benchmark::TopTagging, LayerKind::Gru).unwrap();
        let d = make_synthetic_dataset(Task::BinarySeq, 60, 3).unwrap();
        (m, d)
    }

    #[test]
    fn empty_frac_range_gives_header_only() {
        let (m, d) = small();
        let cfg = EngineConfig::new(FxpFormat::signed(16, 6).unwrap());
        let s = sweep_quant(&m, &d, &DEFAULT_INTEGER_BITS, &[], &cfg).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("schema_version,integer_bits,frac_bits"));
    }

    #[test]
    fn quant_rows_sorted_and_complete() {
        let (m, d) = small();
        let cfg = EngineConfig::new(FxpFormat::signed(16, 6).unwrap());
        let s = sweep_quant(&m, &d, &[8, 6], &[10, 4], &cfg).unwrap();
        let keys: Vec<_> = s.rows.iter().map(|r| (r.integer_bits, r.frac_bits)).collect();
        assert_eq!(keys, vec![(6, 4), (6, 10), (8, 4), (8, 10)]);
        assert_eq!(s.reference_aucs.len(), 1);
    }

    #[test]
    fn degenerate_labels_rejected() {
        let (m, mut d) = small();
        d.labels.iter_mut().for_each(|l| *l = 0);
        let cfg = EngineConfig::new(FxpFormat::signed(16, 6).unwrap());
        assert!(matches!(
            sweep_quant(&m, &d, &[6], &[8], &cfg),
            Err(SweepError::Metrics(MetricsError::DegenerateLabels))
        ));
    }

    #[test]
    fn reuse_sweep_single_point() {
        let (m, _) = small();
        let hw = HardwareConfig::new(ReusePair::new(6, 5));
        let rows = sweep_reuse(&m, &[ReusePair::new(6, 5)], &[16], 6, &hw, &Estimator::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let mut out = Vec::new();
        write_reuse_csv(&rows, &m, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1,\"(6,5)\",6,5,16,6,"));
    }

    #[test]
    fn compare_modes_reports_equivalence() {
        let (m, _) = small();
        let cfg = EngineConfig::new(FxpFormat::signed(16, 6).unwrap());
        let hw = HardwareConfig::new(ReusePair::new(6, 5));
        let probe = probe_sequence(&m, 1, 2.0);
        let c = compare_modes(&m, &cfg, &hw, &Estimator::default(), &probe).unwrap();
        assert!(c.outputs_identical);
        assert_eq!(c.static_mode.ii_cycles, c.static_mode.latency_cycles);
        assert_eq!(c.non_static.ii_cycles, c.non_static.step_latency_cycles);
        let rnn = |e: &PerfEstimate| e.recurrent_layer().unwrap().dsp;
        assert_eq!(rnn(&c.non_static), 20 * rnn(&c.static_mode));
    }
}
