//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! (run with `--nocapture` to see them) and then asserts.

mod common;

use std::time::{Duration, Instant};

use hlsrnn::activation::{ActivationSet, Lut, LutConfig, TableFn};
use hlsrnn::engine::{Engine, EngineConfig, RnnMode};
use hlsrnn::fixtures::{make_benchmark_shape, make_synthetic_dataset, surrogate_model, Benchmark, Task};
use hlsrnn::fxp::{FxpFormat, Overflow, QuantPolicy, Rounding};
use hlsrnn::metrics::roc_auc;
use hlsrnn::model::{count_multiplies, count_parameters, LayerKind, NetworkModel};
use hlsrnn::perf::{estimate, estimate_dsp, Estimator, HardwareConfig, ReusePair, Strategy as HwStrategy};
use hlsrnn::sweep::{sweep_quant, QuantSweep};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_auc, oracle_forward, random_model, random_sequence, report, serial, SMALL};

const CELLS: [LayerKind; 2] = [LayerKind::Lstm, LayerKind::Gru];

fn fmt(w: u32, i: u32) -> FxpFormat {
    FxpFormat::signed(w, i).unwrap()
}

fn within(actual: f64, target: f64, rel: f64) -> bool {
    (actual - target).abs() <= rel * target
}

fn timed<T>(limit: Duration, f: impl FnOnce() -> T) -> (T, Duration, bool) {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    (out, took, took < limit)
}

#[test]
fn criterion_01_parameter_counts() {
    let _g = serial();
    let expected = [
        (Benchmark::TopTagging, LayerKind::Lstm, 2160, 1409),
        (Benchmark::TopTagging, LayerKind::Gru, 1680, 1409),
        (Benchmark::FlavorTagging, LayerKind::Lstm, 60960, 6593),
        (Benchmark::FlavorTagging, LayerKind::Gru, 46080, 6593),
        (Benchmark::Quickdraw, LayerKind::Lstm, 67584, 66565),
        (Benchmark::Quickdraw, LayerKind::Gru, 51072, 66565),
    ];
    let (mismatches, took, fast) = timed(Duration::from_secs(1), || {
        expected
            .iter()
            .filter_map(|&(b, cell, rnn, rest)| {
                let p = count_parameters(&make_benchmark_shape(b, cell).unwrap());
                ((p.recurrent, p.non_recurrent) != (rnn, rest))
                    .then(|| format!("{b} {cell}: {} / {}", p.recurrent, p.non_recurrent))
            })
            .collect::<Vec<_>>()
    });
    let pass = mismatches.is_empty() && fast;
    report(
        1,
        "parameter counts",
        pass,
        &format!("6/6 shapes checked, mismatches {mismatches:?}, {took:?}"),
    );
    assert!(pass);
}

fn policy_strategy() -> impl Strategy<Value = QuantPolicy> {
    (prop::bool::ANY, prop::bool::ANY).prop_map(|(r, o)| {
        QuantPolicy::new(
            if r { Rounding::NearestEven } else { Rounding::Truncate },
            if o { Overflow::Wrap } else { Overflow::Saturate },
        )
    })
}

fn tables_strategy() -> impl Strategy<Value = ActivationSet> {
    prop_oneof![
        Just(ActivationSet::default()),
        Just(ActivationSet::left_edge()),
        Just(ActivationSet::direct())
    ]
}

#[test]
fn criterion_02_static_non_static_equivalence() {
    let _g = serial();
    let cases = 1000;
    let strategy = (
        any::<u64>(),
        (4u32..=40).prop_flat_map(|w| (Just(w), 1..w)),
        policy_strategy(),
        tables_strategy(),
        prop_oneof![Just(0.5), Just(2.0), Just(8.0), Just(100.0)],
    );
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let (result, took, fast) = timed(Duration::from_secs(60), || {
        runner
            .run(&strategy, |(seed, (w, i), policy, tables, range)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let model = random_model(&mut rng, SMALL);
                let seq = random_sequence(&model, range, &mut rng);
                let cfg = EngineConfig::new(fmt(w, i))
                    .with_policy(policy)
                    .with_activations(tables);
                let a = Engine::new(&model, cfg.with_mode(RnnMode::Static))
                    .unwrap()
                    .run_sequence(&seq)
                    .unwrap();
                let b = Engine::new(&model, cfg.with_mode(RnnMode::NonStatic))
                    .unwrap()
                    .run_sequence(&seq)
                    .unwrap();
                if a != b {
                    return Err(TestCaseError::fail(format!("static {a:?} != non-static {b:?}")));
                }
                Ok(())
            })
            .map_err(|e| match e {
                TestError::Fail(why, input) => format!("counterexample {input:?}: {why}"),
                e => format!("{e}"),
            })
    });
    let detail = match &result {
        Ok(()) => format!("{cases} random cases bit-identical, {took:?}"),
        Err(e) => e.clone(),
    };
    let pass = result.is_ok() && fast;
    report(2, "static/non-static bit equivalence", pass, &detail);
    assert!(pass);
}

fn quant_sweep(cell: LayerKind, n: usize) -> QuantSweep {
    let model = surrogate_model(Benchmark::TopTagging, cell).unwrap();
    let data = make_synthetic_dataset(Task::BinarySeq, n, 2).unwrap();
    let base = EngineConfig::new(fmt(16, 6));
    let frac: Vec<u32> = (2..=16).collect();
    sweep_quant(&model, &data, &[6, 8, 10, 12], &frac, &base).unwrap()
}

#[test]
fn criterion_03_quantization_plateau() {
    let _g = serial();
    let (sweeps, took, fast) = timed(Duration::from_secs(300), || {
        CELLS.map(|cell| (cell, quant_sweep(cell, 2000)))
    });
    let mut failures = Vec::new();
    let mut worst_plateau = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for (cell, s) in &sweeps {
        for f in 10..=16 {
            let r6 = s.row(6, f).unwrap().ratios[0];
            let r12 = s.row(12, f).unwrap().ratios[0];
            worst_gap = worst_gap.max((r6 - r12).abs());
            if (r6 - r12).abs() > 0.02 {
                failures.push(format!("{cell} F={f}: I=6 {r6:.4} vs I=12 {r12:.4}"));
            }
            if f >= 14 {
                worst_plateau = worst_plateau.min(r6);
                if r6 < 0.995 {
                    failures.push(format!("{cell} F={f}: ratio {r6:.4} < 0.995"));
                }
            }
        }
    }
    let refs: Vec<String> = sweeps
        .iter()
        .map(|(c, s)| format!("{c} reference AUC {:.4}", s.reference_aucs[0]))
        .collect();
    let pass = failures.is_empty() && fast;
    report(
        3,
        "quantization plateau",
        pass,
        &format!(
            "{}; min ratio at F>=14 {worst_plateau:.5}, max |I6-I12| at F>=10 {worst_gap:.5}, {took:?} {failures:?}",
            refs.join(", ")
        ),
    );
    assert!(pass);
}

fn rnn_dsp(model: &NetworkModel, hw: &HardwareConfig, p: FxpFormat) -> u64 {
    Estimator::default().layer_costs(model, hw, p)[0].dsp
}

#[test]
fn criterion_04_reuse_dsp_law() {
    let _g = serial();
    let ((anchor, doubled_width, violations, points), took, fast) = timed(Duration::from_secs(1), || {
        let top = make_benchmark_shape(Benchmark::TopTagging, LayerKind::Lstm).unwrap();
        let hw = HardwareConfig::new(ReusePair::new(6, 5));
        let anchor = rnn_dsp(&top, &hw, fmt(16, 6));
        let doubled_width = (estimate_dsp(&top, &hw, fmt(16, 6)), estimate_dsp(&top, &hw, fmt(20, 6)));
        let mut violations = Vec::new();
        let mut points = 0;
        for b in Benchmark::ALL {
            for cell in CELLS {
                let model = make_benchmark_shape(b, cell).unwrap();
                for strategy in [HwStrategy::Resource, HwStrategy::Latency] {
                    for mode in [RnnMode::Static, RnnMode::NonStatic] {
                        for (x, y) in [
                            (1, 1),
                            (1, 3),
                            (5, 2),
                            (6, 5),
                            (12, 10),
                            (30, 20),
                            (48, 40),
                            (100, 7),
                            (384, 256),
                        ] {
                            for w in [8, 16, 18, 20, 32] {
                                let p = fmt(w, 6);
                                let base = HardwareConfig::new(ReusePair::new(x, y))
                                    .with_strategy(strategy)
                                    .with_mode(mode);
                                let twice = HardwareConfig {
                                    reuse: base.reuse.scaled(2),
                                    ..base.clone()
                                };
                                let a = estimate(&model, &base, p).unwrap();
                                let d = estimate(&model, &twice, p).unwrap();
                                points += 1;
                                if d.dsp > a.dsp || d.ff > a.ff || d.lut > a.lut || d.bram > a.bram {
                                    violations.push(format!("{b} {cell} {:?} {:?} R=({x},{y}) W={w}", strategy, mode));
                                }
                            }
                        }
                    }
                }
            }
        }
        (anchor, doubled_width, violations, points)
    });
    let pass = anchor == 400 && doubled_width.1 == 2 * doubled_width.0 && violations.is_empty() && fast;
    report(
        4,
        "reuse/DSP law",
        pass,
        &format!(
            "recurrent DSP at R=(6,5) W=16: {anchor}; total DSP W=16 {} -> W=20 {}; doubling R checked at {points} points, {} increases; {took:?}",
            doubled_width.0,
            doubled_width.1,
            violations.len()
        ),
    );
    assert!(pass, "{violations:?}");
}

#[test]
fn criterion_05_mode_algebra() {
    let _g = serial();
    let (lines, took, fast) = timed(Duration::from_secs(1), || {
        let gru = make_benchmark_shape(Benchmark::TopTagging, LayerKind::Gru).unwrap();
        let p = fmt(16, 6);
        let mut ok = true;
        let mut notes = Vec::new();
        for r in [(1, 1), (6, 5), (12, 10), (30, 20), (60, 60)] {
            let hw = HardwareConfig::new(ReusePair::new(r.0, r.1));
            let s = estimate(&gru, &hw, p).unwrap();
            let n = estimate(&gru, &hw.clone().with_mode(RnnMode::NonStatic), p).unwrap();
            ok &= s.ii_cycles == s.latency_cycles;
            ok &= n.ii_cycles == n.step_latency_cycles;
        }
        let lat = HardwareConfig::new(ReusePair::new(1, 1)).with_strategy(HwStrategy::Latency);
        let s = estimate(&gru, &lat, p).unwrap();
        let n = estimate(&gru, &lat.clone().with_mode(RnnMode::NonStatic), p).unwrap();
        ok &= s.ii_cycles == s.latency_cycles;
        let ii_ok = within(s.ii_cycles as f64, 315.0, 0.15);
        let lat_us = s.latency_cycles as f64 / s.clock_hz as f64 * 1e6;
        let lat_ok = within(lat_us, 1.7, 0.15);
        let pipe_ok = n.ii_cycles == 1;
        notes.push(format!(
            "static II {} (target 315), latency {lat_us:.3} us (target 1.7), non-static II {}",
            s.ii_cycles, n.ii_cycles
        ));
        (ok && ii_ok && lat_ok && pipe_ok, notes)
    });
    let pass = lines.0 && fast;
    report(5, "mode algebra", pass, &format!("{}; {took:?}", lines.1.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_06_latency_calibration_band() {
    let _g = serial();
    let gru = make_benchmark_shape(Benchmark::TopTagging, LayerKind::Gru).unwrap();
    let targets = [((6, 5), 2.4), ((12, 10), 3.2), ((30, 20), 5.0), ((60, 60), 8.0)];
    let mins: Vec<f64> = targets
        .iter()
        .map(|&((x, y), _)| {
            estimate(&gru, &HardwareConfig::new(ReusePair::new(x, y)), fmt(16, 6))
                .unwrap()
                .latency_us_min
        })
        .collect();
    let each = mins.iter().zip(&targets).all(|(m, (_, t))| within(*m, *t, 0.20));
    let ordered = mins.windows(2).all(|w| w[0] < w[1]);
    let pass = each && ordered;
    let shown: Vec<String> = mins
        .iter()
        .zip(&targets)
        .map(|(m, (r, t))| format!("R={r:?} {m:.2} us (target {t})"))
        .collect();
    report(
        6,
        "latency calibration band",
        pass,
        &format!("{}; strictly ordered {ordered}", shown.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_07_throughput_identity() {
    let _g = serial();
    let lstm = make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Lstm).unwrap();
    let ratio = |s: &str| s.parse::<ReusePair>().unwrap();
    let points = ["(48,32)", "(96,64)", "(192,128)", "(384,384 [256])"].map(ratio);
    let mut exact = true;
    let mut rates = Vec::new();
    for r in points {
        for w in [12, 16, 24] {
            let e = estimate(&lstm, &HardwareConfig::new(r), fmt(w, 10)).unwrap();
            let t: Ratio<u64> = e.throughput();
            exact &= t * Ratio::from_integer(e.ii_cycles) == Ratio::from_integer(e.clock_hz);
            exact &= e.throughput_hz == e.clock_hz as f64 / e.ii_cycles as f64;
            rates.push(e.throughput_hz);
        }
    }
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(0.0, f64::max);
    let span_ok = within(lo, 4300.0, 0.20) && within(hi, 9700.0, 0.20);
    let pass = exact && span_ok;
    report(
        7,
        "throughput identity",
        pass,
        &format!("throughput spans [{lo:.0}, {hi:.0}] /s (target [4300, 9700] +-20%); throughput*II == clock exactly: {exact}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_gru_lstm_ratio() {
    let _g = serial();
    let mut exact = true;
    for b in Benchmark::ALL {
        let l = count_multiplies(&make_benchmark_shape(b, LayerKind::Lstm).unwrap())[0];
        let g = count_multiplies(&make_benchmark_shape(b, LayerKind::Gru).unwrap())[0];
        exact &= Ratio::new(g.total_per_step(), l.total_per_step()) == Ratio::new(3, 4);
        exact &= Ratio::new(g.kernel_per_step, l.kernel_per_step) == Ratio::new(3, 4);
        exact &= Ratio::new(g.recurrent_per_step, l.recurrent_per_step) == Ratio::new(3, 4);
    }
    let lstm = make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Lstm).unwrap();
    let gru = make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Gru).unwrap();
    let mut worst: f64 = 0.0;
    for (x, y) in [(1, 1), (48, 32), (96, 64), (192, 128), (384, 256), (384, 384)] {
        for w in [16, 20] {
            let hw = HardwareConfig::new(ReusePair::new(x, y));
            let r = rnn_dsp(&gru, &hw, fmt(w, 10)) as f64 / rnn_dsp(&lstm, &hw, fmt(w, 10)) as f64;
            worst = worst.max((r - 0.75).abs() / 0.75);
        }
    }
    let pass = exact && worst <= 0.02;
    report(
        8,
        "GRU:LSTM ratio",
        pass,
        &format!(
            "multiply ratio exactly 3/4: {exact}; worst DSP ratio deviation at n_h=128 {:.3}%",
            worst * 100.0
        ),
    );
    assert!(pass);
}

/// Largest elementwise engine/oracle gap over 100 random models.
fn worst_oracle_gap(cfg: EngineConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shape = common::ModelShape {
        max_seq: 20,
        max_hidden: 16,
        max_dense: 16,
        ..SMALL
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let model = random_model(&mut rng, shape);
        let seq = random_sequence(&model, 1.0, &mut rng);
        let got = Engine::new(&model, cfg).unwrap().run_sequence_f64(&seq).unwrap();
        for (g, w) in got.iter().zip(&oracle_forward(&model, &seq)) {
            worst = worst.max((g - w).abs());
        }
    }
    worst
}

#[test]
fn criterion_09_numeric_fidelity() {
    let _g = serial();
    let ulp = 2f64.powi(-24);
    let base = EngineConfig::new(fmt(32, 8)).with_activations(ActivationSet::direct());
    let rne = base.with_policy(QuantPolicy::new(Rounding::NearestEven, Overflow::Saturate));
    let worst = worst_oracle_gap(rne);
    // Truncation is biased, so its error grows with the operation count;
    // reported for reference only.
    let worst_trn = worst_oracle_gap(base);
    let model = surrogate_model(Benchmark::TopTagging, LayerKind::Lstm).unwrap();
    let data = make_synthetic_dataset(Task::BinarySeq, 2000, 2).unwrap();
    let s = sweep_quant(&model, &data, &[8], &[24], &rne).unwrap();
    let ratio = s.rows[0].ratios[0];
    let ratio_ok = format!("{ratio:.4}") == "1.0000";
    let pass = worst <= 10.0 * ulp && ratio_ok;
    report(
        9,
        "numeric fidelity",
        pass,
        &format!(
            "max |engine - oracle| {:.2} x 2^-24 over 100 models with nearest-even rounding (limit 10; truncation gives {:.2}); AUC ratio {ratio:.6}",
            worst / ulp,
            worst_trn / ulp
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_metrics_oracle() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut datasets = 0;
    let mut mismatches = 0;
    while datasets < 500 {
        let n = rng.gen_range(2..=200);
        let levels = [2, 5, 20, 0][rng.gen_range(0..4)];
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if levels == 0 {
                    rng.gen::<f64>()
                } else {
                    rng.gen_range(0..levels) as f64 / levels as f64
                }
            })
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        datasets += 1;
        if roc_auc(&scores, &labels).unwrap() != brute_force_auc(&scores, &labels) {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    report(
        10,
        "metrics oracle",
        pass,
        &format!("{datasets} datasets, {mismatches} mismatches"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_activation_error_bound() {
    let _g = serial();
    let grid = 1_000_000;
    let policy = QuantPolicy::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for (func, a, b) in [
        (TableFn::Sigmoid, -8.0, 8.0),
        (TableFn::Tanh, -8.0, 8.0),
        (TableFn::Exp, -8.0, 0.0),
        (TableFn::Reciprocal, 1.0, 16.0),
    ] {
        let cfg = LutConfig::default_for(func);
        let lut = Lut::build(func, cfg, policy).unwrap();
        let scale = cfg.entry_format.step();
        let mut worst: f64 = 0.0;
        for k in 0..grid {
            let x = a + (b - a) * k as f64 / grid as f64;
            let err = (lut.eval_raw(x) as f64 * scale - func.eval(x)).abs();
            worst = worst.max(err);
        }
        let bound = cfg.error_bound_on(func, a, b);
        pass &= worst <= bound;
        lines.push(format!("{func:?} on [{a}, {b}): max {worst:.3e} <= bound {bound:.3e}"));
    }
    report(11, "activation error bound", pass, &lines.join("; "));
    assert!(pass);
}
