//! Bit-accurate fixed-point execution of LSTM/GRU networks and first-order
//! FPGA cost estimation for their hls4ml-style hardware implementations.
//!
//! * [`fxp`]: fixed-point formats, rounding and saturation.
//! * [`model`]: network representation and the JSON weight format.
//! * [`activation`]: lookup-table sigmoid, tanh and softmax.
//! * [`engine`]: quantized LSTM/GRU/dense execution, static and non-static.
//! * [`perf`]: DSP/FF/LUT/BRAM, latency, II and throughput estimates.
//! * [`metrics`]: ROC AUC and the quantized/float AUC ratio.
//! * [`fixtures`]: benchmark-shaped models and synthetic datasets.
//! * [`sweep`]: quantization, reuse and mode-comparison studies.

pub mod activation;
pub mod data;
pub mod engine;
pub mod fixtures;
pub mod fxp;
pub mod metrics;
pub mod model;
pub mod perf;
pub mod sweep;

pub use activation::{ActivationImpl, ActivationSet, LutConfig, SamplePoint, SoftmaxImpl, TableFn};
pub use data::Dataset;
pub use engine::{Engine, EngineConfig, RnnMode};
pub use fxp::{FxpFormat, FxpValue, Overflow, QuantPolicy, Rounding};
pub use model::{LayerKind, NetworkModel};
pub use perf::{HardwareConfig, PerfEstimate, ReusePair, Strategy};
