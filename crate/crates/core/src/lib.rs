//! ΣΔ quantization with adapted decimation for unitarily generated frames.

pub mod codec;
pub mod decimation;
pub mod frames;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod quantizer;
pub mod tolerances;

pub use codec::{decode, encode, EncodedBlock};
pub use decimation::{DecimationKind, DecimationOperators};
pub use frames::{build_ugf, AnalysisOperator, FrameSpec};
pub use linalg::CMatrix;
pub use operators::DecimationPlan;
pub use quantizer::{sigma_delta, Alphabet, QuantizationOutput};
