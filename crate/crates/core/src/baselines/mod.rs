//! Comparison methods: static principal components with lagged
//! reconstruction, and the frequency-domain dynamic principal component.

mod bdpc;
mod opc;
mod spectrum;

pub use bdpc::{bdpc_fit, bdpc_reconstruct, bdpc_scores, BdpcModel, BdpcReconstruction};
pub use opc::{opc_fit, opc_reconstruct_lagged, OpcFit, OpcReconstruction};
pub use spectrum::{estimate_cross_spectrum, Smoothing, SpectralEstimate};
