//! Core algorithms for dual-band sub-THz street-canyon channel work:
//! measurement grid handling, noise filtering, path extraction and
//! clustering, two-wall ray tracing, quasi-deterministic synthesis and
//! large-scale parameter fits.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod kernels;
pub mod lsp;
pub mod mpc;
pub mod noise;
pub mod pipeline;
pub mod qd;
pub mod spectra;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{GeometryScene, PathKind, Polarization, RayPath};
pub use grid::{AngleGrid, BandConfig, CirGrid, MeasurementGrid, SPEED_OF_LIGHT};
pub use lsp::{FitModel, FitResult, LspReport, PathLossSample, Scenario};
pub use mpc::{BandTag, ClusterReport, ClusterSet, ExtractConfig, McdConfig, Mpc};
pub use noise::{NoiseEstimate, NoiseReport, ThresholdProfile};
pub use pipeline::{AnalyzeParams, BandAnalysis, LinkAnalysis, SynthSummary};
pub use qd::{CirRealization, MarkovChain, QdModelParams, QdPath, StateOrder};
pub use spectra::{Adps, Pap, Pdp, PowerGrid, Side};
