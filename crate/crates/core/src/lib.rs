//! Performance model, golden reference and cycle-level simulator for
//! streaming stencil accelerators.
//!
//! The crate describes stencil kernels and fused multi-stage pipelines over
//! structured 2D/3D meshes, predicts cycle counts and resource limits of a
//! vectorized, unrolled dataflow design, and executes the same design with a
//! streaming simulator whose results can be compared bit for bit with a
//! naive reference.

pub mod apps;
pub mod design;
pub mod error;
pub mod explore;
pub mod feasibility;
pub mod kernel;
pub mod mesh;
pub mod model;
pub mod pipeline;
pub mod reference;
pub mod simulator;
pub mod tiling;

pub use design::{DesignPoint, ResourceProfile, Tile};
pub use error::{Error, Result};
pub use explore::{best_design, enumerate_designs, Constraints, Exploration, RankedDesign, TileChoice};
pub use feasibility::{validate_design, FeasibilityReport, Limits, Violation};
pub use kernel::{Coefficient, StencilKernel, Tap};
pub use mesh::{FieldData, FieldSet, MeshGeometry};
pub use model::{predict, ModelReport};
pub use pipeline::{Combine, PipelineSpec, Stage, Workload};
pub use reference::{run_reference, run_reference_batch};
pub use simulator::{build_pipeline, SimPipeline, SimResult};
