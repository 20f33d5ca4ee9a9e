//! Chains of fused stencil stages connected by streams.
//!
//! One pass through a pipeline performs one solver iteration. Stage `s`
//! applies its kernel to the output stream of stage `s - 1` (stage 0 reads
//! the primary field `Y`), producing the kernel value `K_s`. Its output
//! stream is then formed by the stage's [`Combine`] rule from `Y` and the
//! kernel values `K_0..=K_s` of the current pass. The last stage's output is
//! the next value of `Y`.
//!
//! Points closer than a stage's radius to the mesh boundary are not
//! computed: the stage passes its input through and its kernel value is 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::StencilKernel;
use crate::mesh::MeshGeometry;

/// How a stage forms its output: `[Y +] w_0 * K_{i_0} + w_1 * K_{i_1} + ...`,
/// accumulated left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combine {
    pub base: bool,
    pub terms: Vec<(usize, f32)>,
}

impl Combine {
    /// Output is the stage's own kernel value.
    pub fn kernel_only(stage: usize) -> Self {
        Self {
            base: false,
            terms: vec![(stage, 1.0)],
        }
    }

    pub fn base_plus(terms: Vec<(usize, f32)>) -> Self {
        Self { base: true, terms }
    }

    /// True when the rule is exactly `K_stage`, which needs no arithmetic.
    pub fn is_identity(&self, stage: usize) -> bool {
        !self.base && self.terms.len() == 1 && self.terms[0] == (stage, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub kernel: StencilKernel,
    pub combine: Combine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    name: String,
    stages: Vec<Stage>,
    pointwise_fields: Vec<String>,
}

impl PipelineSpec {
    pub fn new(name: impl Into<String>, stages: Vec<Stage>) -> Result<Self> {
        let name = name.into();
        let Some(first) = stages.first() else {
            return Err(Error::Pipeline(format!("{name}: at least one stage is required")));
        };
        let ndim = first.kernel.ndim();
        let arity = first.kernel.arity();
        let mut pointwise: Vec<String> = Vec::new();
        for (s, stage) in stages.iter().enumerate() {
            let k = &stage.kernel;
            if k.ndim() != ndim || k.arity() != arity {
                return Err(Error::Pipeline(format!(
                    "{name}: stage {s} is {}D with arity {}, stage 0 is {ndim}D with arity {arity}",
                    k.ndim(),
                    k.arity()
                )));
            }
            if !k.pointwise_fields().is_empty() {
                if pointwise.is_empty() {
                    pointwise = k.pointwise_fields().to_vec();
                } else if pointwise != k.pointwise_fields() {
                    return Err(Error::Pipeline(format!(
                        "{name}: stage {s} declares pointwise fields {:?}, expected {:?}",
                        k.pointwise_fields(),
                        pointwise
                    )));
                }
            }
            let c = &stage.combine;
            if !c.base && c.terms.is_empty() {
                return Err(Error::Pipeline(format!("{name}: stage {s} combines nothing")));
            }
            for &(j, w) in &c.terms {
                if j > s {
                    return Err(Error::Pipeline(format!(
                        "{name}: stage {s} refers to K_{j} which is not computed yet"
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::Pipeline(format!("{name}: stage {s} has a non-finite weight")));
                }
            }
        }
        Ok(Self {
            name,
            stages,
            pointwise_fields: pointwise,
        })
    }

    /// Single-stage pipeline whose output is the kernel value.
    pub fn single(kernel: StencilKernel) -> Self {
        let name = kernel.name().to_string();
        let pointwise_fields = kernel.pointwise_fields().to_vec();
        Self {
            name,
            stages: vec![Stage {
                kernel,
                combine: Combine::kernel_only(0),
            }],
            pointwise_fields,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn pointwise_fields(&self) -> &[String] {
        &self.pointwise_fields
    }

    pub fn ndim(&self) -> usize {
        self.stages[0].kernel.ndim()
    }

    pub fn arity(&self) -> usize {
        self.stages[0].kernel.arity()
    }

    /// Window-buffer depth of each stage, in rows (2D) or planes (3D).
    pub fn window_depths(&self) -> Vec<u32> {
        self.stages.iter().map(|s| s.kernel.order()).collect()
    }

    /// Checks that `g` can be processed: matching dimensionality and arity,
    /// and a plane at least as wide as every stage's order.
    pub fn check_geometry(&self, g: &MeshGeometry) -> Result<()> {
        if g.ndim() != self.ndim() {
            return Err(Error::GeometryMismatch(format!(
                "{}: pipeline is {}D, mesh is {}D",
                self.name,
                self.ndim(),
                g.ndim()
            )));
        }
        if g.arity() != self.arity() {
            return Err(Error::GeometryMismatch(format!(
                "{}: pipeline arity {}, mesh arity {}",
                self.name,
                self.arity(),
                g.arity()
            )));
        }
        let order = self.stages.iter().map(|s| s.kernel.order()).max().unwrap_or(0) as usize;
        if g.m() < order || g.n() < order {
            return Err(Error::GeometryMismatch(format!(
                "{}: mesh plane {}x{} is smaller than the stencil order {order}",
                self.name,
                g.m(),
                g.n()
            )));
        }
        Ok(())
    }
}

/// The per-iteration quantities the analytic model needs from a workload.
pub trait Workload {
    /// Total window-buffer depth per iteration (`D`; summed over fused stages).
    fn order(&self) -> u32;
    /// DSP blocks per mesh-point update of one iteration (`G_dsp`).
    fn dsp_cost(&self) -> u32;
    fn arity(&self) -> usize;
    /// Number of scalar pointwise fields read alongside the primary field.
    fn pointwise_count(&self) -> usize;
    fn ndim(&self) -> usize;
}

impl Workload for StencilKernel {
    fn order(&self) -> u32 {
        StencilKernel::order(self)
    }
    fn dsp_cost(&self) -> u32 {
        StencilKernel::dsp_cost(self)
    }
    fn arity(&self) -> usize {
        StencilKernel::arity(self)
    }
    fn pointwise_count(&self) -> usize {
        self.pointwise_fields().len()
    }
    fn ndim(&self) -> usize {
        StencilKernel::ndim(self)
    }
}

impl Workload for PipelineSpec {
    fn order(&self) -> u32 {
        self.stages.iter().map(|s| s.kernel.order()).sum()
    }
    fn dsp_cost(&self) -> u32 {
        self.stages.iter().map(|s| s.kernel.dsp_cost()).sum()
    }
    fn arity(&self) -> usize {
        PipelineSpec::arity(self)
    }
    fn pointwise_count(&self) -> usize {
        self.pointwise_fields.len()
    }
    fn ndim(&self) -> usize {
        PipelineSpec::ndim(self)
    }
}
