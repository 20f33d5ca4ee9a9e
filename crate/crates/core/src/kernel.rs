//! Affine stencil kernels.
//!
//! A kernel computes, for every component `c` of a mesh point at position
//! `x`:
//!
//! ```text
//! acc  = sum_t coeff_t(x) * in[x + offset_t][c]        (taps in declaration order)
//! acc *= sum_j weight_j * field_j[x]                   (only if modulation is non-empty)
//! acc *= scale                                         (only if a scale is set)
//! ```
//!
//! Sums are accumulated left to right starting from the first product, so
//! every executor that follows this order produces bit-identical results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// DSP blocks charged per single-precision multiply by [`StencilKernel::estimate_dsp`].
pub const DSP_PER_MUL: u32 = 2;
/// DSP blocks charged per single-precision add by [`StencilKernel::estimate_dsp`].
pub const DSP_PER_ADD: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Const(f32),
    /// `weight * field[x]`, read at the output point (a self-stencil).
    Field {
        field: usize,
        weight: f32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    /// Cell offset along (m, n, l); the third entry is zero for 2D kernels.
    pub offset: [i32; 3],
    pub coeff: Coefficient,
}

impl Tap {
    pub fn new(offset: [i32; 3], coeff: f32) -> Self {
        Self {
            offset,
            coeff: Coefficient::Const(coeff),
        }
    }

    pub fn field(offset: [i32; 3], field: usize, weight: f32) -> Self {
        Self {
            offset,
            coeff: Coefficient::Field { field, weight },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilKernel {
    name: String,
    ndim: usize,
    taps: Vec<Tap>,
    pointwise_fields: Vec<String>,
    modulation: Vec<(usize, f32)>,
    scale: Option<f32>,
    arity: usize,
    dsp_cost: u32,
}

impl StencilKernel {
    pub fn new(name: impl Into<String>, ndim: usize, taps: Vec<Tap>, dsp_cost: u32) -> Result<Self> {
        let kernel = Self {
            name: name.into(),
            ndim,
            taps,
            pointwise_fields: Vec::new(),
            modulation: Vec::new(),
            scale: None,
            arity: 1,
            dsp_cost,
        };
        kernel.check()?;
        Ok(kernel)
    }

    pub fn with_arity(mut self, arity: usize) -> Result<Self> {
        self.arity = arity;
        self.check()?;
        Ok(self)
    }

    pub fn with_pointwise_fields(mut self, names: Vec<String>) -> Result<Self> {
        self.pointwise_fields = names;
        self.check()?;
        Ok(self)
    }

    /// Multiplies the tap sum by `sum_j weight_j * field_j[x]`.
    pub fn with_modulation(mut self, terms: Vec<(usize, f32)>) -> Result<Self> {
        self.modulation = terms;
        self.check()?;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f32) -> Result<Self> {
        self.scale = Some(scale);
        self.check()?;
        Ok(self)
    }

    pub fn with_dsp_cost(mut self, dsp_cost: u32) -> Result<Self> {
        self.dsp_cost = dsp_cost;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if self.ndim != 2 && self.ndim != 3 {
            return Err(Error::Kernel(format!("{}: ndim must be 2 or 3", self.name)));
        }
        if self.taps.is_empty() {
            return Err(Error::Kernel(format!("{}: no taps", self.name)));
        }
        if self.arity == 0 {
            return Err(Error::Kernel(format!("{}: arity must be at least 1", self.name)));
        }
        if self.dsp_cost == 0 {
            return Err(Error::Kernel(format!(
                "{}: DSP cost must be positive for a kernel with arithmetic taps",
                self.name
            )));
        }
        let fields = self.pointwise_fields.len();
        for tap in &self.taps {
            if self.ndim == 2 && tap.offset[2] != 0 {
                return Err(Error::Kernel(format!(
                    "{}: 2D kernel has a tap with a third-axis offset",
                    self.name
                )));
            }
            if let Coefficient::Field { field, .. } = tap.coeff {
                if field >= fields {
                    return Err(Error::Kernel(format!(
                        "{}: tap refers to pointwise field {field}, only {fields} declared",
                        self.name
                    )));
                }
            }
            let finite = match tap.coeff {
                Coefficient::Const(c) => c.is_finite(),
                Coefficient::Field { weight, .. } => weight.is_finite(),
            };
            if !finite {
                return Err(Error::Kernel(format!("{}: non-finite coefficient", self.name)));
            }
        }
        for &(field, weight) in &self.modulation {
            if field >= fields || !weight.is_finite() {
                return Err(Error::Kernel(format!(
                    "{}: bad modulation term ({field}, {weight})",
                    self.name
                )));
            }
        }
        if matches!(self.scale, Some(s) if !s.is_finite()) {
            return Err(Error::Kernel(format!("{}: non-finite scale", self.name)));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn pointwise_fields(&self) -> &[String] {
        &self.pointwise_fields
    }

    pub fn modulation(&self) -> &[(usize, f32)] {
        &self.modulation
    }

    pub fn scale(&self) -> Option<f32> {
        self.scale
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dsp_cost(&self) -> u32 {
        self.dsp_cost
    }

    /// Largest absolute tap offset over all dimensions.
    pub fn radius(&self) -> usize {
        self.taps
            .iter()
            .flat_map(|t| t.offset)
            .map(|o| o.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Stencil order `D = 2 * radius`.
    pub fn order(&self) -> u32 {
        2 * self.radius() as u32
    }

    /// Rough DSP count for one mesh-point update from the operation mix.
    ///
    /// This is an estimate only; measured post-synthesis costs should be
    /// supplied through the kernel's `dsp_cost` instead.
    pub fn estimate_dsp(&self) -> u32 {
        let taps = self.taps.len() as u32;
        let field_taps = self
            .taps
            .iter()
            .filter(|t| matches!(t.coeff, Coefficient::Field { .. }))
            .count() as u32;
        let mut muls = taps + field_taps;
        let mut adds = taps - 1;
        if !self.modulation.is_empty() {
            muls += self.modulation.len() as u32 + 1;
            adds += self.modulation.len() as u32 - 1;
        }
        if self.scale.is_some() {
            muls += 1;
        }
        self.arity as u32 * (muls * DSP_PER_MUL + adds * DSP_PER_ADD)
    }
}
