//! Cycle-counting model of the streaming accelerator.
//!
//! A pass streams the mesh (or one spatial block of it) through `p` copies
//! of the pipeline's stage group, chained head to tail. Each clock cycle
//! the source feeds one `V`-wide chunk of mesh-point records into the first
//! stage instance, and every stage instance that has buffered enough input
//! emits one chunk to its successor. A stage instance holds back its output
//! until the chunk carrying its farthest-ahead tap has arrived, so each one
//! adds a fixed fill delay; external memory is touched only by the source
//! and the sink at the two ends of the chain.
//!
//! Besides the streamed field, each record carries the sideband values a
//! later stage needs at the same mesh point: the pass-start value `Y`, the
//! pointwise coefficient fields, and kernel values of earlier stages.

mod layout;
mod window;

use serde::{Deserialize, Serialize};

pub use window::WindowBuffer;

use crate::design::{DesignPoint, Tile};
use crate::error::{Error, Result};
use crate::kernel::{Coefficient, Tap};
use crate::mesh::{FieldData, FieldSet, MeshGeometry};
use crate::model::unroll_limit_mem;
use crate::pipeline::{PipelineSpec, Stage, Workload};
use crate::tiling::AxisPlan;

use layout::{AxisSpan, StreamLayout, OUTSIDE};

/// Single-precision multiply latency used for the pipeline-depth estimate.
pub const FP_MUL_LATENCY: u64 = 4;
/// Single-precision add latency used for the pipeline-depth estimate.
pub const FP_ADD_LATENCY: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Final primary field of each mesh (one for unbatched runs).
    pub outputs: Vec<FieldData>,
    pub cycles: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    /// Block points computed beyond the nominal valid region of each block.
    pub redundant_cells: u64,
    pub effective_iterations: u64,
    pub passes: u64,
    /// Blocks streamed per pass.
    pub tiles: u64,
    /// Arithmetic pipeline depth of the whole chain, excluded from `cycles`.
    pub pipeline_latency_estimate: u64,
}

impl SimResult {
    pub fn output(&self) -> &FieldData {
        &self.outputs[0]
    }
}

/// Record layout of the stream entering or leaving one stage.
#[derive(Debug, Clone)]
struct RecordLayout {
    width: usize,
    y: Option<usize>,
    pointwise: usize,
    /// `(stage, offset)` of carried kernel values.
    kernel_values: Vec<(usize, usize)>,
}

impl RecordLayout {
    fn kernel_value(&self, stage: usize) -> usize {
        self.kernel_values
            .iter()
            .find(|&&(j, _)| j == stage)
            .map(|&(_, off)| off)
            .expect("kernel value is carried to every stage that combines it")
    }
}

#[derive(Debug, Clone)]
struct StagePlan {
    radius: i32,
    input: RecordLayout,
    output: RecordLayout,
}

fn record_layouts(pipe: &PipelineSpec) -> Vec<RecordLayout> {
    let arity = pipe.arity();
    let npw = pipe.pointwise_fields().len();
    let stages = pipe.stages();
    (0..stages.len())
        .map(|s| {
            let mut width = arity;
            let needs_y = s > 0 && stages[s..].iter().any(|st| st.combine.base);
            let y = needs_y.then(|| {
                width += arity;
                width - arity
            });
            let pointwise = width;
            width += npw;
            let mut kernel_values = Vec::new();
            for j in 0..s {
                if stages[s..]
                    .iter()
                    .any(|st| st.combine.terms.iter().any(|&(t, _)| t == j))
                {
                    kernel_values.push((j, width));
                    width += arity;
                }
            }
            RecordLayout {
                width,
                y,
                pointwise,
                kernel_values,
            }
        })
        .collect()
}

/// A pipeline configured for a design point and mesh geometry.
#[derive(Debug, Clone)]
pub struct SimPipeline {
    pipe: PipelineSpec,
    design: DesignPoint,
    geometry: MeshGeometry,
    usable_mem: Option<f64>,
    plans: Vec<StagePlan>,
}

/// Prepares `pipe` for simulation with `design` on meshes shaped like `geometry`.
pub fn build_pipeline(pipe: &PipelineSpec, design: &DesignPoint, geometry: &MeshGeometry) -> Result<SimPipeline> {
    pipe.check_geometry(geometry)?;
    design.validate(Workload::order(pipe))?;
    if let Some(t) = design.tile {
        check_tile(geometry, t)?;
    }
    let inputs = record_layouts(pipe);
    let plans = pipe
        .stages()
        .iter()
        .enumerate()
        .map(|(s, stage)| StagePlan {
            radius: stage.kernel.radius() as i32,
            input: inputs[s].clone(),
            output: inputs[(s + 1) % inputs.len()].clone(),
        })
        .collect();
    Ok(SimPipeline {
        pipe: pipe.clone(),
        design: *design,
        geometry: *geometry,
        usable_mem: None,
        plans,
    })
}

fn check_tile(g: &MeshGeometry, t: Tile) -> Result<()> {
    if g.ndim() == 2 && t.n.is_some() {
        return Err(Error::Design(
            "2D meshes are tiled in strips along m; tile.n must be unset".into(),
        ));
    }
    Ok(())
}

/// One stage instance in the chain with its window buffer.
struct Unit<'a> {
    stage: &'a Stage,
    index: usize,
    plan: &'a StagePlan,
    taps: Vec<(isize, Coefficient)>,
    delay: usize,
    window: WindowBuffer,
    /// Loop iterations completed: one per input chunk, then `delay` more
    /// that only drain.
    iterations: usize,
    emitted: usize,
}

impl<'a> Unit<'a> {
    fn new(stage: &'a Stage, index: usize, plan: &'a StagePlan, layout: &StreamLayout) -> Self {
        let taps: Vec<(isize, Coefficient)> = stage
            .kernel
            .taps()
            .iter()
            .map(|t: &Tap| (layout.linear_offset(t.offset), t.coeff))
            .collect();
        let ahead = taps.iter().map(|t| t.0).max().unwrap_or(0).max(0) as usize;
        let behind = (-taps.iter().map(|t| t.0).min().unwrap_or(0)).max(0) as usize;
        let v = layout.vector;
        let delay = ahead.div_ceil(v);
        let window = WindowBuffer::new(plan.input.width, ahead + behind, (delay + 1) * v + behind);
        Self {
            stage,
            index,
            plan,
            taps,
            delay,
            window,
            iterations: 0,
            emitted: 0,
        }
    }

    /// Runs one loop iteration if possible: it consumes `input` while the
    /// stream lasts and needs nothing once it is exhausted. Returns whether
    /// the iteration produces an output chunk.
    fn step(&mut self, input: Option<&[f32]>, total: usize) -> bool {
        if self.iterations < total {
            let Some(chunk) = input else {
                return false;
            };
            self.window.push(chunk);
        } else if self.iterations == total + self.delay {
            return false;
        }
        self.iterations += 1;
        self.iterations > self.delay
    }

    /// Computes output chunk `self.emitted` into `out`.
    fn emit(&mut self, layout: &StreamLayout, arity: usize, npw: usize, out: &mut [f32], kv: &mut [f32]) {
        let v = layout.vector;
        let e = self.emitted;
        self.emitted += 1;
        let input = &self.plan.input;
        let output = &self.plan.output;
        let s = self.index;
        let kernel = &self.stage.kernel;
        let combine = &self.stage.combine;
        for lane in 0..v {
            let i = e * v + lane;
            let rec = self.window.record(i);
            let o = &mut out[lane * output.width..(lane + 1) * output.width];
            let y_at = |c: usize| match input.y {
                Some(off) => rec[off + c],
                None => rec[c],
            };
            if layout.depth[i] >= self.plan.radius {
                for (c, k) in kv.iter_mut().enumerate() {
                    let mut acc: Option<f32> = None;
                    for &(off, coeff) in &self.taps {
                        let coeff = match coeff {
                            Coefficient::Const(value) => value,
                            Coefficient::Field { field, weight } => weight * rec[input.pointwise + field],
                        };
                        let u = self.window.value((i as isize + off) as usize, c);
                        let term = coeff * u;
                        acc = Some(acc.map_or(term, |a| a + term));
                    }
                    let mut value = acc.unwrap_or(0.0);
                    let mut modulation: Option<f32> = None;
                    for &(field, weight) in kernel.modulation() {
                        let term = weight * rec[input.pointwise + field];
                        modulation = Some(modulation.map_or(term, |a| a + term));
                    }
                    if let Some(mv) = modulation {
                        value *= mv;
                    }
                    if let Some(scale) = kernel.scale() {
                        value *= scale;
                    }
                    *k = value;
                }
                for c in 0..arity {
                    let mut acc: Option<f32> = combine.base.then(|| y_at(c));
                    for &(j, w) in &combine.terms {
                        let k = if j == s { kv[c] } else { rec[input.kernel_value(j) + c] };
                        let term = w * k;
                        acc = Some(acc.map_or(term, |a| a + term));
                    }
                    o[c] = acc.unwrap_or(0.0);
                }
            } else {
                o[..arity].copy_from_slice(&rec[..arity]);
                kv.fill(0.0);
            }
            if let Some(off) = output.y {
                for c in 0..arity {
                    o[off + c] = y_at(c);
                }
            }
            o[output.pointwise..output.pointwise + npw].copy_from_slice(&rec[input.pointwise..input.pointwise + npw]);
            for &(j, off) in &output.kernel_values {
                if j == s {
                    o[off..off + arity].copy_from_slice(kv);
                } else {
                    let src = input.kernel_value(j);
                    o[off..off + arity].copy_from_slice(&rec[src..src + arity]);
                }
            }
        }
    }
}

/// Traffic and timing of one streamed pass.
struct StreamStats {
    cycles: u64,
    cells_read: u64,
    cells_written: u64,
}

impl SimPipeline {
    /// Caps on-chip memory for window buffers at `usable_bytes` (after any
    /// utilization derating); runs whose buffers exceed it fail.
    pub fn with_onchip_memory(mut self, usable_bytes: f64) -> Self {
        self.usable_mem = Some(usable_bytes);
        self
    }

    pub fn design(&self) -> &DesignPoint {
        &self.design
    }

    pub fn pipeline(&self) -> &PipelineSpec {
        &self.pipe
    }

    pub fn geometry(&self) -> &MeshGeometry {
        &self.geometry
    }

    /// Stage instances in series: `p` times the stages per group.
    pub fn stage_instances(&self) -> usize {
        self.design.unroll as usize * self.pipe.stages().len()
    }

    /// Window buffers of every stage instance for an untiled run.
    pub fn window_buffers(&self) -> Vec<WindowBuffer> {
        let layout = StreamLayout::stacked(&self.geometry, 1, self.design.vector as usize);
        self.units(&layout).into_iter().map(|u| u.window).collect()
    }

    /// Arithmetic pipeline depth of the chain: per stage instance, one
    /// multiply followed by an adder tree over the taps and one add per
    /// modulation, scale and combine term.
    pub fn pipeline_latency_estimate(&self) -> u64 {
        let per_group: u64 = self
            .pipe
            .stages()
            .iter()
            .map(|st| {
                let taps = st.kernel.taps().len() as u64;
                let tree = 64 - (taps.max(1) - 1).leading_zeros() as u64;
                let extra = st.kernel.modulation().len() as u64
                    + st.kernel.scale().is_some() as u64
                    + st.combine.terms.len() as u64;
                FP_MUL_LATENCY + tree * FP_ADD_LATENCY + extra * FP_ADD_LATENCY
            })
            .sum();
        per_group * self.design.unroll as u64
    }

    fn units<'a>(&'a self, layout: &StreamLayout) -> Vec<Unit<'a>> {
        let mut units = Vec::with_capacity(self.stage_instances());
        for _ in 0..self.design.unroll {
            for (s, (stage, plan)) in self.pipe.stages().iter().zip(&self.plans).enumerate() {
                units.push(Unit::new(stage, s, plan, layout));
            }
        }
        units
    }

    fn check_inputs(&self, inputs: &FieldSet) -> Result<()> {
        if inputs.geometry() != &self.geometry {
            return Err(Error::GeometryMismatch(format!(
                "input mesh {:?} (arity {}) differs from the configured {:?} (arity {})",
                inputs.geometry().dims(),
                inputs.geometry().arity(),
                self.geometry.dims(),
                self.geometry.arity()
            )));
        }
        if inputs.pointwise.len() != self.pipe.pointwise_fields().len() {
            return Err(Error::GeometryMismatch(format!(
                "{} expects {} pointwise fields, got {}",
                self.pipe.name(),
                self.pipe.pointwise_fields().len(),
                inputs.pointwise.len()
            )));
        }
        Ok(())
    }

    fn check_capacity(&self, extent: u64) -> Result<()> {
        let Some(available) = self.usable_mem else {
            return Ok(());
        };
        let order = Workload::order(&self.pipe);
        let k = self.geometry.point_bytes();
        let p_mem = unroll_limit_mem(available, 1.0, k, order, extent);
        if self.design.unroll as u64 > p_mem {
            return Err(Error::CapacityExceeded {
                required: self.design.unroll as u64 * order as u64 * extent * k,
                available: available as u64,
                p_mem,
                unroll: self.design.unroll,
            });
        }
        Ok(())
    }

    /// Streams `layout` once through the chain, reading the current primary
    /// fields and writing back valid cells into `next`.
    fn stream(
        &self,
        layout: &StreamLayout,
        current: &[Vec<f32>],
        pointwise: &[&[FieldData]],
        next: &mut [Vec<f32>],
    ) -> StreamStats {
        let arity = self.geometry.arity();
        let npw = self.pipe.pointwise_fields().len();
        let points = self.geometry.points();
        let v = layout.vector;
        let total = layout.chunks();
        let mut units = self.units(layout);
        let head_width = self.plans[0].input.width;
        let max_width = self.plans.iter().map(|p| p.input.width).max().unwrap_or(0);
        let mut carry = vec![0.0f32; max_width * v];
        let mut scratch = vec![0.0f32; max_width * v];
        let mut kv = vec![0.0f32; arity];
        let mut stats = StreamStats {
            cycles: 0,
            cells_read: 0,
            cells_written: 0,
        };
        let mut sunk = 0;

        while sunk < total {
            let t = stats.cycles as usize;
            let mut pending = t < total;
            if pending {
                let chunk = &mut carry[..head_width * v];
                for lane in 0..v {
                    let rec = &mut chunk[lane * head_width..(lane + 1) * head_width];
                    let cell = layout.cell[t * v + lane];
                    if cell == OUTSIDE {
                        rec.fill(0.0);
                        continue;
                    }
                    stats.cells_read += 1;
                    let (b, p) = (cell / points, cell % points);
                    rec[..arity].copy_from_slice(&current[b][p * arity..(p + 1) * arity]);
                    for (f, field) in pointwise[b].iter().enumerate() {
                        rec[arity + f] = field.values()[p];
                    }
                }
            }
            for unit in units.iter_mut() {
                let w = unit.plan.input.width;
                let input = pending.then(|| &carry[..w * v]);
                pending = unit.step(input, total);
                if pending {
                    let w = unit.plan.output.width;
                    unit.emit(layout, arity, npw, &mut scratch[..w * v], &mut kv);
                    std::mem::swap(&mut carry, &mut scratch);
                }
            }
            if pending {
                let e = sunk;
                for lane in 0..v {
                    let i = e * v + lane;
                    if !layout.writeback[i] {
                        continue;
                    }
                    let (b, p) = (layout.cell[i] / points, layout.cell[i] % points);
                    next[b][p * arity..(p + 1) * arity]
                        .copy_from_slice(&carry[lane * head_width..lane * head_width + arity]);
                    stats.cells_written += 1;
                }
                sunk += 1;
            }
            stats.cycles += 1;
        }
        stats
    }

    fn finish(&self, current: Vec<Vec<f32>>, stats: StreamStats, n_iter: u64, tiles: u64, redundant: u64) -> SimResult {
        let p = self.design.unroll as u64;
        let k = self.geometry.element_bytes() as u64;
        let arity = self.geometry.arity() as u64;
        let npw = self.pipe.pointwise_fields().len() as u64;
        SimResult {
            outputs: current
                .into_iter()
                .map(|v| FieldData::from_output(self.geometry, v))
                .collect(),
            cycles: stats.cycles,
            bytes_read: stats.cells_read * (arity + npw) * k,
            bytes_written: stats.cells_written * arity * k,
            redundant_cells: redundant,
            effective_iterations: n_iter.div_ceil(p) * p,
            passes: n_iter.div_ceil(p),
            tiles,
            pipeline_latency_estimate: self.pipeline_latency_estimate(),
        }
    }

    fn run_stacked(&self, batch: &[&FieldSet], n_iter: u64) -> Result<SimResult> {
        for f in batch {
            self.check_inputs(f)?;
        }
        self.check_capacity(self.geometry.buffered_extent() as u64)?;
        let layout = StreamLayout::stacked(&self.geometry, batch.len(), self.design.vector as usize);
        let pointwise: Vec<&[FieldData]> = batch.iter().map(|f| f.pointwise.as_slice()).collect();
        let mut current: Vec<Vec<f32>> = batch.iter().map(|f| f.primary.values().to_vec()).collect();
        let mut next = current.clone();
        let mut totals = StreamStats {
            cycles: 0,
            cells_read: 0,
            cells_written: 0,
        };
        for _ in 0..n_iter.div_ceil(self.design.unroll as u64) {
            let s = self.stream(&layout, &current, &pointwise, &mut next);
            totals.cycles += s.cycles;
            totals.cells_read += s.cells_read;
            totals.cells_written += s.cells_written;
            std::mem::swap(&mut current, &mut next);
        }
        Ok(self.finish(current, totals, n_iter, 1, 0))
    }

    /// Runs `n_iter` iterations (rounded up to whole passes) over one mesh.
    pub fn simulate(&self, inputs: &FieldSet, n_iter: u64) -> Result<SimResult> {
        self.run_stacked(&[inputs], n_iter)
    }

    /// Runs a batch of equally shaped meshes stacked along their last axis,
    /// so the chain fill is paid once per pass for the whole batch.
    pub fn simulate_batched(&self, batch: &[FieldSet], n_iter: u64) -> Result<SimResult> {
        if batch.is_empty() {
            return Err(Error::Design("batch must contain at least one mesh".into()));
        }
        if let Some((i, f)) = batch
            .iter()
            .enumerate()
            .find(|(_, f)| f.geometry() != batch[0].geometry())
        {
            return Err(Error::GeometryMismatch(format!(
                "batch member {i} has dims {:?}, member 0 has {:?}",
                f.geometry().dims(),
                batch[0].geometry().dims()
            )));
        }
        let refs: Vec<&FieldSet> = batch.iter().collect();
        self.run_stacked(&refs, n_iter)
    }

    /// Runs over overlapping spatial blocks of `tile` size. Each pass visits
    /// every block in turn and writes back only its valid interior.
    pub fn simulate_tiled(&self, inputs: &FieldSet, n_iter: u64, tile: Tile) -> Result<SimResult> {
        self.check_inputs(inputs)?;
        check_tile(&self.geometry, tile)?;
        let order = Workload::order(&self.pipe);
        self.design.with_tile(tile).validate(order)?;
        let design = self.design.with_tile(tile);
        let (px, py) = crate::model::tile_plans(&design, &self.geometry, order);
        let extent = if self.geometry.ndim() == 2 {
            px.width
        } else {
            px.width * py.width
        };
        self.check_capacity(extent as u64)?;

        let v = self.design.vector as usize;
        let layouts: Vec<StreamLayout> = (0..py.count())
            .flat_map(|ty| (0..px.count()).map(move |tx| (tx, ty)))
            .map(|(tx, ty)| StreamLayout::block(&self.geometry, v, AxisSpan::block(&px, tx), AxisSpan::block(&py, ty)))
            .collect();
        let pointwise = [inputs.pointwise.as_slice()];
        let mut current = vec![inputs.primary.values().to_vec()];
        let mut next = current.clone();
        let mut totals = StreamStats {
            cycles: 0,
            cells_read: 0,
            cells_written: 0,
        };
        let passes = n_iter.div_ceil(self.design.unroll as u64);
        for _ in 0..passes {
            for layout in &layouts {
                let s = self.stream(layout, &current, &pointwise, &mut next);
                totals.cycles += s.cycles;
                totals.cells_read += s.cells_read;
                totals.cells_written += s.cells_written;
            }
            std::mem::swap(&mut current, &mut next);
        }
        let tiles = layouts.len() as u64;
        let redundant = redundant_per_pass(&px, &py, self.geometry.l()) * passes;
        Ok(self.finish(current, totals, n_iter, tiles, redundant))
    }
}

fn redundant_per_pass(px: &AxisPlan, py: &AxisPlan, l: usize) -> u64 {
    let tiles = (px.count() * py.count()) as u64;
    let computed = (px.width * py.width * l) as u64;
    let valid = (px.nominal_valid() * py.nominal_valid() * l) as u64;
    tiles * (computed - valid)
}
