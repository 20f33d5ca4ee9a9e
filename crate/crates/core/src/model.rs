//! Analytic resource and performance model of a streaming stencil
//! accelerator.
//!
//! Notation follows the design parameters: `V` vector factor, `p` unroll
//! depth, `D` stencil order, `k` bytes per mesh point, `G` DSP blocks per
//! point update, `M`/`N` block widths and `B` batch size. Mesh rows are
//! padded to a multiple of `V`, and iteration counts are rounded up to a
//! whole number of `p`-deep passes.

use serde::{Deserialize, Serialize};

use crate::design::{DesignPoint, ResourceProfile};
use crate::error::{Error, Result};
use crate::feasibility::{validate_design, Limits};
use crate::mesh::MeshGeometry;
use crate::pipeline::Workload;
use crate::tiling::AxisPlan;

/// `floor(num / den)` tolerant of products like `0.9 * 8490` landing just
/// below an exact integer.
pub(crate) fn floor_ratio(num: f64, den: f64) -> u64 {
    let q = num / den;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        q.floor().max(0.0) as u64
    }
}

fn chunks(cells: u64, vector: u32) -> u64 {
    cells.div_ceil(vector as u64)
}

/// Fraction `len / (len + pD/2)`; an infinite `len` gives 1.
fn fill_efficiency(len: f64, p: u32, d: u32) -> f64 {
    if len.is_infinite() {
        1.0
    } else {
        len / (len + (p * d) as f64 / 2.0)
    }
}

/// Largest `V` with `2 * V * f * elem_bytes <= bw`, before power-of-two rounding.
pub fn max_vector_factor_raw(bw_channel: f64, freq_hz: f64, elem_bytes: u64) -> u32 {
    floor_ratio(bw_channel, 2.0 * freq_hz * elem_bytes as f64).min(u32::MAX as u64) as u32
}

/// Bandwidth-limited vector factor rounded down to a power of two; 0 when
/// even `V = 1` cannot be fed.
pub fn max_vector_factor(bw_channel: f64, freq_hz: f64, elem_bytes: u64) -> u32 {
    let raw = max_vector_factor_raw(bw_channel, freq_hz, elem_bytes);
    if raw == 0 {
        0
    } else {
        1 << (31 - raw.leading_zeros())
    }
}

/// Iterations actually executed: `n_iter` rounded up to a multiple of `p`.
pub fn effective_iterations(n_iter: u64, p: u32) -> u64 {
    n_iter.div_ceil(p as u64) * p as u64
}

fn passes(n_iter: u64, p: u32) -> u64 {
    n_iter.div_ceil(p as u64)
}

/// Total cycles for `n_iter` iterations of an `m x n` mesh.
pub fn cycles_2d(m: u64, n: u64, v: u32, p: u32, d: u32, n_iter: u64) -> u64 {
    passes(n_iter, p) * chunks(m, v) * (n + (p * d / 2) as u64)
}

/// Total cycles for `n_iter` iterations of an `m x n x l` mesh.
pub fn cycles_3d(m: u64, n: u64, l: u64, v: u32, p: u32, d: u32, n_iter: u64) -> u64 {
    passes(n_iter, p) * chunks(m, v) * n * (l + (p * d / 2) as u64)
}

/// Cycles per mesh point in one pass, assuming `m` divisible by `V`.
pub fn cycles_per_cell_2d(n: u64, v: u32, p: u32, d: u32) -> f64 {
    1.0 / v as f64 + (p * d) as f64 / (2.0 * n as f64 * v as f64)
}

/// Unroll depth allowed by the DSP budget: `floor(util * dsp / (V * G))`.
pub fn unroll_limit_dsp(dsp_total: u32, util: f64, v: u32, g: u32) -> u64 {
    floor_ratio(util * dsp_total as f64, v as f64 * g as f64)
}

/// Unroll depth allowed by on-chip memory: `floor(util * mem / (k * D * extent))`,
/// where `extent` is `m` for 2D and `m * n` for 3D. A zero-order stencil
/// needs no window buffer and is unbounded.
pub fn unroll_limit_mem(mem_bytes: f64, util: f64, k: u64, d: u32, extent: u64) -> u64 {
    if d == 0 {
        return u64::MAX;
    }
    floor_ratio(util * mem_bytes, k as f64 * d as f64 * extent as f64)
}

fn check_overlap(tile: u64, p: u32, d: u32) -> Result<u64> {
    let overlap = p as u64 * d as u64;
    if tile <= overlap {
        return Err(Error::TileTooSmall { tile, overlap });
    }
    Ok(tile - overlap)
}

/// Valid points of one `M x N x l` block: `(M - pD)(N - pD) l`.
pub fn tile_valid_points(m: u64, n: u64, l: u64, p: u32, d: u32) -> Result<u64> {
    Ok(check_overlap(m, p, d)? * check_overlap(n, p, d)? * l)
}

/// Valid points of one `M`-wide strip of a 2D mesh with `n` rows.
pub fn tile_valid_points_2d(m: u64, n: u64, p: u32, d: u32) -> Result<u64> {
    Ok(check_overlap(m, p, d)? * n)
}

/// Fraction of computed block points that are valid.
pub fn valid_ratio_3d(m: u64, n: u64, p: u32, d: u32) -> Result<f64> {
    let valid = check_overlap(m, p, d)? * check_overlap(n, p, d)?;
    Ok(valid as f64 / (m * n) as f64)
}

pub fn valid_ratio_2d(m: u64, p: u32, d: u32) -> Result<f64> {
    Ok(check_overlap(m, p, d)? as f64 / m as f64)
}

/// Average cycles per block per iteration: `ceil(M/V) * N * (l + pD/2) / p`.
pub fn tile_cycles_3d(m: u64, n: u64, l: u64, v: u32, p: u32, d: u32) -> f64 {
    (chunks(m, v) * n * (l + (p * d / 2) as u64)) as f64 / p as f64
}

/// 2D strip analogue of [`tile_cycles_3d`]: `ceil(M/V) * (n + pD/2) / p`.
pub fn tile_cycles_2d(m: u64, n: u64, v: u32, p: u32, d: u32) -> f64 {
    (chunks(m, v) * (n + (p * d / 2) as u64)) as f64 / p as f64
}

/// Valid points per cycle of a 3D block:
/// `(1 - pD/M)(1 - pD/N) * pVl / (l + pD/2)`. Pass `f64::INFINITY` for `l`
/// to get the long-mesh limit.
pub fn tile_throughput(m: f64, n: f64, l: f64, v: u32, p: u32, d: u32) -> f64 {
    let pd = (p * d) as f64;
    (1.0 - pd / m) * (1.0 - pd / n) * (p * v) as f64 * fill_efficiency(l, p, d)
}

/// Valid points per cycle of a 2D strip: `(1 - pD/M) * pVn / (n + pD/2)`.
pub fn tile_throughput_2d(m: f64, n: f64, v: u32, p: u32, d: u32) -> f64 {
    let pd = (p * d) as f64;
    (1.0 - pd / m) * (p * v) as f64 * fill_efficiency(n, p, d)
}

/// Square block width maximizing throughput for a given `p` when the block
/// fills on-chip memory: `sqrt(mem / (k p D))`.
pub fn optimal_tile_width(mem_bytes: f64, k: u64, p: u32, d: u32) -> f64 {
    (mem_bytes / (k as f64 * p as f64 * d as f64)).sqrt()
}

/// [`optimal_tile_width`] rounded down to a multiple of `V`.
pub fn optimal_tile_width_aligned(mem_bytes: f64, k: u64, p: u32, d: u32, v: u32) -> u64 {
    let raw = optimal_tile_width(mem_bytes, k, p, d);
    // sqrt of an exact square can land a hair below the integer
    let w = floor_ratio(raw, 1.0);
    w / v as u64 * v as u64
}

/// Unroll depth maximizing square-block, long-mesh throughput for block
/// width `M`: `M / 3D`, rounded to the nearest integer and at least 1.
pub fn optimal_unroll_tiled(m: u64, d: u32) -> u32 {
    ((m as f64 / (3.0 * d as f64)).round() as u32).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimensionality {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

/// Block throughput when the whole DSP budget is spent on compute (`pV`
/// replaced by `util * dsp / G`). `len` is `n` for 2D and `l` for 3D, and
/// may be infinite.
#[allow(clippy::too_many_arguments)]
pub fn tiled_throughput_bound(
    dim: Dimensionality,
    p: u32,
    d: u32,
    m: f64,
    dsp_total: u32,
    util: f64,
    g: u32,
    len: f64,
) -> f64 {
    let edge = 1.0 - (p * d) as f64 / m;
    let compute = util * dsp_total as f64 / g as f64;
    let overlap = match dim {
        Dimensionality::TwoD => edge,
        Dimensionality::ThreeD => edge * edge,
    };
    overlap * compute * fill_efficiency(len, p, d)
}

/// Cycles attributed to one mesh of a batch of `B` stacked 2D meshes, per
/// pass: `ceil(m/V) * (n + pD / 2B)`.
pub fn cycles_batched_2d(m: u64, n: u64, v: u32, p: u32, d: u32, b: u32) -> f64 {
    chunks(m, v) as f64 * (n as f64 + (p * d) as f64 / (2.0 * b as f64))
}

/// Cycles of one pass over a batch of `B` stacked 2D meshes:
/// `ceil(m/V) * (B n + pD/2)`.
pub fn cycles_batched_2d_total(m: u64, n: u64, v: u32, p: u32, d: u32, b: u32) -> u64 {
    chunks(m, v) * (b as u64 * n + (p * d / 2) as u64)
}

/// 3D analogue of [`cycles_batched_2d`], stacking along `l`.
pub fn cycles_batched_3d(m: u64, n: u64, l: u64, v: u32, p: u32, d: u32, b: u32) -> f64 {
    (chunks(m, v) * n) as f64 * (l as f64 + (p * d) as f64 / (2.0 * b as f64))
}

pub fn cycles_batched_3d_total(m: u64, n: u64, l: u64, v: u32, p: u32, d: u32, b: u32) -> u64 {
    chunks(m, v) * n * (b as u64 * l + (p * d / 2) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub feasible: bool,
    pub violations: Vec<String>,
    pub iterations: u64,
    pub effective_iterations: u64,
    pub passes: u64,
    pub cycles: u64,
    pub runtime_s: f64,
    pub throughput_cells_per_cycle: f64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub bandwidth_bytes_per_s: f64,
    pub valid_ratio: f64,
    pub tiles: u64,
    pub redundant_cells: u64,
    pub limits: Limits,
}

/// Block layout of a design over a mesh: one [`AxisPlan`] per tiled-capable
/// axis (`m`, and `n` for 3D meshes).
pub(crate) fn tile_plans(d: &DesignPoint, g: &MeshGeometry, order: u32) -> (AxisPlan, AxisPlan) {
    let overlap = (d.unroll * order) as usize;
    match d.tile {
        Some(t) if g.ndim() == 3 => (
            AxisPlan::new(g.m(), Some(t.m as usize), overlap),
            AxisPlan::new(g.n(), t.n.map(|n| n as usize), overlap),
        ),
        Some(t) => (
            AxisPlan::new(g.m(), Some(t.m as usize), overlap),
            AxisPlan::untiled(g.n()),
        ),
        None => (AxisPlan::untiled(g.m()), AxisPlan::untiled(g.n())),
    }
}

/// Evaluates the model for `design` running `n_iter` iterations of `work`
/// on `geometry` (and `design.batch` meshes of that geometry).
///
/// Infeasible designs still get a report, with `feasible == false` and the
/// violated bounds listed.
pub fn predict<W: Workload + ?Sized>(
    design: &DesignPoint,
    work: &W,
    geometry: &MeshGeometry,
    profile: &ResourceProfile,
    n_iter: u64,
) -> ModelReport {
    let feas = validate_design(design, profile, work, geometry);
    let d = work.order();
    let p = design.unroll.max(1);
    let v = design.vector.max(1);
    let b = design.batch.max(1) as u64;
    let k = geometry.element_bytes() as u64;
    let arity = work.arity() as u64;
    let pointwise = work.pointwise_count() as u64;
    let [m, n, l] = geometry.extent3().map(|e| e as u64);
    let fill = (p * d / 2) as u64;

    let effective = effective_iterations(n_iter, p);
    let npasses = passes(n_iter, p);
    let tiled = design.tile.is_some() && feas.tile_ok;

    let (cycles_per_pass, read_cells, written_cells, tiles, computed, nominal) = if tiled {
        let (px, py) = tile_plans(design, geometry, d);
        let chunks_x = chunks(px.width as u64, v);
        let per_tile = if geometry.ndim() == 2 {
            chunks_x * (n + fill)
        } else {
            chunks_x * py.width as u64 * (l + fill)
        };
        let tiles = (px.count() * py.count()) as u64;
        let in_x: u64 = (0..px.count()).map(|t| px.in_mesh(t) as u64).sum();
        let in_y: u64 = (0..py.count()).map(|t| py.in_mesh(t) as u64).sum();
        let computed = tiles * (px.width * py.width) as u64 * l;
        let nominal = tiles * (px.nominal_valid() * py.nominal_valid()) as u64 * l;
        (tiles * per_tile, in_x * in_y * l, m * n * l, tiles, computed, nominal)
    } else {
        let cycles = if geometry.ndim() == 2 {
            cycles_batched_2d_total(m, n, v, p, d, b as u32)
        } else {
            cycles_batched_3d_total(m, n, l, v, p, d, b as u32)
        };
        let cells = b * m * n * l;
        (cycles, cells, cells, 1, cells, cells)
    };

    let cycles = npasses * cycles_per_pass;
    let runtime_s = cycles as f64 / design.freq_hz;
    let bytes_read = npasses * read_cells * (arity + pointwise) * k;
    let bytes_written = npasses * written_cells * arity * k;
    let updates = b * m * n * l * effective;
    let (throughput, bandwidth) = if cycles == 0 {
        (0.0, 0.0)
    } else {
        (
            updates as f64 / cycles as f64,
            (bytes_read + bytes_written) as f64 / runtime_s,
        )
    };

    ModelReport {
        feasible: feas.is_pass(),
        violations: feas.violations.iter().map(|v| v.to_string()).collect(),
        iterations: n_iter,
        effective_iterations: effective,
        passes: npasses,
        cycles,
        runtime_s,
        throughput_cells_per_cycle: throughput,
        bytes_read,
        bytes_written,
        bandwidth_bytes_per_s: bandwidth,
        valid_ratio: nominal as f64 / computed as f64,
        tiles,
        redundant_cells: (computed - nominal) * npasses,
        limits: feas.limits,
    }
}
