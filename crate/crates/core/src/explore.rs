//! Design-space sweep: enumerate design points, keep the feasible ones and
//! rank them by predicted throughput.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{DesignPoint, ResourceProfile, Tile};
use crate::error::{Error, Result};
use crate::mesh::MeshGeometry;
use crate::model::{max_vector_factor, optimal_tile_width_aligned, predict, unroll_limit_dsp, ModelReport};
use crate::pipeline::Workload;

pub const DEFAULT_FREQS_HZ: [f64; 2] = [300e6, 250e6];
pub const DEFAULT_BATCHES: [u32; 5] = [1, 10, 50, 100, 1000];

/// Which spatial-blocking options to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TileChoice {
    /// Untiled designs and every tile candidate.
    #[default]
    Any,
    Untiled,
    /// Tile candidates only.
    Tiled,
    Fixed(Tile),
}

/// Pins and sweep bounds for [`enumerate_designs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constraints {
    pub vector: Option<u32>,
    pub unroll: Option<u32>,
    /// Upper bound on swept unroll factors.
    pub max_unroll: Option<u32>,
    pub tile: TileChoice,
    pub batch: Option<u32>,
    pub batches: Vec<u32>,
    pub freqs_hz: Vec<f64>,
    pub iterations: u64,
}

impl Default for Constraints {
    fn default() -> Self {
        Self {
            vector: None,
            unroll: None,
            max_unroll: None,
            tile: TileChoice::Any,
            batch: None,
            batches: DEFAULT_BATCHES.to_vec(),
            freqs_hz: DEFAULT_FREQS_HZ.to_vec(),
            iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDesign {
    pub design: DesignPoint,
    pub report: ModelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    /// Feasible designs, best first.
    pub designs: Vec<RankedDesign>,
    /// Bound that excluded every candidate when `designs` is empty.
    pub binding: Option<String>,
}

fn tile_key(t: &Option<Tile>) -> (u32, u32) {
    t.map_or((0, 0), |t| (t.m, t.n.unwrap_or(0)))
}

/// Ranking: throughput descending, runtime ascending, then smaller `p`,
/// `V`, tile and batch, then higher frequency.
pub fn rank(a: &RankedDesign, b: &RankedDesign) -> Ordering {
    b.report
        .throughput_cells_per_cycle
        .total_cmp(&a.report.throughput_cells_per_cycle)
        .then(a.report.runtime_s.total_cmp(&b.report.runtime_s))
        .then(a.design.unroll.cmp(&b.design.unroll))
        .then(a.design.vector.cmp(&b.design.vector))
        .then(tile_key(&a.design.tile).cmp(&tile_key(&b.design.tile)))
        .then(a.design.batch.cmp(&b.design.batch))
        .then(b.design.freq_hz.total_cmp(&a.design.freq_hz))
}

/// Block widths tried for unroll `p`: multiples of `V` (powers of two times
/// `V`, plus the memory-optimal width) between the overlap `pD` and the
/// mesh extent.
fn tile_widths<W: Workload + ?Sized>(r: &ResourceProfile, work: &W, g: &MeshGeometry, v: u32, p: u32) -> Vec<u32> {
    let d = work.order();
    let k = work.arity() as u64 * g.element_bytes() as u64;
    let overlap = p as u64 * d as u64;
    let best = if g.ndim() == 3 {
        optimal_tile_width_aligned(r.usable_mem_bytes(), k, p, d, v)
    } else {
        let cap = (r.usable_mem_bytes() / (k * overlap.max(1)) as f64) as u64;
        cap / v as u64 * v as u64
    };
    let upper = if g.ndim() == 3 { 2 * best } else { best };
    let upper = upper.min(g.m() as u64 - 1);
    let mut widths: Vec<u64> = std::iter::successors(Some(v as u64), |w| w.checked_mul(2))
        .take_while(|&w| w <= upper)
        .collect();
    if best <= upper {
        widths.push(best);
    }
    widths.retain(|&w| w > overlap && w % v as u64 == 0);
    widths.sort_unstable();
    widths.dedup();
    widths.into_iter().map(|w| w as u32).collect()
}

fn candidates<W: Workload + ?Sized>(
    r: &ResourceProfile,
    work: &W,
    g: &MeshGeometry,
    c: &Constraints,
) -> Vec<DesignPoint> {
    let k = work.arity() as u64 * g.element_bytes() as u64;
    let batches: Vec<u32> = match c.batch {
        Some(b) => vec![b],
        None => c.batches.clone(),
    };
    let mut out = Vec::new();
    for &f in &c.freqs_hz {
        let v_max = max_vector_factor(r.channel_bw, f, k).saturating_mul(r.num_ports);
        let vectors: Vec<u32> = match c.vector {
            Some(v) => vec![v],
            None => std::iter::successors(Some(1u32), |v| v.checked_mul(2))
                .take_while(|&v| v <= v_max)
                .collect(),
        };
        for v in vectors {
            let unrolls: Vec<u32> = match c.unroll {
                Some(p) => vec![p],
                None => {
                    let p_dsp = unroll_limit_dsp(r.dsp_total, r.dsp_util_cap, v, work.dsp_cost());
                    let top = p_dsp.min(c.max_unroll.map_or(u64::MAX, u64::from));
                    (1..=top.min(u32::MAX as u64) as u32).collect()
                }
            };
            for p in unrolls {
                let base = DesignPoint::new(v, p, f);
                if matches!(c.tile, TileChoice::Any | TileChoice::Untiled) {
                    out.extend(batches.iter().map(|&b| base.with_batch(b)));
                }
                match c.tile {
                    TileChoice::Any | TileChoice::Tiled => {
                        for w in tile_widths(r, work, g, v, p) {
                            let t = if g.ndim() == 3 { Tile::square(w) } else { Tile::strip(w) };
                            out.push(base.with_tile(t));
                        }
                    }
                    TileChoice::Fixed(t) => out.push(base.with_tile(t)),
                    TileChoice::Untiled => {}
                }
            }
        }
    }
    out
}

/// Names the bound that leaves no feasible design.
fn binding_constraint<W: Workload + ?Sized>(
    r: &ResourceProfile,
    work: &W,
    g: &MeshGeometry,
    c: &Constraints,
) -> String {
    let k = work.arity() as u64 * g.element_bytes() as u64;
    let f = c.freqs_hz.iter().copied().fold(f64::NAN, f64::min);
    if c.freqs_hz.is_empty() {
        return "no frequency to sweep".into();
    }
    let v_max = max_vector_factor(r.channel_bw, f, k).saturating_mul(r.num_ports);
    if v_max < 1 {
        return "V_max<1".into();
    }
    let v = c.vector.unwrap_or(1);
    if v > v_max {
        return format!("V>{v_max}");
    }
    if unroll_limit_dsp(r.dsp_total, r.dsp_util_cap, v, work.dsp_cost()) < 1 {
        return "p_dsp<1".into();
    }
    if c.unroll
        .is_some_and(|p| p as u64 > unroll_limit_dsp(r.dsp_total, r.dsp_util_cap, v, work.dsp_cost()))
    {
        return "p>p_dsp".into();
    }
    "p_mem<1".into()
}

/// Sweeps the design space of `work` on `g` and returns the feasible points,
/// best first. Evaluation is parallel; the result order is not.
pub fn enumerate_designs<W: Workload + Sync + ?Sized>(
    r: &ResourceProfile,
    work: &W,
    g: &MeshGeometry,
    c: &Constraints,
) -> Exploration {
    let mut designs: Vec<RankedDesign> = candidates(r, work, g, c)
        .into_par_iter()
        .filter_map(|design| {
            let report = predict(&design, work, g, r, c.iterations);
            report.feasible.then_some(RankedDesign { design, report })
        })
        .collect();
    designs.sort_by(rank);
    let binding = designs.is_empty().then(|| binding_constraint(r, work, g, c));
    Exploration { designs, binding }
}

/// The top-ranked feasible design.
pub fn best_design<W: Workload + Sync + ?Sized>(
    r: &ResourceProfile,
    work: &W,
    g: &MeshGeometry,
    c: &Constraints,
) -> Result<RankedDesign> {
    let e = enumerate_designs(r, work, g, c);
    match e.designs.into_iter().next() {
        Some(best) => Ok(best),
        None => Err(Error::NoFeasibleDesign {
            binding: e.binding.unwrap_or_default(),
        }),
    }
}
