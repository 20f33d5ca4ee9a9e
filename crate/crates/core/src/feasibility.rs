//! Checking a design point against a device's resource budget.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{DesignPoint, ResourceProfile};
use crate::mesh::MeshGeometry;
use crate::model::{
    max_vector_factor, max_vector_factor_raw, optimal_tile_width_aligned, tile_plans, unroll_limit_dsp,
    unroll_limit_mem,
};
use crate::pipeline::Workload;

/// Resource-derived bounds for a design on a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Bandwidth bound on `V` per port before power-of-two rounding.
    pub v_max_raw: u32,
    /// Usable `V`: rounded per-port bound times the number of ports.
    pub v_max: u32,
    pub p_dsp: u64,
    pub p_mem: u64,
    pub p_max: u64,
    /// Memory-optimal square block width for the design's `p` (3D only).
    pub m_opt: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    VectorBandwidth { vector: u32, limit: u32 },
    UnrollDsp { unroll: u32, limit: u64 },
    UnrollMemory { unroll: u32, limit: u64 },
    Tile(String),
    TiledBatch { batch: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VectorBandwidth { vector, limit } => {
                write!(f, "V={vector} exceeds bandwidth limit V_max={limit}")
            }
            Violation::UnrollDsp { unroll, limit } => {
                write!(f, "p={unroll} exceeds dsp limit p_dsp={limit}")
            }
            Violation::UnrollMemory { unroll, limit } => {
                write!(f, "p={unroll} exceeds memory limit p_mem={limit}")
            }
            Violation::Tile(msg) => write!(f, "tile: {msg}"),
            Violation::TiledBatch { batch } => {
                write!(f, "batch={batch} cannot be combined with spatial blocking")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    pub limits: Limits,
    /// Whether the tile (if any) is well formed enough to plan blocks with.
    pub tile_ok: bool,
}

impl FeasibilityReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Computes the resource limits for `d` and lists every bound it violates.
/// Infeasibility is reported, never raised.
pub fn validate_design<W: Workload + ?Sized>(
    d: &DesignPoint,
    r: &ResourceProfile,
    work: &W,
    g: &MeshGeometry,
) -> FeasibilityReport {
    let order = work.order();
    let point_bytes = work.arity() as u64 * g.element_bytes() as u64;
    let vector = d.vector.max(1);
    let mut violations = Vec::new();

    let v_max_raw = max_vector_factor_raw(r.channel_bw, d.freq_hz, point_bytes);
    let v_max = max_vector_factor(r.channel_bw, d.freq_hz, point_bytes).saturating_mul(r.num_ports);
    if d.vector > v_max {
        violations.push(Violation::VectorBandwidth {
            vector: d.vector,
            limit: v_max,
        });
    }

    let mut tile_ok = true;
    if let Err(e) = d.validate(order) {
        tile_ok = false;
        violations.push(Violation::Tile(e.to_string()));
    }
    if let Some(t) = d.tile {
        if g.ndim() == 2 && t.n.is_some() {
            tile_ok = false;
            violations.push(Violation::Tile("2D meshes are tiled in strips; n must be unset".into()));
        }
        if d.batch > 1 {
            violations.push(Violation::TiledBatch { batch: d.batch });
        }
    }

    let extent = if d.tile.is_some() && tile_ok {
        let (px, py) = tile_plans(d, g, order);
        if g.ndim() == 2 {
            px.width as u64
        } else {
            (px.width * py.width) as u64
        }
    } else {
        g.buffered_extent() as u64
    };

    let p_dsp = unroll_limit_dsp(r.dsp_total, r.dsp_util_cap, vector, work.dsp_cost());
    let p_mem = unroll_limit_mem(r.onchip_mem_bytes as f64, r.mem_util_cap, point_bytes, order, extent);
    if d.unroll as u64 > p_dsp {
        violations.push(Violation::UnrollDsp {
            unroll: d.unroll,
            limit: p_dsp,
        });
    }
    if d.unroll as u64 > p_mem {
        violations.push(Violation::UnrollMemory {
            unroll: d.unroll,
            limit: p_mem,
        });
    }

    let m_opt = (g.ndim() == 3 && order > 0)
        .then(|| optimal_tile_width_aligned(r.usable_mem_bytes(), point_bytes, d.unroll.max(1), order, vector));

    FeasibilityReport {
        violations,
        limits: Limits {
            v_max_raw,
            v_max,
            p_dsp,
            p_mem,
            p_max: p_dsp.min(p_mem),
            m_opt,
        },
        tile_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::{jacobi_3d, poisson_2d};
    use crate::design::Tile;

    #[test]
    fn presets_pass_on_u280() {
        let r = ResourceProfile::u280();
        let g = MeshGeometry::new_2d(200, 100).unwrap();
        let rep = validate_design(&DesignPoint::new(8, 68, 250e6), &r, &poisson_2d(), &g);
        assert!(rep.is_pass(), "{:?}", rep.violations);
        assert_eq!(rep.limits.p_dsp, 68);
        assert_eq!(rep.limits.v_max_raw, 9);
        assert_eq!(rep.limits.v_max, 16);
    }

    #[test]
    fn every_violated_bound_is_listed() {
        let r = ResourceProfile::u280();
        let g = MeshGeometry::new_2d(200, 100).unwrap();
        let rep = validate_design(&DesignPoint::new(32, 69, 300e6), &r, &poisson_2d(), &g);
        let text: Vec<String> = rep.violations.iter().map(|v| v.to_string()).collect();
        assert!(
            text.contains(&"V=32 exceeds bandwidth limit V_max=16".to_string()),
            "{text:?}"
        );
        assert!(text.iter().any(|t| t.starts_with("p=69 exceeds dsp limit")), "{text:?}");
    }

    #[test]
    fn large_planes_exceed_memory_until_tiled() {
        let r = ResourceProfile::u280();
        let w = jacobi_3d([1.0 / 7.0; 7]).unwrap();
        let g = MeshGeometry::new_3d(2048, 2048, 64).unwrap();
        let untiled = validate_design(&DesignPoint::new(8, 1, 300e6), &r, &w, &g);
        assert_eq!(untiled.limits.p_mem, 0);
        assert!(matches!(
            untiled.violations[..],
            [Violation::UnrollMemory { unroll: 1, limit: 0 }]
        ));
        let tiled = validate_design(&DesignPoint::new(8, 1, 300e6).with_tile(Tile::square(512)), &r, &w, &g);
        assert!(tiled.is_pass(), "{:?}", tiled.violations);
    }

    #[test]
    fn bad_tiles_are_violations() {
        let r = ResourceProfile::u280();
        let g = MeshGeometry::new_2d(200, 100).unwrap();
        let strip_with_n = DesignPoint::new(8, 2, 300e6).with_tile(Tile::square(64));
        assert!(!validate_design(&strip_with_n, &r, &poisson_2d(), &g).tile_ok);
        let tiled_batch = DesignPoint::new(8, 2, 300e6).with_tile(Tile::strip(64)).with_batch(4);
        let rep = validate_design(&tiled_batch, &r, &poisson_2d(), &g);
        assert!(rep.violations.contains(&Violation::TiledBatch { batch: 4 }));
        let too_small = DesignPoint::new(8, 4, 300e6).with_tile(Tile::strip(8));
        assert!(!validate_design(&too_small, &r, &poisson_2d(), &g).tile_ok);
    }
}
