//! Ready-made pipelines: a 2D Poisson solver, a 3D Jacobi iteration and the
//! forward pass of reverse time migration (RTM).

use crate::design::DesignPoint;
use crate::error::Result;
use crate::kernel::{StencilKernel, Tap};
use crate::mesh::MeshGeometry;
use crate::pipeline::{Combine, PipelineSpec, Stage};

/// DSP blocks per mesh-point update of [`poisson_2d`].
pub const POISSON_DSP: u32 = 14;
/// DSP blocks per mesh-point update of [`jacobi_3d`].
pub const JACOBI_DSP: u32 = 33;
/// DSP blocks per mesh-point update of the fused [`rtm_forward`] pipeline.
pub const RTM_DSP: u32 = 2444;
/// Arity of the RTM wavefield.
pub const RTM_ARITY: usize = 6;
/// Largest RTM plane (`m * n`) that fits the device alongside the fused pipeline.
pub const RTM_MAX_PLANE: usize = 64 * 64;

/// `U' = (U[x-1] + U[x+1] + U[y-1] + U[y+1]) / 8 + U / 2`.
pub fn poisson_2d() -> PipelineSpec {
    let taps = vec![
        Tap::new([-1, 0, 0], 0.125),
        Tap::new([1, 0, 0], 0.125),
        Tap::new([0, -1, 0], 0.125),
        Tap::new([0, 1, 0], 0.125),
        Tap::new([0, 0, 0], 0.5),
    ];
    let kernel = StencilKernel::new("poisson-5pt-2d", 2, taps, POISSON_DSP).expect("valid poisson kernel");
    PipelineSpec::single(kernel)
}

/// 7-point Jacobi update with coefficients `k` applied, in order, to the
/// `+x, -x, -y, centre, +y, +z, -z` neighbours.
pub fn jacobi_3d(k: [f32; 7]) -> Result<PipelineSpec> {
    let offsets = [
        [1, 0, 0],
        [-1, 0, 0],
        [0, -1, 0],
        [0, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ];
    let taps = offsets.iter().zip(k).map(|(&o, c)| Tap::new(o, c)).collect();
    let kernel = StencilKernel::new("jacobi-7pt-3d", 3, taps, JACOBI_DSP)?;
    Ok(PipelineSpec::single(kernel))
}

/// Coefficients of the RTM stencil operator.
///
/// The operator applies a 25-point axis-aligned star to each wavefield
/// component, multiplies by `rho_weight * rho + mu_weight * mu` and by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RtmParams {
    /// Centre, then for each of x, y, z the taps at `-1, +1, -2, +2, .., -4, +4`.
    pub star: [f32; 25],
    pub rho_weight: f32,
    pub mu_weight: f32,
    pub dt: f32,
}

impl RtmParams {
    /// Star with the same `side[d - 1]` coefficient at `±d` on every axis.
    pub fn symmetric(centre: f32, side: [f32; 4], rho_weight: f32, mu_weight: f32, dt: f32) -> Self {
        let mut star = [0.0; 25];
        star[0] = centre;
        for axis in 0..3 {
            for (d, &c) in side.iter().enumerate() {
                star[1 + axis * 8 + 2 * d] = c;
                star[2 + axis * 8 + 2 * d] = c;
            }
        }
        Self {
            star,
            rho_weight,
            mu_weight,
            dt,
        }
    }
}

impl Default for RtmParams {
    /// Eighth-order central second-difference Laplacian.
    fn default() -> Self {
        let side = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
        Self::symmetric(-3.0 * 205.0 / 72.0, side, 0.5, 0.5, 1.0e-3)
    }
}

fn rtm_operator(name: &str, params: &RtmParams) -> Result<StencilKernel> {
    let mut taps = vec![Tap::new([0, 0, 0], params.star[0])];
    for axis in 0..3 {
        for d in 1..=4i32 {
            for (sign, slot) in [(-1, 2 * d - 1), (1, 2 * d)] {
                let mut offset = [0; 3];
                offset[axis] = sign * d;
                taps.push(Tap::new(offset, params.star[axis * 8 + slot as usize]));
            }
        }
    }
    StencilKernel::new(name, 3, taps, RTM_DSP / 4)?
        .with_arity(RTM_ARITY)?
        .with_pointwise_fields(vec!["rho".into(), "mu".into()])?
        .with_modulation(vec![(0, params.rho_weight), (1, params.mu_weight)])?
        .with_scale(params.dt)
}

/// Fourth-order Runge-Kutta step of the RTM forward pass as four fused
/// stages. Stage `s` evaluates `K_s` on the previous stage's output; the
/// last stage folds all four into `Y + K1/6 + K2/3 + K3/3 + K4/6`.
pub fn rtm_forward(params: &RtmParams) -> Result<PipelineSpec> {
    let combines = [
        Combine::base_plus(vec![(0, 0.5)]),
        Combine::base_plus(vec![(1, 0.5)]),
        Combine::base_plus(vec![(2, 1.0)]),
        Combine::base_plus(vec![(0, 1.0 / 6.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 6.0)]),
    ];
    let stages = combines
        .into_iter()
        .enumerate()
        .map(|(s, combine)| {
            Ok(Stage {
                kernel: rtm_operator(&format!("rtm-k{}", s + 1), params)?,
                combine,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PipelineSpec::new("rtm-forward", stages)
}

/// Geometry of an RTM wavefield mesh.
pub fn rtm_geometry(m: usize, n: usize, l: usize) -> Result<MeshGeometry> {
    MeshGeometry::new_3d(m, n, l)?.with_arity(RTM_ARITY)
}

/// Advisory message when an RTM plane is larger than the device supports.
pub fn rtm_plane_warning(g: &MeshGeometry) -> Option<String> {
    let plane = g.m() * g.n();
    (g.ndim() == 3 && plane > RTM_MAX_PLANE).then(|| {
        format!(
            "RTM plane {}x{} exceeds the {} cells that fit next to the fused pipeline",
            g.m(),
            g.n(),
            RTM_MAX_PLANE
        )
    })
}

/// Design parameters used for an application on the reference device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppPreset {
    pub name: &'static str,
    pub freq_hz: f64,
    pub vector: u32,
    pub dsp_cost: u32,
    /// Unroll factor predicted by the DSP bound.
    pub unroll_model: u32,
    /// Unroll factor reached after synthesis.
    pub unroll_synthesized: u32,
}

impl AppPreset {
    /// Design point at the model-predicted unroll factor.
    pub fn design(&self) -> DesignPoint {
        DesignPoint::new(self.vector, self.unroll_model, self.freq_hz)
    }
}

pub const PRESETS: [AppPreset; 3] = [
    AppPreset {
        name: "poisson-5pt-2d",
        freq_hz: 250e6,
        vector: 8,
        dsp_cost: POISSON_DSP,
        unroll_model: 68,
        unroll_synthesized: 60,
    },
    AppPreset {
        name: "jacobi-7pt-3d",
        freq_hz: 246e6,
        vector: 8,
        dsp_cost: JACOBI_DSP,
        unroll_model: 28,
        unroll_synthesized: 29,
    },
    AppPreset {
        name: "rtm-forward",
        freq_hz: 261e6,
        vector: 1,
        dsp_cost: RTM_DSP,
        unroll_model: 3,
        unroll_synthesized: 3,
    },
];

pub fn preset(name: &str) -> Option<&'static AppPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Workload;

    #[test]
    fn poisson_shape() {
        let p = poisson_2d();
        assert_eq!(p.order(), 2);
        assert_eq!(p.dsp_cost(), 14);
        let sum: f32 = p.stages()[0]
            .kernel
            .taps()
            .iter()
            .map(|t| match t.coeff {
                crate::kernel::Coefficient::Const(c) => c,
                _ => unreachable!(),
            })
            .sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn rtm_shape() {
        let p = rtm_forward(&RtmParams::default()).unwrap();
        assert_eq!(p.stages().len(), 4);
        assert_eq!(p.order(), 32);
        assert_eq!(p.dsp_cost(), RTM_DSP);
        assert_eq!(p.arity(), 6);
        assert_eq!(p.pointwise_fields(), ["rho", "mu"]);
        assert_eq!(p.stages()[0].kernel.taps().len(), 25);
        assert_eq!(p.stages()[0].kernel.order(), 8);
    }

    #[test]
    fn symmetric_star_layout() {
        let p = RtmParams::symmetric(1.0, [2.0, 3.0, 4.0, 5.0], 0.0, 0.0, 1.0);
        assert_eq!(&p.star[..9], &[1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0]);
        assert_eq!(p.star[24], 5.0);
    }

    #[test]
    fn plane_warning() {
        assert!(rtm_plane_warning(&rtm_geometry(64, 64, 100).unwrap()).is_none());
        assert!(rtm_plane_warning(&rtm_geometry(65, 64, 100).unwrap()).is_some());
    }
}
