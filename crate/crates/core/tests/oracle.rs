mod common;

use stencilflow::apps::{jacobi_3d, poisson_2d, rtm_forward, rtm_geometry, RtmParams};
use stencilflow::{
    build_pipeline, run_reference, run_reference_batch, DesignPoint, FieldSet, MeshGeometry, PipelineSpec, Tile,
};

fn assert_untiled(pipe: &PipelineSpec, g: MeshGeometry, design: DesignPoint, n_iter: u64, seed: u64) {
    let inputs = FieldSet::random(g, pipe.pointwise_fields().len(), seed);
    let sim = build_pipeline(pipe, &design, &g).unwrap();
    let got = sim.simulate(&inputs, n_iter).unwrap();
    let want = run_reference(pipe, &inputs, got.effective_iterations).unwrap();
    assert_eq!(
        got.output().first_mismatch(&want),
        None,
        "{} {:?} V={} p={}",
        pipe.name(),
        g.dims(),
        design.vector,
        design.unroll
    );
}

#[test]
fn poisson_untiled_matches_reference() {
    let g = MeshGeometry::new_2d(37, 23).unwrap();
    for (v, p) in [(1, 1), (4, 3), (8, 2)] {
        assert_untiled(&poisson_2d(), g, DesignPoint::new(v, p, 300e6), 6, 11);
    }
}

#[test]
fn jacobi_untiled_matches_reference() {
    let pipe = jacobi_3d(common::random_jacobi_coeffs(5)).unwrap();
    let g = MeshGeometry::new_3d(13, 9, 11).unwrap();
    for (v, p) in [(1, 2), (4, 2), (8, 3)] {
        assert_untiled(&pipe, g, DesignPoint::new(v, p, 300e6), 3, 17);
    }
}

#[test]
fn rtm_untiled_matches_reference() {
    let pipe = rtm_forward(&RtmParams::default()).unwrap();
    let g = rtm_geometry(12, 11, 10).unwrap();
    assert_untiled(&pipe, g, DesignPoint::new(1, 2, 261e6), 2, 23);
}

#[test]
fn irregular_star_matches_reference() {
    let pipe = common::random_star(2, 3, 9);
    let g = MeshGeometry::new_2d(19, 14).unwrap();
    assert_untiled(&pipe, g, DesignPoint::new(2, 2, 300e6), 4, 3);
}

#[test]
fn tiled_matches_reference() {
    let poisson = poisson_2d();
    let g = MeshGeometry::new_2d(50, 20).unwrap();
    let inputs = FieldSet::random(g, 0, 1);
    let want = run_reference(&poisson, &inputs, 4).unwrap();
    for m in [16, 24, 40, 64] {
        let sim = build_pipeline(&poisson, &DesignPoint::new(8, 2, 300e6), &g).unwrap();
        let got = sim.simulate_tiled(&inputs, 4, Tile::strip(m)).unwrap();
        assert_eq!(got.output().first_mismatch(&want), None, "strip {m}");
    }

    let jacobi = jacobi_3d(common::random_jacobi_coeffs(2)).unwrap();
    let g = MeshGeometry::new_3d(30, 26, 9).unwrap();
    let inputs = FieldSet::random(g, 0, 2);
    let want = run_reference(&jacobi, &inputs, 4).unwrap();
    for (m, n) in [(8, 8), (16, 12), (24, 24)] {
        let sim = build_pipeline(&jacobi, &DesignPoint::new(4, 2, 300e6), &g).unwrap();
        let got = sim.simulate_tiled(&inputs, 4, Tile { m, n: Some(n) }).unwrap();
        assert_eq!(got.output().first_mismatch(&want), None, "block {m}x{n}");
    }
}

#[test]
fn batched_matches_reference() {
    let g = MeshGeometry::new_2d(21, 9).unwrap();
    let batch: Vec<FieldSet> = (0..5).map(|s| FieldSet::random(g, 0, 100 + s)).collect();
    let sim = build_pipeline(&poisson_2d(), &DesignPoint::new(4, 3, 300e6), &g).unwrap();
    let got = sim.simulate_batched(&batch, 6).unwrap();
    let want = run_reference_batch(&poisson_2d(), &batch, 6).unwrap();
    for (b, (o, w)) in got.outputs.iter().zip(&want).enumerate() {
        assert_eq!(o.first_mismatch(w), None, "mesh {b}");
    }
}
