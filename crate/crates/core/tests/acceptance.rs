//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! with its wall time against the allowed budget; run with `--nocapture`
//! to see them.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stencilflow::apps::{self, jacobi_3d, poisson_2d, rtm_forward, rtm_geometry, RtmParams};
use stencilflow::model::{
    cycles_2d, cycles_3d, cycles_batched_2d_total, cycles_batched_3d_total, optimal_tile_width, optimal_unroll_tiled,
    tile_throughput, tile_throughput_2d, valid_ratio_2d, valid_ratio_3d,
};
use stencilflow::{
    build_pipeline, predict, run_reference, run_reference_batch, validate_design, DesignPoint, FieldData, FieldSet,
    MeshGeometry, PipelineSpec, ResourceProfile, Tile, Workload,
};

fn verdict(id: u32, what: &str, failures: &[String], start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed <= budget;
    println!(
        "{} criterion {id}: {what} ({:.3} s, budget {} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    for f in failures {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:#?}");
    assert!(elapsed <= budget, "criterion {id} took {elapsed:?}, budget {budget:?}");
}

fn check<T: PartialEq + std::fmt::Debug>(failures: &mut Vec<String>, what: &str, got: T, want: T) {
    if got != want {
        failures.push(format!("{what}: got {got:?}, want {want:?}"));
    }
}

#[test]
fn criterion_1_unroll_limits_per_application() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let profile = ResourceProfile::u280();
    let cases: [(&str, &dyn Workload, MeshGeometry, u64); 3] = [
        (
            "poisson-5pt-2d",
            &poisson_2d(),
            MeshGeometry::new_2d(200, 100).unwrap(),
            68,
        ),
        (
            "jacobi-7pt-3d",
            &jacobi_3d([1.0 / 7.0; 7]).unwrap(),
            MeshGeometry::new_3d(100, 100, 100).unwrap(),
            28,
        ),
        (
            "rtm-forward",
            &rtm_forward(&RtmParams::default()).unwrap(),
            rtm_geometry(32, 32, 32).unwrap(),
            3,
        ),
    ];
    for (name, work, g, want) in cases {
        let preset = apps::preset(name).unwrap();
        check(
            &mut failures,
            &format!("{name} G_dsp"),
            work.dsp_cost(),
            preset.dsp_cost,
        );
        let report = validate_design(&preset.design(), &profile, work, &g);
        check(&mut failures, &format!("{name} p_dsp"), report.limits.p_dsp, want);
        check(
            &mut failures,
            &format!("{name} preset feasible"),
            report.violations,
            vec![],
        );
    }
    verdict(1, "p_dsp = 68 / 28 / 3", &failures, start, Duration::from_secs(1));
}

#[test]
fn criterion_2_tiled_throughput() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let long = f64::INFINITY;
    check(
        &mut failures,
        "poisson T",
        tile_throughput_2d(8192.0, long, 8, 60, 2).floor(),
        472.0,
    );
    check(
        &mut failures,
        "poisson valid %",
        (valid_ratio_2d(8192, 60, 2).unwrap() * 1000.0).round() / 10.0,
        98.5,
    );
    check(
        &mut failures,
        "jacobi T",
        tile_throughput(768.0, 768.0, long, 64, 3, 2).floor(),
        189.0,
    );
    check(
        &mut failures,
        "jacobi valid %",
        (valid_ratio_3d(768, 768, 3, 2).unwrap() * 1000.0).round() / 10.0,
        98.4,
    );
    // through the full model on long meshes
    let profile = ResourceProfile::u280_hbm(32);
    let g = MeshGeometry::new_2d(8192, 1 << 24).unwrap();
    let d = DesignPoint::new(8, 60, 250e6).with_tile(Tile::strip(8192));
    let r = predict(&d, &poisson_2d(), &g, &profile, 60);
    check(
        &mut failures,
        "poisson untiled-width strip",
        r.throughput_cells_per_cycle.floor(),
        479.0,
    );
    verdict(
        2,
        "T = 472 / 189, valid 98.5% / 98.4%",
        &failures,
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_3_rtm_block_unroll() {
    let start = Instant::now();
    let mut failures = Vec::new();
    check(&mut failures, "p(M=96, D=8)", optimal_unroll_tiled(96, 8), 4);
    verdict(
        3,
        "optimal unroll for M=96, D=8 is 4",
        &failures,
        start,
        Duration::from_secs(1),
    );
}

fn star_geometry(rng: &mut ChaCha8Rng, ndim: usize, d: usize) -> MeshGeometry {
    if ndim == 2 {
        MeshGeometry::new_2d(rng.gen_range(d..=128), rng.gen_range(d..=128)).unwrap()
    } else {
        MeshGeometry::new_3d(rng.gen_range(d..=128), rng.gen_range(d..=48), rng.gen_range(1..=24)).unwrap()
    }
}

#[test]
fn criterion_4_simulated_cycles_equal_model() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let configs = 240;
    for case in 0..configs {
        let ndim = rng.gen_range(2..=3);
        let d: u32 = [2, 4, 8][rng.gen_range(0..3)];
        let v: u32 = [1, 2, 4, 8][rng.gen_range(0..4)];
        let p: u32 = rng.gen_range(1..=8);
        let g = star_geometry(&mut rng, ndim, d as usize);
        let pipe = common::random_star(ndim, d as i32 / 2, case);
        let n_iter = rng.gen_range(1..=2 * p as u64);
        let sim = build_pipeline(&pipe, &DesignPoint::new(v, p, 3e8), &g).unwrap();
        let [m, n, l] = g.extent3().map(|e| e as u64);
        let (got, want, kind) = if case % 3 == 2 {
            let b = rng.gen_range(1..=4u32);
            let batch: Vec<FieldSet> = (0..b).map(|s| FieldSet::random(g, 0, s as u64)).collect();
            let r = sim.simulate_batched(&batch, n_iter).unwrap();
            let per_pass = if ndim == 2 {
                cycles_batched_2d_total(m, n, v, p, d, b)
            } else {
                cycles_batched_3d_total(m, n, l, v, p, d, b)
            };
            (r.cycles, r.passes * per_pass, format!("batched B={b}"))
        } else {
            let r = sim.simulate(&FieldSet::random(g, 0, case), n_iter).unwrap();
            let want = if ndim == 2 {
                cycles_2d(m, n, v, p, d, n_iter)
            } else {
                cycles_3d(m, n, l, v, p, d, n_iter)
            };
            (r.cycles, want, "untiled".to_string())
        };
        if got != want {
            failures.push(format!(
                "case {case} {kind} dims {:?} V={v} p={p} D={d} iters {n_iter}: {got} != {want}",
                g.dims()
            ));
        }
    }
    verdict(
        4,
        &format!("{configs} random configurations, simulated cycles equal closed form"),
        &failures,
        start,
        Duration::from_secs(60),
    );
}

fn equivalence_suite(
    failures: &mut Vec<String>,
    pipe: &PipelineSpec,
    g: MeshGeometry,
    batch_geometry: MeshGeometry,
    design: DesignPoint,
    tiles: &[Tile],
    n_iter: u64,
) {
    let npw = pipe.pointwise_fields().len();
    let name = pipe.name();
    let inputs = FieldSet::random(g, npw, 0xacce);
    let sim = build_pipeline(pipe, &design, &g).unwrap();
    let want = run_reference(pipe, &inputs, n_iter).unwrap();
    let mut cmp = |what: String, got: &FieldData, want: &FieldData| {
        if let Some(i) = got.first_mismatch(want) {
            failures.push(format!("{name} {what}: first mismatch at value {i}"));
        }
    };
    cmp("untiled".into(), sim.simulate(&inputs, n_iter).unwrap().output(), &want);
    for &t in tiles {
        cmp(
            format!("tile {t:?}"),
            sim.simulate_tiled(&inputs, n_iter, t).unwrap().output(),
            &want,
        );
    }
    let sim = build_pipeline(pipe, &design, &batch_geometry).unwrap();
    for b in [1u64, 3, 10] {
        let batch: Vec<FieldSet> = (0..b).map(|s| FieldSet::random(batch_geometry, npw, 77 + s)).collect();
        let got = sim.simulate_batched(&batch, n_iter).unwrap();
        let want = run_reference_batch(pipe, &batch, n_iter).unwrap();
        for (i, (o, w)) in got.outputs.iter().zip(&want).enumerate() {
            cmp(format!("batch {b} member {i}"), o, w);
        }
    }
}

#[test]
fn criterion_5_simulator_bitwise_equals_reference() {
    let start = Instant::now();
    let mut failures = Vec::new();
    equivalence_suite(
        &mut failures,
        &poisson_2d(),
        MeshGeometry::new_2d(64, 64).unwrap(),
        MeshGeometry::new_2d(40, 24).unwrap(),
        DesignPoint::new(8, 3, 250e6),
        &[Tile::strip(16), Tile::strip(24), Tile::strip(40)],
        6,
    );
    equivalence_suite(
        &mut failures,
        &jacobi_3d(common::random_jacobi_coeffs(18)).unwrap(),
        MeshGeometry::new_3d(64, 48, 32).unwrap(),
        MeshGeometry::new_3d(24, 16, 12).unwrap(),
        DesignPoint::new(4, 2, 246e6),
        &[Tile::square(12), Tile { m: 20, n: Some(16) }, Tile { m: 32, n: None }],
        4,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let params = RtmParams {
        star: std::array::from_fn(|_| rng.gen_range(-0.1f32..0.1)),
        rho_weight: 0.6,
        mu_weight: 0.4,
        dt: 0.05,
    };
    equivalence_suite(
        &mut failures,
        &rtm_forward(&params).unwrap(),
        rtm_geometry(44, 40, 12).unwrap(),
        rtm_geometry(10, 9, 8).unwrap(),
        DesignPoint::new(1, 1, 261e6),
        &[Tile::square(34), Tile { m: 36, n: Some(40) }, Tile { m: 40, n: None }],
        2,
    );
    verdict(
        5,
        "untiled, tiled and batched outputs equal the reference bit for bit",
        &failures,
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_6_block_width_and_unroll_are_optimal() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b7);
    for case in 0..25 {
        let mem = rng.gen_range(1e6..4e7);
        let k: u64 = [4, 8, 24][rng.gen_range(0..3)];
        let d: u32 = [2, 4, 8][rng.gen_range(0..3)];
        let p: u32 = rng.gen_range(1..=6);
        let v = 1;
        // widest square block the memory bound admits, by brute force
        let fits = |m: u64| (k * p as u64 * d as u64 * m * m) as f64 <= mem;
        let t = |m: u64| tile_throughput(m as f64, m as f64, f64::INFINITY, v, p, d);
        let lo = p as u64 * d as u64 + 1;
        let best = (lo..=20_000)
            .filter(|&m| fits(m))
            .max_by(|&a, &b| t(a).total_cmp(&t(b)).then(b.cmp(&a)));
        let m_opt = optimal_tile_width(mem, k, p, d);
        match best {
            Some(b) if (b as f64 - m_opt.floor()).abs() <= 1.0 => {}
            other => failures.push(format!("case {case}: width argmax {other:?}, formula {m_opt:.2}")),
        }

        // best unroll for a fixed square block
        let m: u64 = rng.gen_range(24..2000);
        let best_p = (1..(m / d as u64) as u32)
            .max_by(|&a, &b| {
                let ta = tile_throughput(m as f64, m as f64, f64::INFINITY, 1, a, d);
                let tb = tile_throughput(m as f64, m as f64, f64::INFINITY, 1, b, d);
                ta.total_cmp(&tb).then(b.cmp(&a))
            })
            .unwrap();
        let p_opt = optimal_unroll_tiled(m, d);
        if best_p.abs_diff(p_opt) > 1 {
            failures.push(format!(
                "case {case}: M={m} D={d} unroll argmax {best_p}, formula {p_opt}"
            ));
        }
    }
    verdict(
        6,
        "memory-bound width and unroll formulas maximize throughput",
        &failures,
        start,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_7_poisson_runtime_spot_check() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let g = MeshGeometry::new_2d(200, 100).unwrap();
    let d = DesignPoint::new(8, 60, 250e6);
    let r = predict(&d, &poisson_2d(), &g, &ResourceProfile::u280(), 60_000);
    check(&mut failures, "cycles", r.cycles, 4_000_000);
    check(&mut failures, "runtime", r.runtime_s, 0.016);
    verdict(
        7,
        "Poisson 200x100, 60000 iterations runs in 16 ms",
        &failures,
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_8_fixed_points() {
    let start = Instant::now();
    let mut failures = Vec::new();

    let g = MeshGeometry::new_2d(40, 30).unwrap();
    let constant = FieldSet::single(FieldData::filled(g, 0.7));
    let sim = build_pipeline(&poisson_2d(), &DesignPoint::new(8, 4, 250e6), &g).unwrap();
    let out = sim.simulate(&constant, 8).unwrap();
    check(
        &mut failures,
        "poisson constant",
        out.output().bitwise_eq(&constant.primary),
        true,
    );

    // dyadic weights summing to one so every partial sum is exact
    let jacobi = jacobi_3d([0.125, 0.125, 0.125, 0.25, 0.125, 0.125, 0.125]).unwrap();
    let g = MeshGeometry::new_3d(16, 12, 10).unwrap();
    let constant = FieldSet::single(FieldData::filled(g, -1.375));
    let sim = build_pipeline(&jacobi, &DesignPoint::new(4, 3, 246e6), &g).unwrap();
    let out = sim.simulate(&constant, 6).unwrap();
    check(
        &mut failures,
        "jacobi constant",
        out.output().bitwise_eq(&constant.primary),
        true,
    );
    let identity = jacobi_3d([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let random = FieldSet::random(g, 0, 8);
    let sim = build_pipeline(&identity, &DesignPoint::new(4, 2, 246e6), &g).unwrap();
    check(
        &mut failures,
        "jacobi identity",
        sim.simulate(&random, 4).unwrap().output().bitwise_eq(&random.primary),
        true,
    );

    let g = rtm_geometry(12, 12, 10).unwrap();
    let inputs = FieldSet::random(g, 2, 5);
    for (what, params) in [
        (
            "rtm zero star",
            RtmParams {
                star: [0.0; 25],
                ..RtmParams::default()
            },
        ),
        (
            "rtm dt=0",
            RtmParams {
                dt: 0.0,
                ..RtmParams::default()
            },
        ),
    ] {
        let pipe = rtm_forward(&params).unwrap();
        let sim = build_pipeline(&pipe, &DesignPoint::new(1, 2, 261e6), &g).unwrap();
        let out = sim.simulate(&inputs, 4).unwrap();
        check(&mut failures, what, out.output().bitwise_eq(&inputs.primary), true);
    }
    verdict(
        8,
        "constant and zero-update fields are fixed points",
        &failures,
        start,
        Duration::from_secs(5),
    );
}
