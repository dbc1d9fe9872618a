mod common;

use hobsim::cutting::{
    deviation_at, simulate_flank, slice_involute_deviation, transverse_slice, RaySearch,
};
use hobsim::gear::{build_grid, GearSpec};
use hobsim::hob::HobSpec;
use hobsim::kinematics::{build_schedule, MachineSetup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(feed: f64, interval: f64) -> MachineSetup {
    MachineSetup::new(GearSpec::default(), HobSpec::default(), feed, interval)
}

#[test]
fn refinement_never_adds_material() {
    let search = RaySearch::for_module(2.0);
    for (feed, coarse, fine) in [(5.0, 8.0, 4.0), (3.0, 4.0, 2.0), (1.0, 4.0, 2.0)] {
        let a = build_schedule(&setup(feed, coarse)).unwrap();
        let b = build_schedule(&setup(feed, fine)).unwrap();
        assert_eq!(b.len(), 2 * a.len());
        for (k, f) in a.frames.iter().enumerate() {
            assert_eq!(&b.frames[2 * k], f, "pose {k} not shared");
        }
        let g = build_grid(&a.setup.gear, 9, 9, 0.05, 0.05).unwrap();
        let fa = simulate_flank(&g, &a, &search).unwrap();
        let fb = simulate_flank(&g, &b, &search).unwrap();
        for (da, db) in fa.deviations.iter().zip(&fb.deviations) {
            assert!(*db <= da + search.tol, "{db} > {da}");
        }
    }
}

#[test]
fn bisection_matches_brute_force_scan() {
    let s = build_schedule(&common::toy_setup()).unwrap();
    let g = build_grid(&s.setup.gear, 7, 7, 0.05, 0.05).unwrap();
    let search = RaySearch::for_module(2.0);
    let f = simulate_flank(&g, &s, &search).unwrap();
    for i in 0..g.len() {
        let b =
            common::brute_force_deviation(&g.points[i], &g.normals[i], &s, search.halfwidth, 1e-5)
                .unwrap();
        assert!(
            (b - f.deviations[i]).abs() < 2e-5,
            "point {i}: {b} vs {}",
            f.deviations[i]
        );
    }
}

#[test]
fn working_flank_is_never_undercut() {
    let search = RaySearch::for_module(2.0);
    for (feed, interval) in [(2.0, 4.0), (3.0, 2.0), (1.0, 1.0)] {
        let s = build_schedule(&setup(feed, interval)).unwrap();
        let g = build_grid(&s.setup.gear, 13, 13, 0.05, 0.05).unwrap();
        let f = simulate_flank(&g, &s, &search).unwrap();
        let min = f.deviations.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -search.tol, "feed {feed} interval {interval}: {min}");
    }
}

#[test]
fn fine_schedule_converges_to_helicoid() {
    let s = build_schedule(&setup(0.25, 0.25)).unwrap();
    let g = build_grid(&s.setup.gear, 5, 5, 0.05, 0.05).unwrap();
    let f = simulate_flank(&g, &s, &RaySearch::for_module(2.0)).unwrap();
    assert!(f.max_abs() < 1e-4, "{}", f.max_abs());
}

#[test]
fn simulation_is_deterministic_and_matches_pointwise() {
    let s = build_schedule(&setup(2.0, 4.0)).unwrap();
    let g = build_grid(&s.setup.gear, 25, 25, 0.05, 0.05).unwrap();
    let search = RaySearch::for_module(2.0);
    let a = simulate_flank(&g, &s, &search).unwrap();
    let b = simulate_flank(&g, &build_schedule(&setup(2.0, 4.0)).unwrap(), &search).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.deviations.len(), 625);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let i = rng.gen_range(0..g.len());
        let (d, k) = deviation_at(&g.points[i], &g.normals[i], &s, &search).unwrap();
        assert_eq!((d, k), (a.deviations[i], a.limiting_pose_index[i]));
    }
}

#[test]
fn culling_changes_nothing() {
    let s = build_schedule(&setup(3.0, 4.0)).unwrap();
    let g = build_grid(&s.setup.gear, 9, 9, 0.05, 0.05).unwrap();
    let search = RaySearch::for_module(2.0);
    let a = simulate_flank(&g, &s, &search).unwrap();
    let b = simulate_flank(
        &g,
        &s,
        &RaySearch {
            cull: false,
            ..search
        },
    )
    .unwrap();
    for (x, y) in a.deviations.iter().zip(&b.deviations) {
        assert!((x - y).abs() <= search.tol);
    }
}

#[test]
fn coarse_slices_are_faceted_and_refine() {
    let coarse = build_schedule(&setup(5.0, 8.0)).unwrap();
    let fine = build_schedule(&setup(5.0, 2.0)).unwrap();
    let pc = transverse_slice(&coarse, 15.0, 720).unwrap();
    let pf = transverse_slice(&fine, 15.0, 720).unwrap();
    assert!(pf.vertex_count(1e-3) > pc.vertex_count(1e-3));
    let tp = &coarse.kinematics.gear;
    let lo = tp.u_root_form();
    let hi = 0.95 * tp.u_tip();
    let worst = |s, p| {
        slice_involute_deviation(s, p, lo, hi)
            .iter()
            .map(|d| d.1.abs())
            .fold(0.0, f64::max)
    };
    let (wc, wf) = (worst(&coarse, &pc), worst(&fine, &pf));
    assert!(wf < wc, "{wf} vs {wc}");
    // the envelope only leaves material on the working profile
    assert!(slice_involute_deviation(&fine, &pf, lo, hi)
        .iter()
        .all(|d| d.1 > -1e-6));
}
