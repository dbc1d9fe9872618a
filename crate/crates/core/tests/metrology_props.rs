use hobsim::cutting::{deviation_at, simulate_flank, RaySearch};
use hobsim::gear::{build_grid, derive_transverse, GearSpec};
use hobsim::hob::HobSpec;
use hobsim::kinematics::{build_schedule, CutterSchedule, MachineSetup};
use hobsim::metrology::{
    align_clocking, align_clocking_from, aligned_field, error_map, ErrorMap, METROLOGY_RAY_TOL,
};

fn setup(feed: f64, interval: f64) -> MachineSetup {
    MachineSetup::new(GearSpec::default(), HobSpec::default(), feed, interval)
}

fn centre_after(grid: &hobsim::gear::FlankGrid, s: &CutterSchedule, gamma: f64) -> f64 {
    let g = grid.rotated(gamma);
    let search = RaySearch::for_module(2.0).with_tol(METROLOGY_RAY_TOL);
    deviation_at(&g.point(12, 12), &g.normal(12, 12), s, &search)
        .unwrap()
        .0
}

#[test]
fn injected_offset_is_recovered() {
    let search = RaySearch::for_module(2.0);
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    for (feed, interval) in [(1.0, 2.0), (3.0, 4.0)] {
        let base = setup(feed, interval);
        let g0 = align_clocking(&grid, &build_schedule(&base).unwrap(), &search).unwrap();
        let mut shifted = base.clone();
        shifted.gear_angle_offset = 0.001;
        let s = build_schedule(&shifted).unwrap();
        let g1 = align_clocking(&grid, &s, &search).unwrap();
        assert!(((g1 - g0) + 0.001).abs() < 1e-8, "{}", g1 - g0);
        assert!(centre_after(&grid, &s, g1).abs() < 1e-9);
    }
}

#[test]
fn alignment_is_idempotent() {
    let search = RaySearch::for_module(2.0);
    let s = build_schedule(&setup(2.0, 2.0)).unwrap();
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    let a = align_clocking(&grid, &s, &search).unwrap();
    let b = align_clocking_from(&grid, &s, &search, a).unwrap();
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn converged_simulation_needs_little_clocking() {
    let search = RaySearch::for_module(2.0);
    let s = build_schedule(&setup(0.25, 0.25)).unwrap();
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    let raw = simulate_flank(&grid, &s, &search).unwrap();
    let gamma = align_clocking(&grid, &s, &search).unwrap();
    let rb = derive_transverse(&GearSpec::default()).unwrap().base_radius;
    assert!(gamma.abs() < raw.max_abs() / rb, "{gamma}");
    assert!(centre_after(&grid, &s, gamma).abs() < 1e-9);
}

#[test]
fn shape_invariant_under_pitch_rotation_of_workpiece_frame() {
    let search = RaySearch::for_module(2.0);
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    let base = setup(2.0, 4.0);
    let s0 = build_schedule(&base).unwrap();
    let g0 = align_clocking(&grid, &s0, &search).unwrap();
    let m0 = error_map(&grid, &s0, &search, g0).unwrap();
    let pitch = std::f64::consts::TAU / 30.0;
    for k in [1, 7, 29] {
        // frame rotated by k pitches: the as-cut part and the theoretical
        // grid turn together
        let rot = k as f64 * pitch;
        let mut moved = base.clone();
        moved.gear_angle_offset = -rot;
        let s = build_schedule(&moved).unwrap();
        let g = grid.rotated(rot);
        let gamma = align_clocking(&g, &s, &search).unwrap();
        let m = error_map(&g, &s, &search, gamma).unwrap();
        assert!(
            (m.max_abs_error - m0.max_abs_error).abs() < 1e-6,
            "{} vs {}",
            m.max_abs_error,
            m0.max_abs_error
        );
    }
}

#[test]
fn radial_offset_is_absorbed_by_alignment() {
    let search = RaySearch::for_module(2.0);
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    let mut moved = setup(1.0, 2.0);
    let nominal = hobsim::kinematics::Kinematics::new(&moved)
        .unwrap()
        .center_distance;
    moved.center_distance = Some(nominal + 0.01);
    let s = build_schedule(&moved).unwrap();
    let raw = simulate_flank(&grid, &s, &search).unwrap();
    let gamma = align_clocking(&grid, &s, &search).unwrap();
    assert!(centre_after(&grid, &s, gamma).abs() < 1e-9);
    let m = error_map(&grid, &s, &search, gamma).unwrap();
    // the shift is mostly a rigid offset; the reported shape is much smaller
    assert!(
        m.max_abs_error < 0.5 * raw.max_abs() * 1e3,
        "{} vs {}",
        m.max_abs_error,
        raw.max_abs() * 1e3
    );
}

#[test]
fn samples_equal_field_entries() {
    let search = RaySearch::for_module(2.0);
    let s = build_schedule(&setup(2.0, 4.0)).unwrap();
    let grid = build_grid(&GearSpec::default(), 25, 25, 0.05, 0.05).unwrap();
    let gamma = align_clocking(&grid, &s, &search).unwrap();
    let field = aligned_field(&grid, &s, &search, gamma).unwrap();
    let m = ErrorMap::from_field(&field, gamma, 5, 5).unwrap();
    assert_eq!(m, error_map(&grid, &s, &search, gamma).unwrap());
    for (i, r) in [0, 6, 12, 18, 24].into_iter().enumerate() {
        for (j, c) in [0, 6, 12, 18, 24].into_iter().enumerate() {
            assert_eq!(m.error(i, j), field.deviation(r, c) * 1e3);
        }
    }
    assert!(m.error(2, 2).abs() < 1e-6);
    assert!(m.field_max_abs_error >= m.max_abs_error);
}
