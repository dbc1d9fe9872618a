use hobsim::config::Config;
use hobsim::cutting::{simulate_flank, RaySearch};
use hobsim::kinematics::build_schedule;
use hobsim::metrology::{export_error_surface, read_error_csv, ErrorMap, ErrorSidecar};
use hobsim::stl::export_stl;
use hobsim::sweep::{check_trends, run_cell, run_sweep, SweepTable};

fn small_config() -> Config {
    let mut c = Config::default();
    c.sweep.feeds = vec![4.0, 2.0];
    c.sweep.intervals = vec![8.0, 4.0];
    c
}

fn without_runtime(t: &SweepTable) -> SweepTable {
    let mut t = t.clone();
    for c in &mut t.cells {
        c.runtime_s = 0.0;
    }
    t
}

#[test]
fn sweep_is_deterministic_and_cells_independent() {
    let cfg = small_config();
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));
    assert_eq!(a.matrix().unwrap().len(), 2);
    let lone = run_cell(&cfg, 2.0, 4.0).unwrap();
    assert_eq!(a.cell(1, 1).outcome.as_ref().unwrap(), &lone);
    assert!(a.provenance.contains(&cfg.hash()));
}

#[test]
fn sweep_csv_has_one_line_per_cell() {
    let t = run_sweep(&small_config()).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert!(lines[0].starts_with("# config-hash="));
    assert_eq!(lines.len(), 2 + 4);
    assert!(lines[2..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn trend_checker_on_reference_matrix() {
    let reference = vec![
        vec![11.20932, 8.66371, 7.41972],
        vec![5.72456, 3.20556, 3.53586],
        vec![3.16018, 2.42126, 1.52903],
        vec![2.75746, 1.40773, 1.11871],
        vec![2.27441, 1.15853, 0.91163],
    ];
    let r = check_trends(&reference);
    assert_eq!(r.columns_monotone, vec![true; 3]);
    assert_eq!(r.rows_monotone.iter().filter(|m| **m).count(), 4);
    assert_eq!(r.row_exceptions.len(), 1);
    assert_eq!(r.row_exceptions[0].row, 1);
    assert!(r.pass());
}

#[test]
fn file_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let mut setup = cfg.setup();
    setup.feed_per_rev = 3.0;
    setup.interval_angle = 4.0;
    let s = build_schedule(&setup).unwrap();
    let grid = cfg.grid.build(&cfg.gear).unwrap();
    let field = simulate_flank(&grid, &s, &RaySearch::for_module(2.0)).unwrap();

    let dev = dir.path().join("dev.csv");
    field.export_csv(&dev, Some(&cfg.provenance())).unwrap();
    let text = std::fs::read_to_string(&dev).unwrap();
    assert_eq!(text.lines().count(), 2 + 625);

    let stl = dir.path().join("flank.stl");
    export_stl(&field, &stl).unwrap();
    assert_eq!(std::fs::metadata(&stl).unwrap().len(), 84 + 50 * 1152);

    let map = ErrorMap::from_field(&field, 0.0, 5, 5).unwrap();
    let csv = dir.path().join("err.csv");
    let side = export_error_surface(&map, &csv, Some(&cfg.provenance())).unwrap();
    let recs = read_error_csv(std::io::BufReader::new(std::fs::File::open(&csv).unwrap())).unwrap();
    assert_eq!(recs.len(), 25);
    let s: ErrorSidecar = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_eq!(s.max_abs_error_um, map.max_abs_error);
    assert_eq!(s.corners[0].label, 'A');
    assert_eq!((s.corners[0].row, s.corners[0].col), (0, 0));
}
