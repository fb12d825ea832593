//! File outputs of evolution runs.

use std::fs;

use llg_fvem::harness::{run, ExperimentConfig};

fn small_blowup() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("blowup-desk").unwrap();
    for (k, v) in [("nx", "8"), ("ny", "8"), ("t_end", "0.002"), ("snapshot_times", "0, 0.001"), ("series_every", "5")]
    {
        cfg.set(k, v).unwrap();
    }
    cfg.validate().unwrap();
    cfg
}

#[test]
fn snapshots_and_series_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let art = run(&small_blowup(), Some(dir.path())).unwrap();
    assert_eq!(art.snapshots.len(), 2);
    for p in &art.snapshots {
        let text = fs::read_to_string(p).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 81 double"));
        assert!(text.contains("CELLS 128 512"));
    }
    let series = fs::read_to_string(dir.path().join("blowup_desk_series.csv")).unwrap();
    let rows: Vec<&str> = series.lines().collect();
    assert!(rows[0].starts_with("step,t,"));
    // Steps 0, 5, 10, 15, 20.
    assert_eq!(rows.len(), 6);
    let cfg_copy = fs::read_to_string(dir.path().join("blowup_desk.cfg")).unwrap();
    assert!(cfg_copy.contains("experiment = blowup"));
}

#[test]
fn repeated_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = run(&small_blowup(), Some(a.path())).unwrap();
    run(&small_blowup(), Some(b.path())).unwrap();
    for f in &x.files {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn final_state_stays_on_the_sphere() {
    let art = run(&small_blowup(), None).unwrap();
    let (_, m) = art.final_state.unwrap();
    assert!(m.max_unit_deviation() <= 1e-14);
    assert!(art.files.is_empty());
}
