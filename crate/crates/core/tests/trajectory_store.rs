use std::f64::consts::PI;

use nsda::operators::taylor_green;
use nsda::schemes::{load_trajectory, save_trajectory, Trajectory, TrajectoryStore};
use nsda::spectral::TorusGrid;

#[test]
fn saved_trajectory_loads_bit_exact() {
    let g = TorusGrid::new(2.0 * PI, 16).unwrap();
    let mut traj = Trajectory::new();
    for k in 0..5 {
        let t = 0.1 * k as f64;
        traj.push(k, t, taylor_green(&g, 1, t, 0.1).unwrap());
    }
    let tmp = tempfile::tempdir().unwrap();
    save_trajectory(tmp.path(), &traj, f64::INFINITY).unwrap();
    let back = load_trajectory(tmp.path()).unwrap();
    assert_eq!(back, traj);
}

#[test]
fn store_index_is_readable_after_each_append() {
    let g = TorusGrid::new(2.0 * PI, 8).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut store = TrajectoryStore::create(tmp.path(), 4.0).unwrap();
    for k in 0..3 {
        store.append(k, k as f64, &taylor_green(&g, 1, k as f64, 0.1).unwrap()).unwrap();
        assert_eq!(load_trajectory(tmp.path()).unwrap().len(), k + 1);
    }
    let leftovers: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
