use proptest::prelude::*;
use spm_core::noise::rng::{stream, StreamPurpose};
use spm_core::sandpile::{log_histogram, run_soc, AvalancheRecord, SandpileLattice};

/// Z from its entrywise definition: 4 on the diagonal, −1 for nearest
/// neighbours, 0 otherwise.
fn dense_z(side: usize) -> Vec<Vec<i64>> {
    let n = side * side;
    let mut z = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (ri, ci, rj, cj) = ((i / side) as i64, (i % side) as i64, (j / side) as i64, (j % side) as i64);
            z[i][j] = if i == j {
                4
            } else if (ri - rj).abs() + (ci - cj).abs() == 1 {
                -1
            } else {
                0
            };
        }
    }
    z
}

#[test]
fn single_centre_toppling() {
    let mut heights = vec![0; 9];
    heights[4] = 4;
    let mut lat = SandpileLattice::from_heights(3, heights, 4).unwrap();
    let mut copy = lat.clone();
    lat.apply_toppling_matrix();
    assert_eq!(lat.heights(), &[0, 1, 0, 1, 0, 1, 0, 1, 0]);
    assert_eq!(lat.grains_lost(), 0);
    let rec = copy.stabilize().unwrap();
    assert_eq!(rec, AvalancheRecord { size: 1, duration: 1, dissipated: 0 });
    assert_eq!(copy.heights(), lat.heights());
}

#[test]
fn two_by_two_all_critical() {
    let mut lat = SandpileLattice::from_heights(2, vec![4; 4], 4).unwrap();
    let mut copy = lat.clone();
    lat.apply_toppling_matrix();
    assert_eq!(lat.heights(), &[2, 2, 2, 2]);
    assert_eq!(lat.grains_lost(), 8);
    let rec = copy.stabilize().unwrap();
    assert_eq!(rec, AvalancheRecord { size: 4, duration: 1, dissipated: 8 });
    assert!(copy.is_stable());
    assert!(SandpileLattice::new(1, 4).is_err());
}

#[test]
fn stable_input_is_untouched() {
    let mut lat = SandpileLattice::from_heights(3, vec![3, 2, 1, 0, 3, 3, 1, 2, 3], 4).unwrap();
    let before = lat.clone();
    assert_eq!(lat.stabilize().unwrap(), AvalancheRecord::default());
    assert_eq!(lat, before);
    assert!(lat.apply_toppling_matrix().is_empty());
    assert_eq!(lat, before);
}

#[test]
fn drive_adds_one_grain() {
    let mut lat = SandpileLattice::new(4, 4).unwrap();
    lat.drive(5).unwrap();
    assert_eq!(lat.heights()[5], 1);
    assert_eq!(lat.total(), 1);
    assert!(lat.drive(16).is_err());
    for k in 0..3 {
        lat.drive(k).unwrap();
    }
    assert_eq!(lat.total(), 4);
    assert!(lat.audit().exact);
}

#[test]
fn random_drives_are_uniform() {
    let mut lat = SandpileLattice::new(8, i64::MAX).unwrap();
    let mut rng = stream(99, StreamPurpose::SandpileDrive, 0, 0);
    let n = 100_000;
    for _ in 0..n {
        lat.drive_random(&mut rng);
    }
    let p = 1.0 / 64.0;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for &h in lat.heights() {
        assert!((h as f64 - n as f64 * p).abs() <= 5.0 * sd);
    }
}

#[test]
fn small_soc_run_below_threshold() {
    let stats = run_soc(4, 4, 20, 1).unwrap();
    // 20 grains on 16 sites cannot push every site to 4, but some avalanches
    // may still occur; before the first one all sizes are zero
    let first = stats.avalanches.iter().position(|a| a.size > 0).unwrap_or(stats.avalanches.len());
    assert!(first >= 3);
    assert!(stats.avalanches[..first].iter().all(|a| *a == AvalancheRecord::default()));
    assert!(stats.audit.exact);
    let again = run_soc(4, 4, 20, 1).unwrap();
    assert_eq!(stats.size_histogram, again.size_histogram);
}

#[test]
fn histogram_bins() {
    let bins = log_histogram(&[0, 1, 2, 3, 4, 9]);
    let counts: Vec<(u64, u64, u64)> = bins.iter().map(|b| (b.lo, b.hi, b.count)).collect();
    assert_eq!(counts, vec![(0, 1, 1), (1, 2, 1), (2, 4, 2), (4, 8, 1), (8, 16, 1)]);
}

proptest! {
    #[test]
    fn stencil_matches_dense_matrix(side in 2usize..=8, seed in any::<u64>()) {
        let mut rng = stream(seed, StreamPurpose::SandpileDrive, 1, 0);
        use rand::Rng;
        let heights: Vec<i64> = (0..side * side).map(|_| rng.random_range(0..8)).collect();
        let mut lat = SandpileLattice::from_heights(side, heights.clone(), 4).unwrap();
        lat.apply_toppling_matrix();
        let f: Vec<i64> = heights.iter().map(|h| i64::from(*h - 4 >= 0)).collect();
        let z = dense_z(side);
        let expected: Vec<i64> = (0..side * side)
            .map(|i| heights[i] - (0..side * side).map(|j| z[i][j] * f[j]).sum::<i64>())
            .collect();
        prop_assert_eq!(lat.heights(), &expected[..]);
        prop_assert!(lat.audit().exact);
    }

    #[test]
    fn stabilization_conserves_and_stays_nonnegative(side in 2usize..=10, seed in any::<u64>()) {
        let mut rng = stream(seed, StreamPurpose::SandpileDrive, 2, 0);
        use rand::Rng;
        let heights: Vec<i64> = (0..side * side).map(|_| rng.random_range(0..12)).collect();
        let mut lat = SandpileLattice::from_heights(side, heights, 4).unwrap();
        let rec = lat.stabilize().unwrap();
        prop_assert!(lat.is_stable());
        prop_assert!(lat.heights().iter().all(|h| *h >= 0));
        prop_assert!(lat.audit().exact);
        prop_assert!(rec.size >= rec.duration);
        prop_assert_eq!(rec.dissipated as i64, lat.grains_lost());
    }
}
