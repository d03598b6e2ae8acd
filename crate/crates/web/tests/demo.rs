use std::f64::consts::PI;

use imfree_web::{
    fisher_grid, phase_curves, qutrit_asymmetry, qutrit_landscape, CURVE_STRIDE, GRID_STRIDE,
};

#[test]
fn curves_meet_at_pure_limit() {
    let c = phase_curves(3.0 * PI / 4.0, PI / 8.0, 0.9, 90).unwrap();
    assert_eq!(c.len(), 91 * CURVE_STRIDE);
    let first = &c[..CURVE_STRIDE];
    for v in &first[1..] {
        assert!((v - first[3]).abs() < 1e-10, "{first:?}");
    }
    for row in c.chunks(CURVE_STRIDE) {
        assert!(row[1] >= row[4] * (1.0 - 1e-12) && row[2] >= row[4] * (1.0 - 1e-12));
    }
    assert!(phase_curves(1.0, 0.0, 1.0, 10).is_err());
}

#[test]
fn spin_grid_curvature() {
    let n = 6;
    let g = fisher_grid("spin", 0.0, n).unwrap();
    for (k, cell) in g.chunks(GRID_STRIDE).enumerate() {
        let eta = PI * ((k / n) as f64 + 0.5) / n as f64;
        assert!((cell[0] - 1.0).abs() < 1e-8);
        assert!((cell[1] - eta.sin().powi(2)).abs() < 1e-8);
        assert!((cell[2].abs() - eta.sin() / 2.0).abs() < 1e-8);
    }
}

#[test]
fn antiparallel_grid_is_flat() {
    let g = fisher_grid("antiparallel_depolarized", 0.3, 4).unwrap();
    assert!(g.chunks(GRID_STRIDE).all(|c| c[2].abs() < 1e-8));
    assert!(fisher_grid("noon", 0.0, 4).is_err());
}

#[test]
fn qutrit_asymmetry_tracks_phase_cycle() {
    let consistent = qutrit_asymmetry([0.3, 0.5, 0.2], 0.02).unwrap();
    assert!(consistent[0] < 1e-8 && consistent[3] == 1.0);
    let cycled = qutrit_asymmetry([0.3, 0.5, 1.4], 0.02).unwrap();
    assert!(cycled[0] > 1e-4 && cycled[3] == 0.0);
}

#[test]
fn landscape_vanishes_on_consistent_phases() {
    let n = 8;
    let l = qutrit_landscape(0.0, 0.02, n).unwrap();
    assert_eq!(l.len(), n * n);
    // omega_13 = omega_23 keeps the phase cycle consistent
    for i in 0..n {
        assert!(l[i * n + i] < 1e-6, "{}", l[i * n + i]);
    }
    assert!(l[1] > 1e-4);
}
