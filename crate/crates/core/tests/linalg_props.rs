use imfree::linalg::random::{random_hermitian, random_unitary};
use imfree::linalg::*;
use imfree::rng::stream;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn to_na(a: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)])
}

fn random_square(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = stream(seed, 1);
    let u = random_unitary(n, &mut rng);
    let h = random_hermitian(n, &mut rng);
    &u * &h
}

#[test]
fn eigen_reconstruction_matches_products() {
    for seed in 0..50 {
        let n = 1 + (seed as usize % 8);
        let a = random_hermitian(n, &mut stream(seed, 0));
        let es = hermitian_eig(&a).unwrap();
        let scale = 1.0 + a.frobenius_norm();
        assert!((&es.reconstruct() - &a).max_abs() <= 1e-10 * scale);
        assert!(es.vectors.unitary_defect() < 1e-12);
        let mut oracle: Vec<f64> = to_na(&a).symmetric_eigenvalues().iter().cloned().collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in es.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10 * scale);
        }
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn trace_norm_matches_svd_oracle() {
    for seed in 0..50 {
        let a = random_square(4, seed);
        let oracle: f64 = to_na(&a).singular_values().iter().sum();
        assert!((trace_norm(&a) - oracle).abs() < 1e-10, "seed {seed}");
        let h = random_hermitian(5, &mut stream(seed, 9));
        let oracle: f64 = to_na(&h).singular_values().iter().sum();
        assert!((trace_norm(&h) - oracle).abs() < 1e-10);
    }
}

#[test]
fn takagi_thousand_cases() {
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let n = 1 + (seed as usize % 16);
        let u = random_unitary(n, &mut stream(seed, 2));
        let s = &u * &u.transpose();
        let t = takagi_factorize(&s).unwrap();
        worst = worst.max((&(&t.w * &t.w.transpose()) - &s).max_abs());
        worst = worst.max(t.w.unitary_defect());
    }
    assert!(worst <= 1e-10, "worst reconstruction {worst:e}");
}

#[test]
fn takagi_handles_degenerate_real_parts() {
    // Re S has a repeated eigenvalue, Im S splits it.
    let d = ComplexMatrix::diag(&[C64::from_polar(1.0, 0.7), C64::from_polar(1.0, -0.7), ONE]);
    let o = random_unitary(3, &mut stream(5, 5)).map(|z| C64::new(z.re, 0.0));
    let q = {
        // orthonormalize real columns
        let cols: Vec<Vec<C64>> = o.columns();
        let mut out: Vec<Vec<C64>> = Vec::new();
        for c in cols {
            let mut v = c.clone();
            for b in &out {
                let p = inner(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            out.push(normalized(&v));
        }
        ComplexMatrix::from_columns(&out)
    };
    let s = &(&q * &d) * &q.transpose();
    let t = takagi_factorize(&s).unwrap();
    assert!((&(&t.w * &t.w.transpose()) - &s).max_abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_norm_dominates_trace(seed in any::<u64>(), n in 1usize..7) {
        let a = random_square(n, seed);
        prop_assert!(trace_norm(&a) + 1e-12 >= a.trace().norm());
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>()) {
        let a = random_square(2, seed);
        let b = random_square(3, seed ^ 1);
        let c = random_square(2, seed ^ 2);
        let l = kron(&kron(&a, &b), &c);
        let r = kron(&a, &kron(&b, &c));
        prop_assert!((&l - &r).max_abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), n in 1usize..10) {
        let a = random_hermitian(n, &mut stream(seed, 3));
        let es = hermitian_eig(&a).unwrap();
        let s: f64 = es.values.iter().sum();
        prop_assert!((s - a.trace().re).abs() < 1e-10 * (1.0 + a.frobenius_norm()));
    }
}
