//! Small derivative-free and first-order minimizers.

/// Nelder-Mead on an unconstrained objective.
/// Stops when the simplex values spread less than `ftol` and its diameter is below `xtol`.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= ftol && diam <= xtol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let worst = simplex[n].0.clone();
        let xr = along(1.0, &worst);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0, &worst);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(0.5, &worst);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(-0.5, &worst);
                let v = f(&x);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&s.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    let v = f(&x);
                    *s = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Gradient descent with Armijo backtracking. Stops on a small gradient or once
/// an accepted step lowers the value by no more than rounding.
pub fn gradient_descent(
    f: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    initial_step: f64,
    gtol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut step = initial_step;
    for _ in 0..max_iter {
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2.sqrt() <= gtol {
            break;
        }
        let mut accepted = false;
        let mut stalled = false;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let (fy, gy) = f(&y);
            if fy <= fx - 1e-4 * step * gn2 {
                stalled = fx - fy <= f64::EPSILON * fx.abs();
                x = y;
                fx = fy;
                g = gy;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted || stalled {
            break;
        }
    }
    (x, fx)
}
