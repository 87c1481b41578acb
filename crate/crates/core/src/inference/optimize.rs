//! Derivative-free minimisation used by the fitting routines.

/// Result of a local minimisation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iters: usize,
    /// True when the simplex spread met the tolerance before the iteration cap.
    pub converged: bool,
}

/// Treats NaN as +∞ so a failed evaluation is always the worst vertex.
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Nelder–Mead simplex minimisation with standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
///
/// Stops when `f_max - f_min <= f_tol * (|f_min| + f_tol)` or after
/// `max_iters` iterations.
pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], step: f64, f_tol: f64, max_iters: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64]| {
        evals += 1;
        sanitize(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut converged = false;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && worst - best <= f_tol * (best.abs() + f_tol) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflected point beat the worst, else inside
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *fx = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        evals,
        iters,
        converged,
    }
}

/// Nelder–Mead restarted from its own optimum until a restart no longer
/// improves by more than the tolerance; guards against simplex collapse.
/// All restarts share the `max_iters` budget.
pub(crate) fn nelder_mead_restarts<F>(f: F, x0: &[f64], step: f64, f_tol: f64, max_iters: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    const RESTARTS: usize = 3;
    let mut best = nelder_mead(&f, x0, step, f_tol, max_iters);
    for _ in 0..RESTARTS {
        if best.iters >= max_iters {
            break;
        }
        let next = nelder_mead(&f, &best.x, step * 0.2, f_tol, max_iters - best.iters);
        let (evals, iters) = (best.evals + next.evals, best.iters + next.iters);
        let improved = next.f < best.f - f_tol * (best.f.abs() + f_tol);
        if next.f <= best.f {
            best = Minimum { evals, iters, ..next };
        } else {
            best.evals = evals;
            best.iters = iters;
            best.converged = next.converged;
        }
        if !improved {
            break;
        }
    }
    best
}

/// Steepest descent with central-difference gradients (step `1e-5·(1+|x_i|)`)
/// and a backtracking line search. Never returns a worse point.
pub(crate) fn gradient_polish<F>(f: F, start: Minimum, f_tol: f64, max_iters: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let Minimum {
        mut x,
        f: mut fx,
        mut evals,
        iters,
        converged,
    } = start;
    if !fx.is_finite() {
        return Minimum {
            x,
            f: fx,
            evals,
            iters,
            converged,
        };
    }
    let n = x.len();
    for _ in 0..max_iters {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let h = 1e-5 * (1.0 + x[i].abs());
            let mut probe = x.clone();
            probe[i] = x[i] + h;
            let up = sanitize(f(&probe));
            probe[i] = x[i] - h;
            let down = sanitize(f(&probe));
            evals += 2;
            grad[i] = (up - down) / (2.0 * h);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let mut t = 1.0 / norm.max(1.0);
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi - t * g).collect();
            let ft = sanitize(f(&trial));
            evals += 1;
            if ft < fx {
                let gain = fx - ft;
                x = trial;
                fx = ft;
                moved = gain > f_tol * (fx.abs() + f_tol);
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Minimum {
        x,
        f: fx,
        evals,
        iters,
        converged,
    }
}
