//! Local maximizer used by parameter fitting: BFGS with backtracking line
//! search over an unconstrained (log-transformed) parameter vector.

use crate::scalar::Real;

pub struct MaximizeOutcome<R, const N: usize> {
    pub x: [R; N],
    pub value: R,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` (which returns the value and its gradient) starting at
/// `x0`. Stops when the relative improvement of the value falls below
/// `rel_tol` with a small step, or after `budget` iterations.
pub fn maximize<R: Real, const N: usize>(
    f: impl Fn(&[R; N]) -> (R, [R; N]),
    x0: [R; N],
    budget: usize,
    rel_tol: R,
) -> MaximizeOutcome<R, N> {
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    // Inverse-Hessian approximation, started at a cautious scale.
    let mut h = identity::<R, N>(R::of(0.1));
    let mut converged = false;
    let mut iterations = 0;
    let mut stall = 0usize;

    while iterations < budget {
        iterations += 1;

        // Ascent direction d = H * grad.
        let mut dir = [R::zero(); N];
        for i in 0..N {
            for j in 0..N {
                dir[i] = dir[i] + h[i][j] * grad[j];
            }
        }
        let slope = dot(&dir, &grad);
        if !(slope > R::zero()) || !slope.is_finite() {
            // Not an ascent direction: reset the curvature estimate.
            h = identity::<R, N>(R::of(0.1));
            for i in 0..N {
                dir[i] = R::of(0.1) * grad[i];
            }
        }

        // Backtracking (Armijo) line search, step capped to keep the
        // log-parameters in a sane range per iteration.
        let dir_norm = norm(&dir);
        let mut step = if dir_norm > R::of(2.0) { R::of(2.0) / dir_norm } else { R::one() };
        let slope = dot(&dir, &grad).max(R::of(1e-300));
        let c1 = R::of(1e-4);
        let mut accepted = false;
        let mut x_new = x;
        let mut value_new = value;
        let mut grad_new = grad;
        for _ in 0..40 {
            for i in 0..N {
                x_new[i] = x[i] + step * dir[i];
            }
            let (v, g) = f(&x_new);
            if v.is_finite() && v >= value + c1 * step * slope {
                value_new = v;
                grad_new = g;
                accepted = true;
                break;
            }
            step = step * R::of(0.5);
        }
        if !accepted {
            converged = stall > 0 || norm(&grad) < R::of(1e-7);
            break;
        }

        // BFGS update of the inverse Hessian (maximization form).
        let mut s = [R::zero(); N];
        let mut y = [R::zero(); N];
        for i in 0..N {
            s[i] = x_new[i] - x[i];
            y[i] = grad[i] - grad_new[i]; // curvature sign for ascent
        }
        let sy = dot(&s, &y);
        if sy > R::of(1e-12) {
            let rho = sy.recip();
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = [R::zero(); N];
            for i in 0..N {
                for j in 0..N {
                    hy[i] = hy[i] + h[i][j] * y[j];
                }
            }
            let yhy = dot(&y, &hy);
            for i in 0..N {
                for j in 0..N {
                    h[i][j] = h[i][j] - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        let improvement = (value_new - value).abs();
        let scale = R::one() + value_new.abs();
        x = x_new;
        value = value_new;
        grad = grad_new;

        if improvement <= rel_tol * scale && norm(&s) < R::of(1e-6) {
            stall += 1;
            if stall >= 2 {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    MaximizeOutcome { x, value, iterations, converged }
}

fn identity<R: Real, const N: usize>(scale: R) -> [[R; N]; N] {
    let mut m = [[R::zero(); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = scale;
    }
    m
}

fn dot<R: Real, const N: usize>(a: &[R; N], b: &[R; N]) -> R {
    let mut acc = R::zero();
    for i in 0..N {
        acc = acc + a[i] * b[i];
    }
    acc
}

fn norm<R: Real, const N: usize>(a: &[R; N]) -> R {
    dot(a, a).sqrt()
}
