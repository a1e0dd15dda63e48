//! Unconstrained minimizers: BFGS with a strong-Wolfe line search, and a
//! Nelder–Mead simplex used as a derivative-free fallback.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change of an accepted step falls below this.
    pub rel_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    RelativeChange,
    MaxIterations,
    LineSearchFailed,
    SimplexConverged,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Termination::GradientTolerance | Termination::RelativeChange | Termination::SimplexConverged
        )
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.evals += 1;
        (self.f)(x).filter(|(v, g)| v.is_finite() && g.iter().all(|gi| gi.is_finite()))
    }
}

struct LinePoint {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dg: f64,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Strong-Wolfe line search (bracketing + zoom). Points where the objective
/// is undefined are handled by shrinking the trial step.
fn line_search<F>(obj: &mut Counter<F>, x: &[f64], f0: f64, dg0: f64, d: &[f64], alpha_init: f64) -> Option<LinePoint>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut prev = LinePoint {
        alpha: 0.0,
        f: f0,
        g: Vec::new(),
        dg: dg0,
    };
    let mut alpha = alpha_init;
    for i in 0..60 {
        let Some((f, g)) = obj.eval(&axpy(x, alpha, d)) else {
            alpha = 0.5 * (prev.alpha + alpha);
            if alpha - prev.alpha < 1e-16 {
                return None;
            }
            continue;
        };
        let dg = dot(&g, d);
        let cur = LinePoint { alpha, f, g, dg };
        if cur.f > f0 + C1 * alpha * dg0 || (i > 0 && cur.f >= prev.f) {
            return zoom(obj, x, f0, dg0, d, prev, cur);
        }
        if cur.dg.abs() <= -C2 * dg0 {
            return Some(cur);
        }
        if cur.dg >= 0.0 {
            return zoom(obj, x, f0, dg0, d, cur, prev);
        }
        prev = cur;
        alpha *= 2.0;
    }
    None
}

fn zoom<F>(
    obj: &mut Counter<F>,
    x: &[f64],
    f0: f64,
    dg0: f64,
    d: &[f64],
    mut lo: LinePoint,
    mut hi: LinePoint,
) -> Option<LinePoint>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    for _ in 0..50 {
        // cubic interpolation, safeguarded toward bisection
        let (a0, a1) = (lo.alpha, hi.alpha);
        let d1 = lo.dg + hi.dg - 3.0 * (lo.f - hi.f) / (a0 - a1);
        let disc = d1 * d1 - lo.dg * hi.dg;
        let mut alpha = if disc >= 0.0 && hi.g.len() == x.len() {
            let d2 = (a1 - a0).signum() * disc.sqrt();
            a1 - (a1 - a0) * (hi.dg + d2 - d1) / (hi.dg - lo.dg + 2.0 * d2)
        } else {
            0.5 * (a0 + a1)
        };
        let (left, right) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
        let margin = 0.1 * (right - left);
        if !alpha.is_finite() || alpha < left + margin || alpha > right - margin {
            alpha = 0.5 * (a0 + a1);
        }
        if (right - left) < 1e-16 * right.max(1.0) {
            break;
        }
        let Some((f, g)) = obj.eval(&axpy(x, alpha, d)) else {
            hi = LinePoint {
                alpha,
                f: f64::INFINITY,
                g: Vec::new(),
                dg: 0.0,
            };
            continue;
        };
        let dg = dot(&g, d);
        let cur = LinePoint { alpha, f, g, dg };
        if cur.f > f0 + C1 * alpha * dg0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.dg.abs() <= -C2 * dg0 {
                return Some(cur);
            }
            if cur.dg * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // accept the best sufficient-decrease point found, if any
    if lo.alpha > 0.0 && lo.g.len() == x.len() && lo.f < f0 {
        Some(lo)
    } else {
        None
    }
}

/// Minimizes `f` with BFGS. `f` returns `None` (or non-finite values) where
/// the objective is undefined.
pub fn bfgs<F>(f: F, x0: &[f64], opts: &OptimOptions) -> Minimum
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut obj = Counter { f, evals: 0 };
    let mut x = x0.to_vec();
    let Some((mut fx, mut g)) = obj.eval(&x) else {
        return Minimum {
            x,
            f: f64::INFINITY,
            grad: vec![f64::NAN; n],
            iterations: 0,
            evaluations: obj.evals,
            termination: Termination::LineSearchFailed,
        };
    };
    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut first = true;
    let mut iter = 0;
    let termination = loop {
        if max_abs(&g) < opts.grad_tol {
            break Termination::GradientTolerance;
        }
        if iter >= opts.max_iter {
            break Termination::MaxIterations;
        }
        iter += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut dg0 = dot(&d, &g);
        if dg0 >= 0.0 {
            // lost positive definiteness: restart from steepest descent
            h.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                h[i * n + i] = 1.0;
            }
            first = true;
            d = g.iter().map(|v| -v).collect();
            dg0 = dot(&d, &g);
        }
        let alpha0 = if first { (1.0 / max_abs(&d)).min(1.0) } else { 1.0 };
        let Some(step) = line_search(&mut obj, &x, fx, dg0, &d, alpha0) else {
            break Termination::LineSearchFailed;
        };
        let s: Vec<f64> = d.iter().map(|v| step.alpha * v).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let f_prev = fx;
        x = axpy(&x, 1.0, &s);
        fx = step.f;
        g = step.g;

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = if i == j { scale } else { 0.0 };
                    }
                }
                first = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        if (f_prev - fx).abs() <= opts.rel_tol * fx.abs().max(1.0) && max_abs(&g) < opts.grad_tol.sqrt() {
            break Termination::RelativeChange;
        }
    };
    Minimum {
        x,
        f: fx,
        grad: g,
        iterations: iter,
        evaluations: obj.evals,
        termination,
    }
}

/// Nelder–Mead simplex minimization of a (possibly non-smooth) objective.
/// Returns `f = +inf` where the objective is undefined.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize, ftol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1e-8 { step * x[i].abs().max(0.1) } else { step };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    // adaptive coefficients for higher dimensions
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    while evals < max_evals {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= ftol * (best.abs() + worst.abs()).max(1e-300) && best.is_finite() {
            termination = Termination::SimplexConverged;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf)
            .collect();
        let along = |c: f64, simplex: &[(Vec<f64>, f64)]| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(m, w)| m + c * (m - w))
                .collect()
        };
        let xr = along(alpha, &simplex);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(beta, &simplex);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(gamma * alpha, &simplex);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-gamma, &simplex);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + delta * (*xi - bi);
                    }
                    *v = eval(x, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        f: fx,
        grad: Vec::new(),
        iterations,
        evaluations: evals,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((f, g))
    }

    #[test]
    fn bfgs_rosenbrock() {
        let m = bfgs(rosenbrock, &[-1.2, 1.0], &OptimOptions::default());
        assert!(m.termination.converged(), "{:?}", m.termination);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn bfgs_quadratic_with_undefined_region() {
        // f undefined for x0 > 2; minimum at (1, -3)
        let f = |x: &[f64]| {
            if x[0] > 2.0 {
                None
            } else {
                Some((
                    (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 3.0).powi(2),
                    vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 3.0)],
                ))
            }
        };
        let m = bfgs(f, &[-5.0, 5.0], &OptimOptions::default());
        assert!(m.termination.converged());
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 3.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let m = nelder_mead(|x| rosenbrock(x).unwrap().0, &[-1.2, 1.0], 0.5, 20_000, 1e-14);
        assert_eq!(m.termination, Termination::SimplexConverged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }
}
