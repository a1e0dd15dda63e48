#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use uwarma::model::{ModelSpec, ParamVector};

/// Double-exponential quadrature of `f` over `(0, inf)` with the map
/// `x = exp(pi/2 sinh t)`; the step is halved until two levels agree to `tol`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let t_max = 4.5;
    let term = |t: f64| {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let w = x * FRAC_PI_2 * t.cosh();
        if x == 0.0 || !x.is_finite() {
            0.0
        } else {
            let v = f(x) * w;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    let mut h = 0.5;
    let mut sum: f64 = (-(t_max / h) as i64..=(t_max / h) as i64).map(|k| term(k as f64 * h)).sum();
    let mut prev = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        // add the new odd-indexed nodes only
        let n = (t_max / h) as i64;
        sum += (-n..=n).filter(|k| k % 2 != 0).map(|k| term(k as f64 * h)).sum::<f64>();
        let est = sum * h;
        if (est - prev).abs() <= tol * est.abs().max(1.0) {
            return est;
        }
        prev = est;
    }
    prev
}

/// Tanh-sinh quadrature of `f` over `(a, b)`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (c, d) = ((a + b) / 2.0, (b - a) / 2.0);
    let t_max = 3.5;
    let term = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        let x = u.tanh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let p = c + d * x;
        if p <= a || p >= b {
            0.0
        } else {
            f(p) * w * d
        }
    };
    let mut h = 0.5;
    let mut sum: f64 = (-(t_max / h) as i64..=(t_max / h) as i64).map(|k| term(k as f64 * h)).sum();
    let mut prev = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        let n = (t_max / h) as i64;
        sum += (-n..=n).filter(|k| k % 2 != 0).map(|k| term(k as f64 * h)).sum::<f64>();
        let est = sum * h;
        if (est - prev).abs() <= tol * est.abs().max(1.0) {
            return est;
        }
        prev = est;
    }
    prev
}

/// Central differences with one Richardson step.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let h = 1e-4 * x[j].abs().max(1.0);
            let at = |step: f64| {
                let mut p = x.to_vec();
                p[j] += step;
                let plus = f(&p);
                p[j] = x[j] - step;
                (plus - f(&p)) / (2.0 * step)
            };
            (4.0 * at(h / 2.0) - at(h)) / 3.0
        })
        .collect()
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn arma11(rho: f64, lambda: f64, phi: f64, theta: f64) -> (ModelSpec, ParamVector) {
    (
        ModelSpec::new(1, 1, rho, uwarma::Link::Logit, 0).unwrap(),
        ParamVector::new(0.0, vec![], vec![phi], vec![theta], lambda).unwrap(),
    )
}

pub fn report(name: &str, pass: bool, detail: &str) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
