#![allow(dead_code, clippy::too_many_arguments)]

use l1_subdiffusion::mesh::TemporalMesh;
use l1_subdiffusion::numerics::gamma;

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `delta_t^alpha U` at `t_m` by quadrature of the Caputo integral of the
/// piecewise-linear interpolant of `history`.
pub fn quadrature_l1(mesh: &TemporalMesh, alpha: f64, m: usize, history: &[f64]) -> f64 {
    let tm = mesh.t(m);
    let mut sum = 0.0;
    for j in 1..=m {
        let slope = (history[j] - history[j - 1]) / mesh.tau(j);
        let integral = if j < m {
            let kernel = |s: f64| (tm - s).powf(-alpha);
            let scale = mesh.tau(j) * (tm - mesh.t(j - 1)).powf(-alpha);
            adaptive_simpson(&kernel, mesh.t(j - 1), mesh.t(j), 1e-15 * scale)
        } else {
            // s = t_m - u^{1/(1-alpha)} removes the endpoint singularity
            let upper = mesh.tau(m).powf(1.0 - alpha);
            let transformed = |u: f64| {
                let w = u.powf(1.0 / (1.0 - alpha));
                // w^{-alpha} dw/du with w = u^{1/(1-alpha)}
                if u == 0.0 {
                    1.0 / (1.0 - alpha)
                } else {
                    w.powf(-alpha) * w / ((1.0 - alpha) * u)
                }
            };
            adaptive_simpson(&transformed, 0.0, upper, 1e-15 * upper)
        };
        sum += slope * integral;
    }
    sum / gamma(1.0 - alpha)
}
