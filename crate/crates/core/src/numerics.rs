//! Small numerical kernels shared by the operators and solvers.

/// Gamma function.
///
/// Backed by the Lanczos approximation in `statrs` (about 15 significant
/// digits on the positive axis, which is all the L1 weights ever need).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Evaluates `a^p - (a - d)^p` for `0 <= d <= a` without cancellation.
///
/// When `d << a` the naive difference loses every significant digit, which
/// happens routinely for the first steps of a strongly graded mesh.
pub fn pow_diff(a: f64, d: f64, p: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= a {
        return a.powf(p);
    }
    // a^p (1 - (1 - d/a)^p) = -a^p expm1(p ln(1 - d/a))
    -a.powf(p) * (p * (-d / a).ln_1p()).exp_m1()
}

/// Pairwise rate `log2(e_coarse / e_fine)` for a doubling of the resolution.
pub fn doubling_rate(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
