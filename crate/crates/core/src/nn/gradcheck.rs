/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of the scalar function
/// `f` at `x`, one coordinate at a time, and returns the largest relative error.
///
/// The step actually taken is measured after rounding to f32, so the quotient
/// uses the true perturbation rather than `2 * eps`.
pub fn grad_check(mut f: impl FnMut(&[f32]) -> f64, x: &[f32], analytic: &[f32], eps: f32) -> f64 {
    assert_eq!(x.len(), analytic.len(), "gradient length must match the input");
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let (up, down) = (x[i] + eps, x[i] - eps);
        probe[i] = up;
        let fp = f(&probe);
        probe[i] = down;
        let fm = f(&probe);
        probe[i] = x[i];
        let numeric = (fp - fm) / (up as f64 - down as f64);
        worst = worst.max(relative_error(analytic[i] as f64, numeric));
    }
    worst
}
