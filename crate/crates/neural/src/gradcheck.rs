//! Central finite-difference gradients, used to validate the analytic
//! backward passes. Only touches forward evaluation, so it stays independent
//! of the backprop code it checks.

/// Central difference d f / d params[i] with step h for every parameter.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + h;
        let up = f(&work);
        work[i] = orig - h;
        let down = f(&work);
        work[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// Largest relative error |a - b| / max(|a|, floor) across the two gradients.
pub fn max_rel_err(analytic: &[f64], fd: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), fd.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| (a - b).abs() / a.abs().max(floor))
        .fold(0.0, f64::max)
}

/// Worst relative disagreement between `analytic` and central differences.
///
/// Starts at step `h`; parameters whose mismatch exceeds `tol` there are
/// re-measured at 10h, where f64 cancellation noise is an order of magnitude
/// smaller while truncation error stays far below `tol` for smooth nets. A
/// genuine gradient bug fails at both steps.
pub fn worst_rel_err_adaptive(
    f: &mut dyn FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
    floor: f64,
) -> f64 {
    let fd = fd_gradient(f, params, h);
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let mut rel = (analytic[i] - fd[i]).abs() / analytic[i].abs().max(floor);
        if rel >= tol {
            let orig = work[i];
            work[i] = orig + 10.0 * h;
            let up = f(&work);
            work[i] = orig - 10.0 * h;
            let down = f(&work);
            work[i] = orig;
            let fd_wide = (up - down) / (20.0 * h);
            rel = rel.min((analytic[i] - fd_wide).abs() / analytic[i].abs().max(floor));
        }
        worst = worst.max(rel);
    }
    worst
}
