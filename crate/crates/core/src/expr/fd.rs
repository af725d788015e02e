use super::{evaluate, Expr, ExprError, Taylor2};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Central-difference gradient and Hessian, truncation error `O(step²)`.
///
/// Built only on [`evaluate`], so it shares no code path with the forward-mode
/// derivatives it is used to check.
pub fn fd_grad_hess(e: &Expr, x: &[f64], step: f64) -> Result<Taylor2, ExprError> {
    if !(step > 0.0) {
        return Err(ExprError::BadStep(step));
    }
    let n = x.len();
    let f = |shift: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in shift {
            y[i] += s;
        }
        evaluate(e, &y)
    };
    let h = step;
    let f0 = f(&[])?;
    let mut gradient = vec![0.0; n];
    let mut hessian = vec![0.0; n * n];
    for i in 0..n {
        let fp = f(&[(i, h)])?;
        let fm = f(&[(i, -h)])?;
        gradient[i] = (fp - fm) / (2.0 * h);
        hessian[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let fpp = f(&[(i, h), (j, h)])?;
            let fpm = f(&[(i, h), (j, -h)])?;
            let fmp = f(&[(i, -h), (j, h)])?;
            let fmm = f(&[(i, -h), (j, -h)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hessian[i * n + j] = v;
            hessian[j * n + i] = v;
        }
    }
    Ok(Taylor2 {
        value: f0,
        gradient,
        hessian,
    })
}
