use std::fmt::Display;

use super::{LinalgError, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `‖F(x) − target‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vector,
    /// Number of Newton steps taken.
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `F(x) = target` for a square map by full Newton steps, halving a
/// step whenever it would increase the residual.
///
/// `map` returns `F(x)` together with its Jacobian.
pub fn newton_solve<F, E>(mut map: F, x0: &Vector, target: &Vector, opts: &NewtonOptions) -> Result<NewtonSolution, LinalgError>
where
    F: FnMut(&Vector) -> Result<(Vector, Matrix), E>,
    E: Display,
{
    let eval_err = |iteration: usize, e: E| LinalgError::Evaluation {
        iteration,
        message: e.to_string(),
    };
    let mut x = x0.clone();
    let (fx, mut jac) = map(&x).map_err(|e| eval_err(0, e))?;
    if fx.len() != target.len() || jac.shape() != (target.len(), x.len()) || x.len() != target.len() {
        return Err(LinalgError::Dimension("Newton map must be square and match the target".into()));
    }
    let mut res = &fx - target;
    let mut res_norm = res.amax();
    for iteration in 0..=opts.max_iter {
        if res_norm <= opts.tol {
            return Ok(NewtonSolution {
                x,
                iterations: iteration,
                residual: res_norm,
            });
        }
        if iteration == opts.max_iter {
            break;
        }
        let step = solve_square(&jac, &(-&res)).ok_or(LinalgError::SingularJacobian { iteration })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &step * scale;
            if let Ok((ft, jt)) = map(&trial) {
                let rt = &ft - target;
                let rn = rt.amax();
                if rn.is_finite() && rn <= res_norm {
                    accepted = Some((trial, jt, rt, rn));
                    break;
                }
            }
            scale *= 0.5;
        }
        // no decrease within the halving budget: take the shortest step anyway
        let (nx, nj, nr, nn) = match accepted {
            Some(a) => a,
            None => {
                let trial = &x + &step * scale;
                let (ft, jt) = map(&trial).map_err(|e| eval_err(iteration + 1, e))?;
                let rt = &ft - target;
                let rn = rt.amax();
                (trial, jt, rt, rn)
            }
        };
        x = nx;
        jac = nj;
        res = nr;
        res_norm = nn;
    }
    Err(LinalgError::NoConvergence {
        iterations: opts.max_iter,
        residual: res_norm,
    })
}

/// LU solve that treats a numerically singular matrix as no solution.
fn solve_square(a: &Matrix, b: &Vector) -> Option<Vector> {
    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal().abs();
    let (dmax, dmin) = (diag.max(), diag.min());
    if !(dmax > 0.0) || dmin <= 1e-14 * dmax {
        return None;
    }
    lu.solve(b)
}
