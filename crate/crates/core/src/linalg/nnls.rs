use super::{lstsq, LinalgError, Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsResult {
    pub solution: Vec<f64>,
    /// `‖A y + b‖₂` at the solution.
    pub residual_norm: f64,
}

/// Active-set (Lawson–Hanson) least squares: minimizes `‖A y + b‖₂` with
/// `y_j ≥ 0` wherever `nonneg[j]` is set and `y_j` free otherwise.
///
/// Free columns stay in the passive set for the whole run. Subproblems are
/// solved in the minimum-norm sense, so dependent columns are fine.
pub fn nnls(a: &Matrix, b: &[f64], nonneg: &[bool]) -> Result<NnlsResult, LinalgError> {
    let (rows, k) = a.shape();
    if b.len() != rows || nonneg.len() != k {
        return Err(LinalgError::Dimension(format!(
            "A is {rows}x{k}, b has {}, mask has {}",
            b.len(),
            nonneg.len()
        )));
    }
    let target = -Vector::from_column_slice(b);
    let cap = 30 * (k + 1);
    let mut passive: Vec<bool> = nonneg.iter().map(|&nn| !nn).collect();
    let mut y = Vector::zeros(k);
    if passive.iter().any(|&p| p) {
        y = solve_passive(a, &target, &passive);
    }
    let scale = 1.0 + a.norm() * target.norm();
    let residual = |y: &Vector| (&target - a * y).norm();
    for _ in 0..cap {
        let w = a.transpose() * (&target - a * &y);
        let mut entering: Option<usize> = None;
        for j in 0..k {
            if nonneg[j] && !passive[j] && w[j] > 1e-12 * scale && entering.is_none_or(|e| w[j] > w[e]) {
                entering = Some(j);
            }
        }
        let Some(j) = entering else {
            return Ok(NnlsResult {
                residual_norm: residual(&y),
                solution: y.iter().copied().collect(),
            });
        };
        passive[j] = true;
        loop {
            let s = solve_passive(a, &target, &passive);
            let blocking: Vec<usize> = (0..k).filter(|&i| nonneg[i] && passive[i] && s[i] <= 0.0).collect();
            if blocking.is_empty() {
                y = s;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&i| {
                    let denom = y[i] - s[i];
                    if denom > 0.0 {
                        y[i] / denom
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            y += (&s - &y) * alpha;
            for i in 0..k {
                if nonneg[i] && passive[i] && y[i] <= 1e-14 * (1.0 + y.amax()) {
                    passive[i] = false;
                    y[i] = 0.0;
                }
            }
            // the entering column itself got blocked: accept the current iterate
            if !passive[j] {
                break;
            }
        }
    }
    Err(LinalgError::IterationCap {
        cap,
        best: Some(NnlsResult {
            residual_norm: residual(&y),
            solution: y.iter().copied().collect(),
        }),
    })
}

fn solve_passive(a: &Matrix, target: &Vector, passive: &[bool]) -> Vector {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let z = lstsq(&sub, target);
    let mut y = Vector::zeros(passive.len());
    for (c, &j) in cols.iter().enumerate() {
        y[j] = z[c];
    }
    y
}
