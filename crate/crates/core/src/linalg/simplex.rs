//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Meant for the handful of variables and rows that come out of constraint
//! qualification and multiplier questions; no attempt is made at sparsity.

use serde::Serialize;

use super::{LinalgError, Matrix};

/// Feasibility tolerance for phase one and status classification.
pub const LP_FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

/// Bounds on one variable; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const FREE: Bound = Bound { lower: None, upper: None };
    pub const NONNEG: Bound = Bound {
        lower: Some(0.0),
        upper: None,
    };

    pub fn new(lower: Option<f64>, upper: Option<f64>) -> Self {
        Self { lower, upper }
    }
}

/// `minimize cᵀx  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  bounds`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Matrix,
    pub b_ub: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    /// A program with `n` variables, no rows, all variables non-negative.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self {
            c,
            a_ub: Matrix::zeros(0, n),
            b_ub: vec![],
            a_eq: Matrix::zeros(0, n),
            b_eq: vec![],
            bounds: vec![Bound::NONNEG; n],
        }
    }

    pub fn with_ub(mut self, a: Matrix, b: Vec<f64>) -> Self {
        self.a_ub = a;
        self.b_ub = b;
        self
    }

    pub fn with_eq(mut self, a: Matrix, b: Vec<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Self {
        self.bounds = bounds;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status == Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
}

/// One original variable written as `offset + Σ coef·y` over standard-form
/// columns `y ≥ 0`.
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

pub fn simplex_lp(lp: &LinearProgram) -> Result<LpSolution, LinalgError> {
    let n = lp.c.len();
    let dim = |what: &str| LinalgError::Dimension(what.to_string());
    if lp.bounds.len() != n {
        return Err(dim("bounds length differs from objective length"));
    }
    if lp.a_ub.ncols() != n || lp.a_ub.nrows() != lp.b_ub.len() {
        return Err(dim("inequality block shape"));
    }
    if lp.a_eq.ncols() != n || lp.a_eq.nrows() != lp.b_eq.len() {
        return Err(dim("equality block shape"));
    }
    let infeasible = LpSolution {
        status: LpStatus::Infeasible,
        x: vec![],
        value: f64::NAN,
    };

    // Standard form columns and the extra upper-bound rows they need.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = vec![];
    for b in &lp.bounds {
        let mut col = || {
            ncols += 1;
            ncols - 1
        };
        match (b.lower, b.upper) {
            (Some(l), Some(u)) if l > u => return Ok(infeasible),
            (Some(l), u) if l > 0.0 => {
                let p = col();
                if let Some(u) = u {
                    bound_rows.push((p, u - l));
                }
                maps.push(VarMap {
                    offset: l,
                    terms: vec![(p, 1.0)],
                });
            }
            (l, Some(u)) if u < 0.0 => {
                let q = col();
                if let Some(l) = l {
                    bound_rows.push((q, u - l));
                }
                maps.push(VarMap {
                    offset: u,
                    terms: vec![(q, -1.0)],
                });
            }
            (l, u) => {
                let mut terms = vec![];
                if u.is_none_or(|u| u > 0.0) {
                    let p = col();
                    if let Some(u) = u {
                        bound_rows.push((p, u));
                    }
                    terms.push((p, 1.0));
                }
                if l.is_none_or(|l| l < 0.0) {
                    let q = col();
                    if let Some(l) = l {
                        bound_rows.push((q, -l));
                    }
                    terms.push((q, -1.0));
                }
                maps.push(VarMap { offset: 0.0, terms });
            }
        }
    }

    // Rows: original ≤ rows, bound rows (both get slacks), then equalities.
    let n_ub = lp.a_ub.nrows() + bound_rows.len();
    let n_eq = lp.a_eq.nrows();
    let m = n_ub + n_eq;
    let n_struct = ncols + n_ub; // structural + slack columns
    let total = n_struct + m; // + artificials
    let mut t = vec![vec![0.0; total + 1]; m];
    let mut cost = vec![0.0; n_struct];
    for (j, vm) in maps.iter().enumerate() {
        for &(k, s) in &vm.terms {
            cost[k] += lp.c[j] * s;
        }
    }
    let fill_row = |row: &mut Vec<f64>, coeffs: &[f64], rhs: f64| {
        let mut r = rhs;
        for (j, vm) in maps.iter().enumerate() {
            r -= coeffs[j] * vm.offset;
            for &(k, s) in &vm.terms {
                row[k] += coeffs[j] * s;
            }
        }
        row[total] = r;
    };
    for i in 0..lp.a_ub.nrows() {
        let coeffs: Vec<f64> = lp.a_ub.row(i).iter().copied().collect();
        fill_row(&mut t[i], &coeffs, lp.b_ub[i]);
        t[i][ncols + i] = 1.0;
    }
    for (k, &(col, ub)) in bound_rows.iter().enumerate() {
        let i = lp.a_ub.nrows() + k;
        t[i][col] = 1.0;
        t[i][ncols + i] = 1.0;
        t[i][total] = ub;
    }
    for i in 0..n_eq {
        let coeffs: Vec<f64> = lp.a_eq.row(i).iter().copied().collect();
        fill_row(&mut t[n_ub + i], &coeffs, lp.b_eq[i]);
    }
    for (i, row) in t.iter_mut().enumerate() {
        if row[total] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        row[n_struct + i] = 1.0;
    }
    let mut tab = Tableau {
        rows: t,
        basis: (n_struct..total).collect(),
        obj: vec![0.0; total + 1],
        allowed: total,
    };

    // Phase one: minimize the sum of artificials.
    for j in 0..n_struct {
        tab.obj[j] = -tab.rows.iter().map(|r| r[j]).sum::<f64>();
    }
    tab.obj[total] = -tab.rows.iter().map(|r| r[total]).sum::<f64>();
    tab.allowed = n_struct;
    tab.run()?;
    let scale = 1.0 + tab.rows.iter().map(|r| r[total].abs()).fold(0.0, f64::max);
    if -tab.obj[total] > LP_FEAS_TOL * scale {
        return Ok(infeasible);
    }
    // Drive remaining artificials out, dropping redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n_struct {
            match (0..n_struct).find(|&j| tab.rows[i][j].abs() > LP_FEAS_TOL) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase two.
    tab.obj = vec![0.0; total + 1];
    tab.obj[..n_struct].copy_from_slice(&cost);
    for (r, &b) in tab.rows.iter().zip(&tab.basis) {
        let cb = if b < n_struct { cost[b] } else { 0.0 };
        if cb != 0.0 {
            for (o, v) in tab.obj.iter_mut().zip(r) {
                *o -= cb * v;
            }
        }
    }
    if !tab.run()? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![],
            value: f64::NEG_INFINITY,
        });
    }
    let mut y = vec![0.0; n_struct];
    for (r, &b) in tab.rows.iter().zip(&tab.basis) {
        if b < n_struct {
            y[b] = r[total];
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|vm| vm.offset + vm.terms.iter().map(|&(k, s)| s * y[k]).sum::<f64>())
        .collect();
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
    })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs; the last entry is minus the objective value.
    obj: Vec<f64>,
    /// Columns `>= allowed` may not enter the basis.
    allowed: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            self.obj.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        }
        self.basis[r] = c;
    }

    /// Runs Bland pivots to optimality. Returns `false` when unbounded.
    fn run(&mut self) -> Result<bool, LinalgError> {
        let rhs = self.obj.len() - 1;
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..self.allowed).find(|&j| self.obj[j] < -LP_FEAS_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[rhs] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= PIVOT_TOL * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
        Err(LinalgError::IterationCap {
            cap: MAX_PIVOTS,
            best: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mfcq_direction_for_two_equal_gradients() {
        // variables (d1, d2, s): maximize s, -2 d2 + s <= 0 twice, |d| <= 1, s <= 1
        let a = Matrix::from_row_slice(2, 3, &[0.0, -2.0, 1.0, 0.0, -2.0, 1.0]);
        let lp = LinearProgram::new(vec![0.0, 0.0, -1.0])
            .with_ub(a, vec![0.0, 0.0])
            .with_bounds(vec![
                Bound::new(Some(-1.0), Some(1.0)),
                Bound::new(Some(-1.0), Some(1.0)),
                Bound::new(None, Some(1.0)),
            ]);
        let sol = simplex_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-12);
        assert!((sol.x[2] - 1.0).abs() < 1e-12);
        assert!(sol.x[1] >= 0.5 - 1e-12);
    }

    #[test]
    fn infeasible() {
        // x <= -1 with x >= 0
        let lp = LinearProgram::new(vec![1.0]).with_ub(Matrix::from_element(1, 1, 1.0), vec![-1.0]);
        assert_eq!(simplex_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let lp = LinearProgram::new(vec![-1.0]);
        assert_eq!(simplex_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_with_free_and_shifted_variables() {
        // min x + 2y  s.t. x + y = 3, x in [1, 2], y free -> x = 2, y = 1, value 4
        let lp = LinearProgram::new(vec![1.0, 2.0])
            .with_eq(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), vec![3.0])
            .with_bounds(vec![Bound::new(Some(1.0), Some(2.0)), Bound::FREE]);
        let sol = simplex_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!((sol.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        // x + y = 1 stated twice; minimize x - y over x, y >= 0
        let lp = LinearProgram::new(vec![1.0, -1.0]).with_eq(Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]), vec![1.0, 2.0]);
        let sol = simplex_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_upper_bound_and_crossed_bounds() {
        let lp = LinearProgram::new(vec![1.0]).with_bounds(vec![Bound::new(Some(-5.0), Some(-2.0))]);
        let sol = simplex_lp(&lp).unwrap();
        assert!((sol.x[0] + 5.0).abs() < 1e-12);
        let lp = LinearProgram::new(vec![1.0]).with_bounds(vec![Bound::new(Some(1.0), Some(0.0))]);
        assert_eq!(simplex_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch() {
        let lp = LinearProgram::new(vec![1.0]).with_ub(Matrix::zeros(1, 2), vec![0.0]);
        assert!(matches!(simplex_lp(&lp), Err(LinalgError::Dimension(_))));
    }
}
