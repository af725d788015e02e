//! Problem container, problem files, and evaluation at a candidate point.
//!
//! ```text
//! minimize f(x)  subject to  g(x) ≤ 0,  h(x) = 0,   x ∈ ℝⁿ
//! ```
//!
//! Problem files are line oriented; `#` starts a comment:
//!
//! ```text
//! vars 2
//! objective x2
//! ineq x1^2 + (x2-1)^2 - 1
//! eq   x1 - x2
//! point 0 0
//! ```

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{self, Expr, ExprError, Taylor2};
use crate::linalg::{Matrix, Vector};

/// Default threshold on `|g_i(x)|` for counting a constraint as active.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-8;

/// Names one of the problem functions. Indices are zero-based internally and
/// printed one-based (`g1`, `h2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionId {
    Objective,
    Ineq(usize),
    Eq(usize),
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionId::Objective => write!(f, "f"),
            FunctionId::Ineq(i) => write!(f, "g{}", i + 1),
            FunctionId::Eq(j) => write!(f, "h{}", j + 1),
        }
    }
}

impl Serialize for FunctionId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expression { line: usize, source: ExprError },
    #[error("line {line}: duplicate `{keyword}` line")]
    Duplicate { line: usize, keyword: &'static str },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("point has {got} coordinates, problem has {expected} variables")]
    PointDimension { expected: usize, got: usize },
    #[error("{function}: {source}")]
    Evaluation { function: FunctionId, source: ExprError },
    #[error("expression references x{index} but the problem has {n} variables")]
    VariableOutOfRange { index: usize, n: usize },
    #[error("multiplier vector has length {got}, expected {expected}")]
    MultiplierLength { expected: usize, got: usize },
    #[error("multiplier of {function} is negative ({value:e})")]
    NegativeMultiplier { function: FunctionId, value: f64 },
    #[error("multiplier of inactive {function} is nonzero ({value:e})")]
    InactiveMultiplier { function: FunctionId, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub n: usize,
    pub objective: Expr,
    pub ineq: Vec<Expr>,
    pub eq: Vec<Expr>,
    pub point: Option<Vec<f64>>,
}

impl Problem {
    pub fn new(n: usize, objective: Expr, ineq: Vec<Expr>, eq: Vec<Expr>) -> Result<Self, ModelError> {
        for e in std::iter::once(&objective).chain(&ineq).chain(&eq) {
            if let Some(i) = e.max_var().filter(|&i| i >= n) {
                return Err(ModelError::VariableOutOfRange { index: i + 1, n });
            }
        }
        Ok(Self {
            n,
            objective,
            ineq,
            eq,
            point: None,
        })
    }

    /// Builds a problem from expression sources; handy in tests and examples.
    pub fn from_sources(n: usize, objective: &str, ineq: &[&str], eq: &[&str]) -> Result<Self, ModelError> {
        let p = |s: &str| expr::parse(s, n).map_err(|source| ModelError::Expression { line: 0, source });
        Self::new(
            n,
            p(objective)?,
            ineq.iter().map(|s| p(s)).collect::<Result<_, _>>()?,
            eq.iter().map(|s| p(s)).collect::<Result<_, _>>()?,
        )
    }

    pub fn with_point(mut self, x: Vec<f64>) -> Result<Self, ModelError> {
        if x.len() != self.n {
            return Err(ModelError::PointDimension {
                expected: self.n,
                got: x.len(),
            });
        }
        self.point = Some(x);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.ineq.len()
    }

    pub fn p(&self) -> usize {
        self.eq.len()
    }

    pub fn function(&self, id: FunctionId) -> &Expr {
        match id {
            FunctionId::Objective => &self.objective,
            FunctionId::Ineq(i) => &self.ineq[i],
            FunctionId::Eq(j) => &self.eq[j],
        }
    }

    /// Problem-file text for this problem; [`load_problem`] reads it back.
    pub fn to_file_text(&self) -> String {
        let mut s = format!("vars {}\nobjective {}\n", self.n, self.objective);
        for g in &self.ineq {
            s += &format!("ineq {g}\n");
        }
        for h in &self.eq {
            s += &format!("eq {h}\n");
        }
        if let Some(x) = &self.point {
            let coords: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            s += &format!("point {}\n", coords.join(" "));
        }
        s
    }
}

/// Parses the line-oriented problem format.
pub fn load_problem(text: &str) -> Result<Problem, ModelError> {
    let lines: Vec<(usize, &str, &str)> = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                return None;
            }
            let (kw, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
            Some((i + 1, kw, rest.trim()))
        })
        .collect();

    let mut n = None;
    for &(line, kw, rest) in &lines {
        if kw == "vars" {
            if n.is_some() {
                return Err(ModelError::Duplicate { line, keyword: "vars" });
            }
            let v: usize = rest.parse().map_err(|_| ModelError::Syntax {
                line,
                message: format!("`vars` needs a positive integer, got `{rest}`"),
            })?;
            if v == 0 {
                return Err(ModelError::Syntax {
                    line,
                    message: "`vars` must be at least 1".into(),
                });
            }
            n = Some(v);
        }
    }
    let n = n.ok_or(ModelError::Missing("vars"))?;

    let parse = |line: usize, src: &str| expr::parse(src, n).map_err(|source| ModelError::Expression { line, source });
    let mut objective = None;
    let mut point = None;
    let (mut ineq, mut eq) = (vec![], vec![]);
    for &(line, kw, rest) in &lines {
        match kw {
            "vars" => {}
            "objective" => {
                if objective.is_some() {
                    return Err(ModelError::Duplicate {
                        line,
                        keyword: "objective",
                    });
                }
                objective = Some(parse(line, rest)?);
            }
            "ineq" => ineq.push(parse(line, rest)?),
            "eq" => eq.push(parse(line, rest)?),
            "point" => {
                if point.is_some() {
                    return Err(ModelError::Duplicate { line, keyword: "point" });
                }
                let coords = rest
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or(ModelError::Syntax {
                        line,
                        message: "point coordinates must be finite reals".into(),
                    })?;
                if coords.len() != n {
                    return Err(ModelError::PointDimension {
                        expected: n,
                        got: coords.len(),
                    });
                }
                point = Some(coords);
            }
            other => {
                return Err(ModelError::Syntax {
                    line,
                    message: format!("unknown keyword `{other}`"),
                })
            }
        }
    }
    let objective = objective.ok_or(ModelError::Missing("objective"))?;
    let mut p = Problem::new(n, objective, ineq, eq)?;
    p.point = point;
    Ok(p)
}

/// Everything first- and second-order about the problem functions at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub x: Vec<f64>,
    pub objective: Taylor2,
    pub ineq: Vec<Taylor2>,
    pub eq: Vec<Taylor2>,
    /// `I_g(x)`: zero-based indices with `|g_i(x)| ≤ tol_active`, ascending.
    pub active: Vec<usize>,
    pub tol_active: f64,
}

impl PointData {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.ineq.len()
    }

    pub fn p(&self) -> usize {
        self.eq.len()
    }

    pub fn taylor(&self, id: FunctionId) -> &Taylor2 {
        match id {
            FunctionId::Objective => &self.objective,
            FunctionId::Ineq(i) => &self.ineq[i],
            FunctionId::Eq(j) => &self.eq[j],
        }
    }

    pub fn gradient(&self, id: FunctionId) -> &[f64] {
        &self.taylor(id).gradient
    }

    pub fn hessian(&self, id: FunctionId) -> Matrix {
        let n = self.n();
        Matrix::from_row_slice(n, n, &self.taylor(id).hessian)
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.binary_search(&i).is_ok()
    }

    /// Gradients of the named functions stacked as rows.
    pub fn jacobian(&self, ids: &[FunctionId]) -> Matrix {
        Matrix::from_fn(ids.len(), self.n(), |r, c| self.gradient(ids[r])[c])
    }

    /// Active inequalities followed by all equalities.
    pub fn active_ids(&self) -> Vec<FunctionId> {
        self.active
            .iter()
            .map(|&i| FunctionId::Ineq(i))
            .chain((0..self.p()).map(FunctionId::Eq))
            .collect()
    }

    /// `∇ₓℓ(x, μ, λ) = ∇f + Σ μ_i ∇g_i + Σ λ_j ∇h_j` (full-length μ and λ).
    pub fn lagrangian_gradient(&self, mu: &[f64], lambda: &[f64]) -> Vector {
        let mut g = Vector::from_column_slice(&self.objective.gradient);
        for (t, &w) in self.ineq.iter().zip(mu).chain(self.eq.iter().zip(lambda)) {
            if w != 0.0 {
                g.iter_mut().zip(&t.gradient).for_each(|(a, b)| *a += w * b);
            }
        }
        g
    }

    /// `Σ w_k ∇²(function_k)`, exactly symmetric.
    pub fn weighted_hessian(&self, base: Option<FunctionId>, mu: &[f64], lambda: &[f64]) -> Matrix {
        let n = self.n();
        let mut h = match base {
            Some(id) => self.hessian(id),
            None => Matrix::zeros(n, n),
        };
        for (t, &w) in self.ineq.iter().zip(mu).chain(self.eq.iter().zip(lambda)) {
            if w != 0.0 {
                h.iter_mut().zip(&t.hessian).for_each(|(a, b)| *a += w * b);
            }
        }
        // row-major Taylor storage is symmetric, so is the sum
        h
    }
}

/// Evaluates all problem functions with gradients and Hessians at `x`.
pub fn evaluate_point(p: &Problem, x: &[f64], tol_active: f64) -> Result<PointData, ModelError> {
    if x.len() != p.n {
        return Err(ModelError::PointDimension {
            expected: p.n,
            got: x.len(),
        });
    }
    let eval = |id: FunctionId| expr::grad_hess(p.function(id), x).map_err(|source| ModelError::Evaluation { function: id, source });
    let objective = eval(FunctionId::Objective)?;
    let ineq = (0..p.m()).map(|i| eval(FunctionId::Ineq(i))).collect::<Result<Vec<_>, _>>()?;
    let eq = (0..p.p()).map(|j| eval(FunctionId::Eq(j))).collect::<Result<Vec<_>, _>>()?;
    let active = ineq
        .iter()
        .enumerate()
        .filter(|(_, t)| t.value.abs() <= tol_active)
        .map(|(i, _)| i)
        .collect();
    Ok(PointData {
        x: x.to_vec(),
        objective,
        ineq,
        eq,
        active,
        tol_active,
    })
}

/// Validates `(μ, λ)` for use in a Lagrangian at `pd`.
pub fn check_multiplier_shape(pd: &PointData, mu: &[f64], lambda: &[f64]) -> Result<(), ModelError> {
    if mu.len() != pd.m() {
        return Err(ModelError::MultiplierLength {
            expected: pd.m(),
            got: mu.len(),
        });
    }
    if lambda.len() != pd.p() {
        return Err(ModelError::MultiplierLength {
            expected: pd.p(),
            got: lambda.len(),
        });
    }
    for (i, &v) in mu.iter().enumerate() {
        if v < -1e-12 {
            return Err(ModelError::NegativeMultiplier {
                function: FunctionId::Ineq(i),
                value: v,
            });
        }
        if !pd.is_active(i) && v.abs() > 1e-12 {
            return Err(ModelError::InactiveMultiplier {
                function: FunctionId::Ineq(i),
                value: v,
            });
        }
    }
    Ok(())
}

/// `∇²ₓₓℓ(x, μ, λ) = ∇²f + Σ μ_i ∇²g_i + Σ λ_j ∇²h_j`.
pub fn lagrangian_hessian(pd: &PointData, mu: &[f64], lambda: &[f64]) -> Result<Matrix, ModelError> {
    check_multiplier_shape(pd, mu, lambda)?;
    Ok(pd.weighted_hessian(Some(FunctionId::Objective), mu, lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub max_ineq_violation: f64,
    pub max_eq_violation: f64,
    pub tol: f64,
    pub feasible: bool,
}

pub fn feasibility(p: &Problem, x: &[f64], tol: f64) -> Result<FeasibilityReport, ModelError> {
    if x.len() != p.n {
        return Err(ModelError::PointDimension {
            expected: p.n,
            got: x.len(),
        });
    }
    let value = |id: FunctionId| expr::evaluate(p.function(id), x).map_err(|source| ModelError::Evaluation { function: id, source });
    let mut max_ineq_violation: f64 = 0.0;
    for i in 0..p.m() {
        max_ineq_violation = max_ineq_violation.max(value(FunctionId::Ineq(i))?.max(0.0));
    }
    let mut max_eq_violation: f64 = 0.0;
    for j in 0..p.p() {
        max_eq_violation = max_eq_violation.max(value(FunctionId::Eq(j))?.abs());
    }
    Ok(FeasibilityReport {
        max_ineq_violation,
        max_eq_violation,
        tol,
        feasible: max_ineq_violation <= tol && max_eq_violation <= tol,
    })
}
