//! Feasible arcs through a point along a linearized-cone direction.
//!
//! For a direction `d̄` the constraints that must stay at equality along the
//! arc are `σ(x) = (g_J(x), h(x))`, `J` the inequalities active at `x̄` and
//! orthogonal to `d̄`. A maximal independent part `ξ` of `σ` is completed to a
//! local diffeomorphism `φ(x) = (ξ(x), x_K)` and the arc is
//!
//! ```text
//! ζ(t) = φ⁻¹(A·t·d̄ + z̄),   A = φ′(x̄),   z̄ = φ(x̄)
//! ```
//!
//! with each point found by a warm-started Newton solve.

use serde::Serialize;
use thiserror::Error;

use crate::cones::{linearized_cone, membership};
use crate::expr;
use crate::linalg::{newton_solve, numerical_rank, pivot_select, LinalgError, Matrix, NewtonOptions, RankInfo, Vector};
use crate::model::{FunctionId, ModelError, PointData, Problem};

pub const DEFAULT_DIR_TOL: f64 = 1e-8;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_SAMPLES: usize = 41;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-7;
/// How many times `δ` is halved after a failed trace before truncating.
pub const MAX_DELTA_HALVINGS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArcError {
    #[error("direction is not in the linearized cone (worst row {violation:e})")]
    NotInLinearizedCone { violation: f64 },
    #[error("direction has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("σ′(x̄) has numerical rank 0 but is not zero (largest singular value {largest:e})")]
    Degenerate { largest: f64 },
    #[error("sample grid needs an odd count ≥ 5 and δ > 0 (got {samples}, {delta})")]
    BadGrid { samples: usize, delta: f64 },
    #[error("Newton solve failed at t = 0: {0}")]
    Origin(LinalgError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `σ(x) = (g_J(x), h(x))` for one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaMap {
    pub direction: Vec<f64>,
    /// `J_d`, zero-based inequality indices.
    pub j_d: Vec<usize>,
    pub rows: Vec<FunctionId>,
    pub tol_dir: f64,
}

pub fn build_sigma(pd: &PointData, d: &[f64], tol_dir: f64) -> Result<SigmaMap, ArcError> {
    if d.len() != pd.n() {
        return Err(ArcError::Dimension {
            expected: pd.n(),
            got: d.len(),
        });
    }
    let cone = linearized_cone(pd);
    if !membership(&cone, d, tol_dir) {
        let dv = Vector::from_column_slice(d);
        let eq = (&cone.a_eq * &dv).amax();
        let ineq = if cone.a_in.nrows() == 0 { 0.0 } else { (&cone.a_in * &dv).max() };
        return Err(ArcError::NotInLinearizedCone { violation: eq.max(ineq) });
    }
    let scale = tol_dir * (1.0 + Vector::from_column_slice(d).norm());
    let j_d: Vec<usize> = pd
        .active
        .iter()
        .copied()
        .filter(|&j| dot(pd.gradient(FunctionId::Ineq(j)), d).abs() <= scale)
        .collect();
    let rows = j_d
        .iter()
        .map(|&j| FunctionId::Ineq(j))
        .chain((0..pd.p()).map(FunctionId::Eq))
        .collect();
    Ok(SigmaMap {
        direction: d.to_vec(),
        j_d,
        rows,
        tol_dir,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `φ(x) = (ξ(x), x_K)` around `x̄`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiMap {
    pub x_bar: Vec<f64>,
    pub xi_rows: Vec<FunctionId>,
    /// Variables solved for by `ξ` (zero-based), `|J| = r`.
    pub j: Vec<usize>,
    /// Remaining variables, carried through unchanged.
    pub k: Vec<usize>,
    pub z_bar: Vec<f64>,
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub a: Matrix,
    pub sigma_rank: RankInfo,
    /// Condition number of `∂_J ξ(x̄)`; 1 when `ξ` is empty.
    pub condition: f64,
}

impl PhiMap {
    pub fn is_identity(&self) -> bool {
        self.xi_rows.is_empty()
    }

    /// `φ(x)` and `φ′(x)`.
    pub fn eval(&self, p: &Problem, x: &Vector) -> Result<(Vector, Matrix), ModelError> {
        let n = x.len();
        let r = self.xi_rows.len();
        let mut value = Vector::zeros(n);
        let mut jac = Matrix::zeros(n, n);
        for (row, &id) in self.xi_rows.iter().enumerate() {
            let t = expr::grad_hess(p.function(id), x.as_slice()).map_err(|source| ModelError::Evaluation { function: id, source })?;
            value[row] = t.value;
            for c in 0..n {
                jac[(row, c)] = t.gradient[c];
            }
        }
        for (row, &kk) in self.k.iter().enumerate() {
            value[r + row] = x[kk];
            jac[(r + row, kk)] = 1.0;
        }
        Ok((value, jac))
    }
}

pub fn construct_phi(pd: &PointData, s: &SigmaMap, tol_rank: f64) -> Result<PhiMap, ArcError> {
    let n = pd.n();
    let sigma_jac = pd.jacobian(&s.rows);
    let sigma_rank = numerical_rank(&sigma_jac, tol_rank)?;
    let r = sigma_rank.rank;
    if r == 0 && sigma_jac.amax() > 0.0 {
        return Err(ArcError::Degenerate {
            largest: sigma_rank.singular_values[0],
        });
    }
    let (xi_rows, j) = if r == 0 {
        (vec![], vec![])
    } else {
        let picked = pivot_select(&sigma_jac.transpose(), r, tol_rank)?;
        let xi_rows: Vec<FunctionId> = picked.iter().map(|&i| s.rows[i]).collect();
        let j = pivot_select(&pd.jacobian(&xi_rows), r, tol_rank)?;
        (xi_rows, j)
    };
    let k: Vec<usize> = (0..n).filter(|c| !j.contains(c)).collect();
    let xi_jac = pd.jacobian(&xi_rows);
    let mut a = Matrix::zeros(n, n);
    let mut z_bar = Vec::with_capacity(n);
    for (row, &id) in xi_rows.iter().enumerate() {
        a.set_row(row, &xi_jac.row(row));
        z_bar.push(pd.taylor(id).value);
    }
    for (row, &kk) in k.iter().enumerate() {
        a[(r + row, kk)] = 1.0;
        z_bar.push(pd.x[kk]);
    }
    let condition = if r == 0 {
        1.0
    } else {
        let block = xi_jac.select_columns(&j);
        let sv = block.singular_values();
        sv.max() / sv.min()
    };
    Ok(PhiMap {
        x_bar: pd.x.clone(),
        xi_rows,
        j,
        k,
        z_bar,
        a,
        sigma_rank,
        condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcResult {
    pub direction: Vec<f64>,
    pub delta_requested: f64,
    /// The half-width actually traced, after any halving.
    pub delta: f64,
    /// Ascending; contains 0 and, unless truncated, `±δ`.
    pub t: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub newton_iterations: Vec<usize>,
    pub newton_residuals: Vec<f64>,
    /// Richardson-extrapolated central difference at 0.
    pub derivative: Option<Vec<f64>>,
    /// Plain central difference on the innermost pair.
    pub derivative_central: Option<Vec<f64>>,
    pub truncated: bool,
    pub note: Option<String>,
}

impl ArcResult {
    pub fn zero_index(&self) -> usize {
        self.t.iter().position(|&t| t == 0.0).expect("grid contains 0")
    }
}

/// One point `ζ(t)`, Newton-solved from `warm`.
pub fn zeta_at(
    p: &Problem,
    pm: &PhiMap,
    d: &[f64],
    t: f64,
    warm: &Vector,
    opts: &NewtonOptions,
) -> Result<(Vector, usize, f64), LinalgError> {
    let td = Vector::from_column_slice(d) * t;
    let target = &pm.a * td + Vector::from_column_slice(&pm.z_bar);
    let opts = NewtonOptions {
        tol: opts.tol * (1.0 + target.amax()),
        ..*opts
    };
    let sol = newton_solve(|x: &Vector| pm.eval(p, x), warm, &target, &opts)?;
    Ok((sol.x, sol.iterations, sol.residual))
}

/// `(ζ(h) − ζ(−h)) / 2h` with both points solved from `x̄`.
pub fn central_difference(p: &Problem, pm: &PhiMap, d: &[f64], h: f64, opts: &NewtonOptions) -> Result<Vec<f64>, LinalgError> {
    let x_bar = Vector::from_column_slice(&pm.x_bar);
    let (plus, _, _) = zeta_at(p, pm, d, h, &x_bar, opts)?;
    let (minus, _, _) = zeta_at(p, pm, d, -h, &x_bar, opts)?;
    Ok(((plus - minus) / (2.0 * h)).iter().copied().collect())
}

struct Sample {
    t: f64,
    x: Vector,
    iterations: usize,
    residual: f64,
}

/// Traces one half of the grid outward from 0. Returns the convergent samples
/// and whether the half stopped early.
fn trace_half(p: &Problem, pm: &PhiMap, d: &[f64], ts: &[f64], opts: &NewtonOptions) -> (Vec<Sample>, bool) {
    let mut warm = Vector::from_column_slice(&pm.x_bar);
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        match zeta_at(p, pm, d, t, &warm, opts) {
            Ok((x, iterations, residual)) => {
                warm = x.clone();
                out.push(Sample {
                    t,
                    x,
                    iterations,
                    residual,
                });
            }
            Err(_) => return (out, true),
        }
    }
    (out, false)
}

/// Samples `ζ` on the symmetric grid `t_k = δ(k − c)/c`, `c = (samples − 1)/2`.
///
/// Each sample is warm-started from its inner neighbour. If a Newton solve
/// fails, `δ` is halved (at most [`MAX_DELTA_HALVINGS`] times); after that the
/// arc keeps the convergent samples around 0 and is flagged truncated.
pub fn trace_arc(p: &Problem, pm: &PhiMap, d: &[f64], delta: f64, samples: usize, opts: &NewtonOptions) -> Result<ArcResult, ArcError> {
    if samples < 5 || samples.is_multiple_of(2) || !(delta > 0.0) || !delta.is_finite() {
        return Err(ArcError::BadGrid { samples, delta });
    }
    if d.len() != pm.x_bar.len() {
        return Err(ArcError::Dimension {
            expected: pm.x_bar.len(),
            got: d.len(),
        });
    }
    let c = (samples - 1) / 2;
    let x_bar = Vector::from_column_slice(&pm.x_bar);
    let (origin, it0, res0) = zeta_at(p, pm, d, 0.0, &x_bar, opts).map_err(ArcError::Origin)?;

    let mut current = delta;
    let mut halvings = 0;
    let (plus, minus, failed) = loop {
        let grid = |sign: f64| -> Vec<f64> { (1..=c).map(|k| sign * current * k as f64 / c as f64).collect() };
        let (plus, fp) = trace_half(p, pm, d, &grid(1.0), opts);
        let (minus, fm) = trace_half(p, pm, d, &grid(-1.0), opts);
        if !(fp || fm) || halvings == MAX_DELTA_HALVINGS {
            break (plus, minus, fp || fm);
        }
        current *= 0.5;
        halvings += 1;
    };

    let mut all: Vec<Sample> = minus.into_iter().rev().collect();
    all.push(Sample {
        t: 0.0,
        x: origin,
        iterations: it0,
        residual: res0,
    });
    all.extend(plus);

    let eval = |x: &Vector, ids: &mut dyn Iterator<Item = FunctionId>| -> Result<Vec<f64>, ModelError> {
        ids.map(|id| expr::evaluate(p.function(id), x.as_slice()).map_err(|source| ModelError::Evaluation { function: id, source }))
            .collect()
    };
    let mut g = Vec::with_capacity(all.len());
    let mut h = Vec::with_capacity(all.len());
    for s in &all {
        g.push(eval(&s.x, &mut (0..p.m()).map(FunctionId::Ineq))?);
        h.push(eval(&s.x, &mut (0..p.p()).map(FunctionId::Eq))?);
    }

    let zero = all.iter().position(|s| s.t == 0.0).expect("origin sample");
    let step = current / c as f64;
    let diff = |k: usize| -> Option<Vector> {
        if zero >= k && zero + k < all.len() {
            Some((&all[zero + k].x - &all[zero - k].x) / (2.0 * k as f64 * step))
        } else {
            None
        }
    };
    let central = diff(1);
    let richardson = match (&central, diff(2)) {
        (Some(d1), Some(d2)) => Some((d1 * 4.0 - d2) / 3.0),
        (Some(d1), None) => Some(d1.clone()),
        _ => None,
    };

    let mut notes = vec![];
    if halvings > 0 {
        notes.push(format!("δ halved {halvings} time(s) after Newton failures"));
    }
    if failed {
        notes.push("arc truncated at the last convergent samples".to_string());
    }
    if pm.is_identity() {
        notes.push("σ is empty or has zero Jacobian: φ is the identity and the arc is a straight line".to_string());
    }
    let as_vec = |v: &Vector| v.iter().copied().collect::<Vec<f64>>();
    Ok(ArcResult {
        direction: d.to_vec(),
        delta_requested: delta,
        delta: current,
        t: all.iter().map(|s| s.t).collect(),
        points: all.iter().map(|s| as_vec(&s.x)).collect(),
        g,
        h,
        newton_iterations: all.iter().map(|s| s.iterations).collect(),
        newton_residuals: all.iter().map(|s| s.residual).collect(),
        derivative: richardson.as_ref().map(as_vec),
        derivative_central: central.as_ref().map(as_vec),
        truncated: failed,
        note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub pass: bool,
    /// Largest offending value (0 when nothing is checked).
    pub worst: f64,
    pub worst_t: Option<f64>,
    pub worst_function: Option<FunctionId>,
}

impl PropertyCheck {
    fn scan<'a>(tol: f64, items: impl Iterator<Item = (f64, FunctionId, f64)> + 'a) -> Self {
        let mut out = PropertyCheck {
            pass: true,
            worst: 0.0,
            worst_t: None,
            worst_function: None,
        };
        for (t, id, v) in items {
            if out.worst_t.is_none() || v > out.worst {
                out.worst = v;
                out.worst_t = Some(t);
                out.worst_function = Some(id);
            }
        }
        out.pass = out.worst <= tol;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartCheck {
    pub pass: bool,
    /// `‖ζ(0) − x̄‖₂`.
    pub position_error: f64,
    /// `‖ζ′(0) − d̄‖₂`, absent when too few samples converged.
    pub derivative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcProperties {
    pub tol: f64,
    /// `ζ(0) = x̄`, `ζ′(0) = d̄` (derivative to `√tol`).
    pub arc1: StartCheck,
    /// `|g_j(ζ(t))|` for `j ∈ J_d`, all `t`.
    pub arc2: PropertyCheck,
    /// `g_i(ζ(t))` for inactive `i`, all `t`.
    pub arc3: PropertyCheck,
    /// `g_j(ζ(t))` for `j ∈ I_g \ J_d`, `t ≥ 0`.
    pub arc4: PropertyCheck,
    /// `|h(ζ(t))|`, all `t`.
    pub arc5: PropertyCheck,
    /// `ζ(t)` feasible for `t ≥ 0`.
    pub feasible_forward: PropertyCheck,
    pub all_pass: bool,
}

/// Checks the arc properties on the stored samples.
pub fn verify_arc(ar: &ArcResult, pd: &PointData, s: &SigmaMap, tol: f64) -> ArcProperties {
    let zero = ar.zero_index();
    let norm = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let position_error = norm(&ar.points[zero], &pd.x);
    let derivative_error = ar.derivative.as_ref().map(|dz| norm(dz, &ar.direction));
    let arc1 = StartCheck {
        pass: position_error <= tol && derivative_error.is_some_and(|e| e <= tol.sqrt()),
        position_error,
        derivative_error,
    };

    let samples = || ar.t.iter().enumerate();
    let in_j = |i: usize| s.j_d.contains(&i);
    let arc2 = PropertyCheck::scan(
        tol,
        samples().flat_map(|(k, &t)| s.j_d.iter().map(move |&j| (t, FunctionId::Ineq(j), ar.g[k][j].abs()))),
    );
    let inactive: Vec<usize> = (0..pd.m()).filter(|&i| !pd.is_active(i)).collect();
    let arc3 = PropertyCheck::scan(
        tol,
        samples().flat_map(|(k, &t)| inactive.iter().map(move |&i| (t, FunctionId::Ineq(i), ar.g[k][i]))),
    );
    let loose: Vec<usize> = pd.active.iter().copied().filter(|&j| !in_j(j)).collect();
    let arc4 = PropertyCheck::scan(
        tol,
        samples()
            .filter(|(_, &t)| t >= 0.0)
            .flat_map(|(k, &t)| loose.iter().map(move |&j| (t, FunctionId::Ineq(j), ar.g[k][j]))),
    );
    let arc5 = PropertyCheck::scan(
        tol,
        samples().flat_map(|(k, &t)| (0..pd.p()).map(move |j| (t, FunctionId::Eq(j), ar.h[k][j].abs()))),
    );
    let feasible_forward = PropertyCheck::scan(
        tol,
        samples().filter(|(_, &t)| t >= 0.0).flat_map(|(k, &t)| {
            (0..pd.m())
                .map(move |i| (t, FunctionId::Ineq(i), ar.g[k][i]))
                .chain((0..pd.p()).map(move |j| (t, FunctionId::Eq(j), ar.h[k][j].abs())))
        }),
    );
    let all_pass = arc1.pass && arc2.pass && arc3.pass && arc4.pass && arc5.pass && feasible_forward.pass;
    ArcProperties {
        tol,
        arc1,
        arc2,
        arc3,
        arc4,
        arc5,
        feasible_forward,
        all_pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcOptions {
    pub delta: f64,
    pub samples: usize,
    pub tol_dir: f64,
    pub tol_rank: f64,
    pub verify_tol: f64,
    #[serde(skip)]
    pub newton: NewtonOptions,
}

impl Default for ArcOptions {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            samples: DEFAULT_SAMPLES,
            tol_dir: DEFAULT_DIR_TOL,
            tol_rank: crate::linalg::DEFAULT_RANK_TOL,
            verify_tol: DEFAULT_VERIFY_TOL,
            newton: NewtonOptions::default(),
        }
    }
}

/// Everything computed for one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionArc {
    pub sigma: SigmaMap,
    pub phi: PhiMap,
    pub arc: ArcResult,
    pub properties: ArcProperties,
}

impl DirectionArc {
    /// `ζ(0) = x̄`, `ζ′(0) = d̄` and `ζ(t)` feasible for the traced `t ≥ 0`.
    pub fn realized(&self) -> bool {
        self.properties.arc1.pass && self.properties.feasible_forward.pass
    }
}

/// σ, φ, trace and verification in one call.
pub fn arc_for_direction(p: &Problem, pd: &PointData, d: &[f64], opts: &ArcOptions) -> Result<DirectionArc, ArcError> {
    let sigma = build_sigma(pd, d, opts.tol_dir)?;
    let phi = construct_phi(pd, &sigma, opts.tol_rank)?;
    let arc = trace_arc(p, &phi, d, opts.delta, opts.samples, &opts.newton)?;
    let properties = verify_arc(&arc, pd, &sigma, opts.verify_tol);
    Ok(DirectionArc {
        sigma,
        phi,
        arc,
        properties,
    })
}
