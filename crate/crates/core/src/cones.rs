//! Polyhedral cones at a point: the linearized cone, the strong critical cone
//! in both of its forms, sampling of unit members, and minimization of a
//! quadratic form over the unit members of a cone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{lstsq, min_eig_sym, nnls, nullspace_basis, LinalgError, Matrix, Vector, DEFAULT_RANK_TOL};
use crate::model::{check_multiplier_shape, FunctionId, ModelError, PointData};

/// Multipliers above this count as strictly positive.
pub const POSITIVE_MULTIPLIER_TOL: f64 = 1e-10;
/// Stationarity residual accepted for a KKT multiplier.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Largest inequality block handled by exhaustive facial enumeration.
pub const FACIAL_ENUMERATION_MAX_ROWS: usize = 16;

const CANDIDATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("not a KKT multiplier: stationarity residual {residual:e}")]
    NotKktMultiplier { residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `{d : A_eq d = 0, A_in d ≤ 0}`, each row tagged with the function whose
/// gradient it is.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeRep {
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub a_eq: Matrix,
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub a_in: Matrix,
    pub eq_rows: Vec<FunctionId>,
    pub in_rows: Vec<FunctionId>,
}

impl ConeRep {
    pub fn whole_space(n: usize) -> Self {
        Self {
            a_eq: Matrix::zeros(0, n),
            a_in: Matrix::zeros(0, n),
            eq_rows: vec![],
            in_rows: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.a_eq.ncols()
    }

    fn from_rows(pd: &PointData, eq: Vec<FunctionId>, ineq: Vec<FunctionId>) -> Self {
        Self {
            a_eq: pd.jacobian(&eq),
            a_in: pd.jacobian(&ineq),
            eq_rows: eq,
            in_rows: ineq,
        }
    }

    pub fn contains(&self, d: &[f64], tol: f64) -> bool {
        membership(self, d, tol)
    }
}

/// `L(x̄)`: active inequality gradients as `≤` rows, all equality gradients
/// as `=` rows.
pub fn linearized_cone(pd: &PointData) -> ConeRep {
    let ineq = pd.active.iter().map(|&i| FunctionId::Ineq(i)).collect();
    let eq = (0..pd.p()).map(FunctionId::Eq).collect();
    ConeRep::from_rows(pd, eq, ineq)
}

/// `C^S(x̄)`: the linearized cone cut by `∇f(x̄)ᵀd ≤ 0`.
pub fn strong_critical_cone(pd: &PointData) -> ConeRep {
    let mut ineq: Vec<FunctionId> = pd.active.iter().map(|&i| FunctionId::Ineq(i)).collect();
    ineq.push(FunctionId::Objective);
    let eq = (0..pd.p()).map(FunctionId::Eq).collect();
    ConeRep::from_rows(pd, eq, ineq)
}

/// Stationarity residual `min_λ ‖∇f + Σμ_i∇g_i + Σλ_j∇h_j‖∞` and the
/// least-squares `λ` attaining it.
pub fn best_equality_multiplier(pd: &PointData, mu: &[f64]) -> (f64, Vec<f64>) {
    let partial = pd.lagrangian_gradient(mu, &vec![0.0; pd.p()]);
    let eq_ids: Vec<FunctionId> = (0..pd.p()).map(FunctionId::Eq).collect();
    let ht = pd.jacobian(&eq_ids).transpose();
    let lambda = lstsq(&ht, &(-&partial));
    let lambda: Vec<f64> = lambda.iter().copied().collect();
    let residual = pd.lagrangian_gradient(mu, &lambda).amax();
    (residual, lambda)
}

/// The critical cone written with multipliers: active rows with `μ_i > 0`
/// become equalities and `∇f` is dropped.
pub fn critical_cone_multiplier_form(pd: &PointData, mu: &[f64]) -> Result<ConeRep, ConeError> {
    check_multiplier_shape(pd, mu, &vec![0.0; pd.p()])?;
    let (residual, _) = best_equality_multiplier(pd, mu);
    if residual > STATIONARITY_TOL {
        return Err(ConeError::NotKktMultiplier { residual });
    }
    let (pos, rest): (Vec<usize>, Vec<usize>) = pd.active.iter().partition(|&&i| mu[i] > POSITIVE_MULTIPLIER_TOL);
    let eq = pos
        .into_iter()
        .map(FunctionId::Ineq)
        .chain((0..pd.p()).map(FunctionId::Eq))
        .collect();
    Ok(ConeRep::from_rows(pd, eq, rest.into_iter().map(FunctionId::Ineq).collect()))
}

/// `‖A_eq d‖∞ ≤ tol(1+‖d‖)` and `max(A_in d) ≤ tol(1+‖d‖)`.
pub fn membership(c: &ConeRep, d: &[f64], tol: f64) -> bool {
    let d = Vector::from_column_slice(d);
    let slack = tol * (1.0 + d.norm());
    let eq_ok = c.a_eq.nrows() == 0 || (&c.a_eq * &d).amax() <= slack;
    let in_ok = c.a_in.nrows() == 0 || (&c.a_in * &d).max() <= slack;
    eq_ok && in_ok
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledDirections {
    pub directions: Vec<Vec<f64>>,
    /// No nonzero member was found within the retry budget.
    pub trivial_cone: bool,
    pub draws: usize,
}

/// Seeded unit members of the cone.
///
/// Each Gaussian draw `w` is replaced by its projection onto the cone, found
/// through the decomposition `w = P_K(w) + P_{K°}(w)` with the polar part from
/// a sign-constrained least-squares fit. Projections lying on faces are kept,
/// so boundary directions show up with positive probability.
pub fn sample_directions(c: &ConeRep, count: usize, seed: u64) -> SampledDirections {
    let n = c.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 64 + 16 * count;
    let generators = Matrix::from_fn(n, c.a_in.nrows() + c.a_eq.nrows(), |r, k| {
        if k < c.a_in.nrows() {
            c.a_in[(k, r)]
        } else {
            c.a_eq[(k - c.a_in.nrows(), r)]
        }
    });
    let mask: Vec<bool> = (0..generators.ncols()).map(|k| k < c.a_in.nrows()).collect();
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count && draws < budget {
        draws += 1;
        let w = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let d = if generators.ncols() == 0 {
            w.clone()
        } else {
            let neg_w: Vec<f64> = w.iter().map(|v| -v).collect();
            match nnls(&generators, &neg_w, &mask) {
                Ok(fit) => &w - &generators * Vector::from_vec(fit.solution),
                Err(_) => continue,
            }
        };
        let norm = d.norm();
        if norm <= 1e-8 * w.norm() {
            continue;
        }
        let unit: Vec<f64> = (d / norm).iter().copied().collect();
        if membership(c, &unit, 1e-9) {
            out.push(unit);
        }
    }
    SampledDirections {
        trivial_cone: out.is_empty(),
        directions: out,
        draws,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadMethod {
    ExactSubspace,
    FacialEnumeration,
    Sampled,
}

/// Minimum of `dᵀHd` over unit-norm cone members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadOnConeResult {
    /// `None` when the cone is `{0}`.
    pub min_value: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub method: QuadMethod,
    pub certified: bool,
    /// Faces (subspaces) whose eigenproblem was solved.
    pub faces_examined: usize,
}

fn quad(h: &Matrix, d: &Vector) -> f64 {
    d.dot(&(h * d))
}

/// Smallest eigenpair of `H` restricted to the column span of `basis`.
fn restricted_min(h: &Matrix, basis: &Matrix) -> Result<(f64, Vector), LinalgError> {
    let m = basis.transpose() * h * basis;
    let m = (&m + m.transpose()) * 0.5;
    let (theta, v) = min_eig_sym(&m)?;
    Ok((theta, (basis * v).normalize()))
}

/// Minimizes the quadratic form over `cone ∩ unit sphere`.
///
/// With no inequality rows the cone is a subspace and the answer is a
/// restricted eigenvalue. Up to [`FACIAL_ENUMERATION_MAX_ROWS`] inequality
/// rows, every face (subset of inequality rows held at equality) is solved as
/// a subspace eigenproblem and kept when its eigenvector, of either sign,
/// satisfies the remaining rows; a constrained minimizer is always the least
/// eigenvector of the face containing it in its relative interior. Larger
/// cones fall back to uncertified sampling.
pub fn min_quadratic_on_cone(h: &Matrix, c: &ConeRep) -> Result<QuadOnConeResult, ConeError> {
    let n = c.dim();
    if h.shape() != (n, n) {
        return Err(LinalgError::Dimension(format!("H is {:?}, cone dimension {n}", h.shape())).into());
    }
    if n > 0 {
        min_eig_sym(h)?;
    }
    let trivial = |method, faces| QuadOnConeResult {
        min_value: None,
        witness: None,
        method,
        certified: true,
        faces_examined: faces,
    };
    let k = c.a_in.nrows();
    if k == 0 {
        let basis = nullspace_basis(&c.a_eq, DEFAULT_RANK_TOL)?;
        if basis.ncols() == 0 {
            return Ok(trivial(QuadMethod::ExactSubspace, 0));
        }
        let (theta, d) = restricted_min(h, &basis)?;
        return Ok(QuadOnConeResult {
            min_value: Some(theta),
            witness: Some(d.iter().copied().collect()),
            method: QuadMethod::ExactSubspace,
            certified: true,
            faces_examined: 1,
        });
    }
    if k > FACIAL_ENUMERATION_MAX_ROWS {
        return Ok(sampled_minimum(h, c));
    }

    let row_tol: Vec<f64> = (0..k).map(|i| CANDIDATE_TOL * c.a_in.row(i).norm().max(1.0)).collect();
    let mut best: Option<(f64, Vector)> = None;
    let mut faces = 0;
    for subset in 0u32..(1u32 << k) {
        let held: Vec<usize> = (0..k).filter(|&i| subset & (1 << i) != 0).collect();
        let mut stacked = Matrix::zeros(c.a_eq.nrows() + held.len(), n);
        stacked.rows_mut(0, c.a_eq.nrows()).copy_from(&c.a_eq);
        for (r, &i) in held.iter().enumerate() {
            stacked.set_row(c.a_eq.nrows() + r, &c.a_in.row(i));
        }
        let basis = nullspace_basis(&stacked, DEFAULT_RANK_TOL)?;
        if basis.ncols() == 0 {
            continue;
        }
        faces += 1;
        let (theta, d) = restricted_min(h, &basis)?;
        let fits = |d: &Vector| (0..k).all(|i| held.contains(&i) || c.a_in.row(i).dot(&d.transpose()) <= row_tol[i]);
        let chosen = if fits(&d) {
            Some(d)
        } else if fits(&(-&d)) {
            Some(-d)
        } else {
            None
        };
        if let Some(d) = chosen {
            if best.as_ref().is_none_or(|(b, _)| theta < *b) {
                best = Some((theta, d));
            }
        }
    }
    Ok(match best {
        None => trivial(QuadMethod::FacialEnumeration, faces),
        Some((_, d)) => QuadOnConeResult {
            // report the value at the witness itself
            min_value: Some(quad(h, &d)),
            witness: Some(d.iter().copied().collect()),
            method: QuadMethod::FacialEnumeration,
            certified: true,
            faces_examined: faces,
        },
    })
}

fn project_onto_cone(c: &ConeRep, w: &Vector) -> Option<Vector> {
    let generators = Matrix::from_fn(c.dim(), c.a_in.nrows() + c.a_eq.nrows(), |r, k| {
        if k < c.a_in.nrows() {
            c.a_in[(k, r)]
        } else {
            c.a_eq[(k - c.a_in.nrows(), r)]
        }
    });
    let mask: Vec<bool> = (0..generators.ncols()).map(|k| k < c.a_in.nrows()).collect();
    let neg_w: Vec<f64> = w.iter().map(|v| -v).collect();
    let fit = nnls(&generators, &neg_w, &mask).ok()?;
    Some(w - &generators * Vector::from_vec(fit.solution))
}

fn sampled_minimum(h: &Matrix, c: &ConeRep) -> QuadOnConeResult {
    let samples = sample_directions(c, 512, 0x5eed);
    let mut best: Option<(f64, Vector)> = None;
    for d in &samples.directions {
        let mut d = Vector::from_column_slice(d);
        let mut value = quad(h, &d);
        // projected gradient steps on the sphere
        let step = 0.5 / h.amax().max(1e-12);
        for _ in 0..50 {
            let Some(next) = project_onto_cone(c, &(&d - h * &d * (2.0 * step))) else {
                break;
            };
            let norm = next.norm();
            if norm < 1e-12 {
                break;
            }
            let next = next / norm;
            let v = quad(h, &next);
            if v >= value || !membership(c, next.as_slice(), 1e-9) {
                break;
            }
            d = next;
            value = v;
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, d));
        }
    }
    QuadOnConeResult {
        min_value: best.as_ref().map(|b| b.0),
        witness: best.map(|b| b.1.iter().copied().collect()),
        method: QuadMethod::Sampled,
        certified: false,
        faces_examined: 0,
    }
}
