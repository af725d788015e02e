//! Lagrange multipliers, the KKT test, and the strong second-order necessary
//! condition over the whole multiplier set.

use serde::Serialize;
use thiserror::Error;

use crate::cones::{membership, min_quadratic_on_cone, strong_critical_cone, ConeError, QuadOnConeResult};
use crate::linalg::{
    lstsq, nnls, nullspace_basis, numerical_rank, simplex_lp, Bound, LinalgError, LinearProgram, LpStatus, Matrix, Vector, DEFAULT_RANK_TOL,
};
use crate::model::{check_multiplier_shape, lagrangian_hessian, FunctionId, ModelError, PointData};

/// Stationarity residual accepted for a KKT point.
pub const KKT_TOL: f64 = 1e-8;
/// Vertex enumeration bound on `|I_g| + p`.
pub const VERTEX_ENUMERATION_MAX: usize = 12;
/// SSONC fails on a certified cone minimum below this.
pub const SSONC_NEGATIVE_TOL: f64 = 1e-8;

const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error("not a KKT point: stationarity residual {residual:e}")]
    NotKkt { residual: f64 },
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Full-length multiplier vectors (inactive entries of `μ` are 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multiplier {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Multiplier {
    fn key(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.lambda).copied().collect()
    }

    fn close(&self, other: &Self) -> bool {
        self.key().iter().zip(other.key()).all(|(a, b)| (a - b).abs() <= MERGE_TOL)
    }

    fn axpy(&self, t: f64, dir: &Self) -> Self {
        Self {
            mu: self.mu.iter().zip(&dir.mu).map(|(a, b)| a + t * b).collect(),
            lambda: self.lambda.iter().zip(&dir.lambda).map(|(a, b)| a + t * b).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierSet {
    /// `‖∇f + Gᵀμ + Hᵀλ‖∞` at the sign-constrained least-squares probe.
    pub residual: f64,
    pub kkt: bool,
    pub probe: Multiplier,
    /// Sorted lexicographically by `(μ, λ)`.
    pub vertices: Vec<Multiplier>,
    /// Recession directions `(μ̇ ≥ 0, λ̇)` with `Gᵀμ̇ + Hᵀλ̇ = 0`. Directions
    /// along which `λ` is not determined appear as `±` pairs.
    pub rays: Vec<Multiplier>,
    pub bounded: bool,
    /// Enumeration was skipped because `|I_g| + p` exceeded the bound; the
    /// probe is the only listed vertex.
    pub partial: bool,
}

struct System {
    /// Active inequality indices, then equality indices.
    active: Vec<usize>,
    p: usize,
    m: usize,
    /// `[Gᵀ Hᵀ]`, `n × (|I_g| + p)`.
    mt: Matrix,
    /// Basis of `{λ : Hᵀλ = 0}`, `p × q`.
    lineality: Matrix,
}

impl System {
    fn new(pd: &PointData) -> Result<Self, LinalgError> {
        let ids = pd.active_ids();
        let mt = pd.jacobian(&ids).transpose();
        let ht = pd.jacobian(&(0..pd.p()).map(FunctionId::Eq).collect::<Vec<_>>()).transpose();
        let lineality = if pd.p() == 0 {
            Matrix::zeros(0, 0)
        } else {
            nullspace_basis(&ht, DEFAULT_RANK_TOL)?
        };
        Ok(Self {
            active: pd.active.clone(),
            p: pd.p(),
            m: pd.m(),
            mt,
            lineality,
        })
    }

    fn k_in(&self) -> usize {
        self.active.len()
    }

    /// Scatters a reduced solution into full-length `μ`, clearing the
    /// round-off negatives that the support tests accept.
    fn expand(&self, u: &[f64]) -> Multiplier {
        let mut mu = vec![0.0; self.m];
        for (c, &i) in self.active.iter().enumerate() {
            mu[i] = u[c].max(0.0);
        }
        Multiplier {
            mu,
            lambda: u[self.k_in()..].to_vec(),
        }
    }

    /// Columns `μ_S` and all of `λ`, with rows `Nᵀλ = 0` appended so the
    /// polyhedron is pointed.
    fn restricted(&self, support: &[usize]) -> Matrix {
        let n = self.mt.nrows();
        let q = self.lineality.ncols();
        let cols = support.len() + self.p;
        Matrix::from_fn(n + q, cols, |r, c| {
            let full_col = if c < support.len() {
                support[c]
            } else {
                self.k_in() + c - support.len()
            };
            if r < n {
                self.mt[(r, full_col)]
            } else if c >= support.len() {
                self.lineality[(c - support.len(), r - n)]
            } else {
                0.0
            }
        })
    }

    fn scatter(&self, support: &[usize], v: &Vector) -> Vec<f64> {
        let mut u = vec![0.0; self.k_in() + self.p];
        for (c, &s) in support.iter().enumerate() {
            u[s] = v[c];
        }
        for j in 0..self.p {
            u[self.k_in() + j] = v[support.len() + j];
        }
        u
    }
}

fn sort_and_merge(mut v: Vec<Multiplier>) -> Vec<Multiplier> {
    v.sort_by(|a, b| {
        a.key()
            .iter()
            .zip(b.key())
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Multiplier> = vec![];
    for m in v {
        if !out.iter().any(|o| o.close(&m)) {
            out.push(m);
        }
    }
    out
}

/// Finds the multiplier polyhedron `{(μ, λ) : ∇ₓℓ = 0, μ ≥ 0, μ_i = 0 off I_g}`.
///
/// Vertices are basic solutions over supports `S ⊂ I_g`; extreme rays are
/// one-dimensional faces of the homogeneous system. When `∇h` is rank
/// deficient, `λ` is pinned to the orthogonal complement of `ker Hᵀ` for the
/// enumeration and the missing directions are added back as `±` rays.
pub fn solve_multipliers(pd: &PointData) -> Result<MultiplierSet, KktError> {
    let sys = System::new(pd)?;
    let k_in = sys.k_in();
    let k = k_in + sys.p;
    let grad_f = pd.gradient(FunctionId::Objective).to_vec();
    let mask: Vec<bool> = (0..k).map(|c| c < k_in).collect();
    let fit = nnls(&sys.mt, &grad_f, &mask).or_else(|e| match e {
        LinalgError::IterationCap { best: Some(b), .. } => Ok(b),
        e => Err(e),
    })?;
    let probe = sys.expand(&fit.solution);
    let residual = pd.lagrangian_gradient(&probe.mu, &probe.lambda).amax();
    let kkt = residual <= KKT_TOL;

    let mut lineality_rays = vec![];
    for c in 0..sys.lineality.ncols() {
        let dir: Vec<f64> = sys.lineality.column(c).iter().copied().collect();
        for sign in [1.0, -1.0] {
            lineality_rays.push(Multiplier {
                mu: vec![0.0; sys.m],
                lambda: dir.iter().map(|v| sign * v).collect(),
            });
        }
    }

    if k > VERTEX_ENUMERATION_MAX {
        let bounded = sys.lineality.ncols() == 0 && !has_mu_recession(&sys)?;
        return Ok(MultiplierSet {
            residual,
            kkt,
            vertices: if kkt { vec![probe.clone()] } else { vec![] },
            probe,
            rays: lineality_rays,
            bounded,
            partial: true,
        });
    }

    let neg_f = Vector::from_iterator(
        sys.mt.nrows() + sys.lineality.ncols(),
        grad_f.iter().map(|v| -v).chain(std::iter::repeat_n(0.0, sys.lineality.ncols())),
    );
    let mut vertices = vec![];
    let mut rays = vec![];
    for subset in 0u32..(1u32 << k_in) {
        let support: Vec<usize> = (0..k_in).filter(|&i| subset & (1 << i) != 0).collect();
        let a = sys.restricted(&support);
        let rank = numerical_rank(&a, DEFAULT_RANK_TOL)?.rank;
        let cols = a.ncols();
        if kkt && rank == cols {
            let v = lstsq(&a, &neg_f);
            let fits = (&a * &v - &neg_f).amax() <= KKT_TOL;
            if fits && v.iter().take(support.len()).all(|&x| x >= -1e-12) {
                vertices.push(sys.expand(&sys.scatter(&support, &v)));
            }
        }
        if !support.is_empty() && rank + 1 == cols {
            let null = nullspace_basis(&a, DEFAULT_RANK_TOL)?;
            let mut g = null.column(0).into_owned();
            let mu_part = g.rows(0, support.len());
            let (lo, hi) = (mu_part.min(), mu_part.max());
            if hi <= 1e-12 {
                g = -g;
            } else if lo < -1e-12 {
                continue;
            }
            let total: f64 = g.rows(0, support.len()).sum();
            if total <= 1e-12 {
                continue;
            }
            g /= total;
            rays.push(sys.expand(&sys.scatter(&support, &g)));
        }
    }
    let mut rays = sort_and_merge(rays);
    let bounded = rays.is_empty() && lineality_rays.is_empty();
    rays.extend(lineality_rays);
    Ok(MultiplierSet {
        residual,
        kkt,
        probe,
        vertices: sort_and_merge(vertices),
        rays,
        bounded,
        partial: false,
    })
}

/// Whether `{μ̇ ≥ 0, Σμ̇ = 1, Gᵀμ̇ + Hᵀλ̇ = 0}` is feasible.
fn has_mu_recession(sys: &System) -> Result<bool, LinalgError> {
    let k_in = sys.k_in();
    if k_in == 0 {
        return Ok(false);
    }
    let n = sys.mt.nrows();
    let k = sys.mt.ncols();
    let a = Matrix::from_fn(n + 1, k, |r, c| {
        if r < n {
            sys.mt[(r, c)]
        } else if c < k_in {
            1.0
        } else {
            0.0
        }
    });
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let bounds = (0..k).map(|c| if c < k_in { Bound::NONNEG } else { Bound::FREE }).collect();
    let sol = simplex_lp(&LinearProgram::new(vec![0.0; k]).with_eq(a, b).with_bounds(bounds))?;
    Ok(sol.status == LpStatus::Optimal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktCheck {
    pub residual: f64,
    pub ok: bool,
}

/// `max(‖∇ₓℓ‖∞, max(−μ), max_i |μ_i g_i(x̄)|) ≤ tol`.
pub fn check_kkt(pd: &PointData, mu: &[f64], lambda: &[f64], tol: f64) -> Result<KktCheck, ModelError> {
    if mu.len() != pd.m() || lambda.len() != pd.p() {
        return Err(ModelError::MultiplierLength {
            expected: pd.m() + pd.p(),
            got: mu.len() + lambda.len(),
        });
    }
    let stationarity = pd.lagrangian_gradient(mu, lambda).amax();
    let sign = mu.iter().fold(0.0f64, |m, &v| m.max(-v));
    let comp = mu.iter().zip(&pd.ineq).fold(0.0f64, |m, (&v, t)| m.max((v * t.value).abs()));
    let residual = stationarity.max(sign).max(comp);
    Ok(KktCheck {
        residual,
        ok: residual <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SsoncStatus {
    HoldsCertified,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Vertex,
    Ray,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsoncSubResult {
    pub kind: SourceKind,
    pub index: usize,
    pub multiplier: Multiplier,
    pub result: QuadOnConeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsoncWitness {
    pub multiplier: Multiplier,
    pub d: Vec<f64>,
    /// `dᵀ∇²ₓₓℓ(x̄, μ, λ)d`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsoncReport {
    pub status: SsoncStatus,
    pub sub_results: Vec<SsoncSubResult>,
    /// The multiplier and direction with the smallest quadratic value found.
    pub worst: Option<SsoncWitness>,
    pub rationale: &'static str,
    pub note: Option<String>,
}

const RATIONALE: &str = "for fixed d the quadratic form is affine in (mu, lambda), so a violation anywhere on the multiplier set shows up at a vertex or along a ray; rays test the form of the direction alone";

fn quad(h: &Matrix, d: &[f64]) -> f64 {
    let d = Vector::from_column_slice(d);
    d.dot(&(h * &d))
}

/// Minimizes the Lagrangian Hessian over the strong critical cone at every
/// vertex, and the multiplier-direction form at every ray.
pub fn check_ssonc(pd: &PointData, ms: &MultiplierSet) -> Result<SsoncReport, KktError> {
    if ms.vertices.is_empty() {
        return Err(KktError::NotKkt { residual: ms.residual });
    }
    let cone = strong_critical_cone(pd);
    let mut subs = vec![];
    for (index, v) in ms.vertices.iter().enumerate() {
        let h = lagrangian_hessian(pd, &v.mu, &v.lambda)?;
        subs.push(SsoncSubResult {
            kind: SourceKind::Vertex,
            index,
            multiplier: v.clone(),
            result: min_quadratic_on_cone(&h, &cone)?,
        });
    }
    for (index, r) in ms.rays.iter().enumerate() {
        let h = pd.weighted_hessian(None, &r.mu, &r.lambda);
        subs.push(SsoncSubResult {
            kind: SourceKind::Ray,
            index,
            multiplier: r.clone(),
            result: min_quadratic_on_cone(&h, &cone)?,
        });
    }

    let negative = |s: &SsoncSubResult| s.result.certified && s.result.min_value.is_some_and(|v| v < -SSONC_NEGATIVE_TOL);
    let status = if subs.iter().any(negative) {
        SsoncStatus::Fails
    } else if subs.iter().all(|s| s.result.certified) && !ms.partial {
        SsoncStatus::HoldsCertified
    } else {
        SsoncStatus::Undetermined
    };

    let mut worst: Option<SsoncWitness> = None;
    for s in subs.iter().filter(|s| s.kind == SourceKind::Vertex) {
        if let (Some(value), Some(d)) = (s.result.min_value, &s.result.witness) {
            if worst.as_ref().is_none_or(|w| value < w.value) {
                worst = Some(SsoncWitness {
                    multiplier: s.multiplier.clone(),
                    d: d.clone(),
                    value,
                });
            }
        }
    }
    let vertex_negative = worst.as_ref().is_some_and(|w| w.value < -SSONC_NEGATIVE_TOL);
    let mut note = None;
    if !vertex_negative {
        // move far enough along the ray to make the form negative
        if let Some(s) = subs.iter().find(|s| s.kind == SourceKind::Ray && negative(s)) {
            let d = s.result.witness.clone().expect("negative minimum has a witness");
            let base = &ms.vertices[0];
            let h0 = lagrangian_hessian(pd, &base.mu, &base.lambda)?;
            let slope = s.result.min_value.expect("negative minimum");
            let t = ((quad(&h0, &d) + 1.0) / -slope).max(0.0);
            let multiplier = base.axpy(t, &s.multiplier);
            let value = quad(&lagrangian_hessian(pd, &multiplier.mu, &multiplier.lambda)?, &d);
            worst = Some(SsoncWitness { multiplier, d, value });
            note = Some(format!("violation found along ray {} (multiplier set unbounded)", s.index));
        }
    }
    if ms.partial {
        note = Some("multiplier enumeration was partial; only the probe multiplier was tested".into());
    }
    if let Some(w) = &worst {
        debug_assert!(membership(&cone, &w.d, 1e-8));
    }
    Ok(SsoncReport {
        status,
        sub_results: subs,
        worst,
        rationale: RATIONALE,
        note,
    })
}

/// Re-evaluates a witness: returns its quadratic value when `(μ, λ)` is a
/// valid multiplier shape and `d` lies in the strong critical cone.
pub fn recheck_witness(pd: &PointData, w: &SsoncWitness) -> Option<f64> {
    check_multiplier_shape(pd, &w.multiplier.mu, &w.multiplier.lambda).ok()?;
    if !membership(&strong_critical_cone(pd), &w.d, 1e-8) {
        return None;
    }
    let h = lagrangian_hessian(pd, &w.multiplier.mu, &w.multiplier.lambda).ok()?;
    Some(quad(&h, &w.d))
}
