//! Constraint qualification verdicts at a point.
//!
//! LICQ and MFCQ are decided at the point itself. The constant-rank
//! conditions quantify over a neighbourhood, so they are probed with seeded
//! sample points: a rank mismatch refutes them, but no finite scan confirms
//! them, and they are never reported as holding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arc::{arc_for_direction, ArcOptions, DirectionArc};
use crate::cones::{linearized_cone, sample_directions};
use crate::expr;
use crate::linalg::{numerical_rank, simplex_lp, Bound, LinalgError, LinearProgram, LpStatus, Matrix, LP_FEAS_TOL};
use crate::model::{evaluate_point, FunctionId, PointData, Problem};

pub const DEFAULT_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_SAMPLES_PER_RADIUS: usize = 64;
/// Bound on `|I_g| + p` for the full subset scan.
pub const SUBSET_SCAN_MAX_FUNCTIONS: usize = 20;
/// Bound on rank evaluations per scan.
pub const RANK_EVALUATION_CAP: usize = 1 << 20;
/// MFCQ holds when the LP slack exceeds this.
pub const MFCQ_SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Rank of the stacked gradients of `functions` at `x`.
    Rank {
        functions: Vec<FunctionId>,
        x: Vec<f64>,
        rank: usize,
        required: usize,
        singular_values: Vec<f64>,
    },
    /// `∇g_i(x̄)ᵀd + s ≤ 0` on the active set, `∇h(x̄)ᵀd = 0`, `s > 0`.
    MfcqDirection { d: Vec<f64>, slack: f64 },
    /// `Σ y_i∇g_i + Σ z_j∇h_j = 0` with `y ≥ 0`, `Σ y_i = 1`: no direction
    /// strictly decreases every active inequality.
    GordanDual {
        ineq: Vec<FunctionId>,
        y: Vec<f64>,
        eq: Vec<FunctionId>,
        z: Vec<f64>,
        residual: f64,
    },
    /// The gradients of `functions` have different ranks at `center` and `x`.
    RankMismatch {
        functions: Vec<FunctionId>,
        center: Vec<f64>,
        x: Vec<f64>,
        radius: f64,
        sample_index: usize,
        rank_at_center: usize,
        rank_at_x: usize,
        tol_rank: f64,
    },
}

/// Sampling record for neighbourhood scans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEvidence {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub seed: u64,
    pub points_evaluated: usize,
    /// Sample points where some gradient could not be evaluated.
    pub points_skipped: usize,
    pub subsets_total: u64,
    pub subsets_scanned: usize,
    pub rank_evaluations: usize,
    /// The scan did not cover every subset.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcqEvidence {
    pub directions_requested: usize,
    pub directions_sampled: usize,
    pub seed: u64,
    pub realized: usize,
    pub not_realized: usize,
    pub construction_failures: usize,
    pub trivial_cone: bool,
    pub all_realized: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Evidence {
    Scan(ScanEvidence),
    Acq(AcqEvidence),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub certificate: Option<Certificate>,
    pub evidence: Option<Evidence>,
    pub note: Option<String>,
}

impl Verdict {
    fn decided(status: Status, certificate: Certificate) -> Self {
        Self {
            status,
            certificate: Some(certificate),
            evidence: None,
            note: None,
        }
    }
}

/// Deterministic points in the `∞`-ball shells around a center.
///
/// Coordinates come from a Halton sequence (one prime base per coordinate)
/// with a seeded Cranley–Patterson shift per radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodSampler {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub seed: u64,
}

impl NeighborhoodSampler {
    pub fn new(center: Vec<f64>, seed: u64) -> Self {
        Self {
            center,
            radii: DEFAULT_RADII.to_vec(),
            samples_per_radius: DEFAULT_SAMPLES_PER_RADIUS,
            seed,
        }
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Self {
        self.radii = radii;
        self
    }

    pub fn with_samples(mut self, samples_per_radius: usize) -> Self {
        self.samples_per_radius = samples_per_radius;
        self
    }

    /// `(radius, index within radius, point)` in scan order.
    pub fn points(&self) -> Vec<(f64, usize, Vec<f64>)> {
        let n = self.center.len();
        let bases = first_primes(n);
        let mut out = Vec::with_capacity(self.radii.len() * self.samples_per_radius);
        for (ri, &r) in self.radii.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (ri as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            for k in 0..self.samples_per_radius {
                let x = (0..n)
                    .map(|c| {
                        let u = (radical_inverse(k as u64 + 1, bases[c]) + shift[c]).fract();
                        self.center[c] + r * (2.0 * u - 1.0)
                    })
                    .collect();
                out.push((r, k, x));
            }
        }
        out
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

pub fn check_licq(pd: &PointData, tol_rank: f64) -> Result<Verdict, LinalgError> {
    let ids = pd.active_ids();
    let info = numerical_rank(&pd.jacobian(&ids), tol_rank)?;
    let status = if info.rank == ids.len() { Status::Holds } else { Status::Fails };
    Ok(Verdict::decided(
        status,
        Certificate::Rank {
            required: ids.len(),
            functions: ids,
            x: pd.x.clone(),
            rank: info.rank,
            singular_values: info.singular_values,
        },
    ))
}

/// Decides MFCQ by the LP `max s` over `∇g_iᵀd + s ≤ 0`, `∇hᵀd = 0`,
/// `‖d‖∞ ≤ 1`, `s ≤ 1`. Failure is certified by a Gordan multiplier or by
/// the rank deficit of `∇h`.
pub fn check_mfcq(pd: &PointData, tol_rank: f64) -> Result<Verdict, LinalgError> {
    let n = pd.n();
    let eq: Vec<FunctionId> = (0..pd.p()).map(FunctionId::Eq).collect();
    let ineq: Vec<FunctionId> = pd.active.iter().map(|&i| FunctionId::Ineq(i)).collect();
    let h = pd.jacobian(&eq);
    let g = pd.jacobian(&ineq);
    let eq_rank = numerical_rank(&h, tol_rank)?;
    if eq_rank.rank < eq.len() {
        return Ok(Verdict::decided(
            Status::Fails,
            Certificate::Rank {
                required: eq.len(),
                functions: eq,
                x: pd.x.clone(),
                rank: eq_rank.rank,
                singular_values: eq_rank.singular_values,
            },
        ));
    }

    let mut c = vec![0.0; n + 1];
    c[n] = -1.0;
    let a_ub = Matrix::from_fn(ineq.len(), n + 1, |r, k| if k < n { g[(r, k)] } else { 1.0 });
    let a_eq = Matrix::from_fn(eq.len(), n + 1, |r, k| if k < n { h[(r, k)] } else { 0.0 });
    let mut bounds = vec![Bound::new(Some(-1.0), Some(1.0)); n];
    bounds.push(Bound::new(None, Some(1.0)));
    let lp = LinearProgram::new(c)
        .with_ub(a_ub, vec![0.0; ineq.len()])
        .with_eq(a_eq, vec![0.0; eq.len()])
        .with_bounds(bounds);
    let sol = simplex_lp(&lp)?;
    if sol.status == LpStatus::Optimal && sol.x[n] > MFCQ_SLACK_TOL {
        // the optimal face is usually not a point; scale d to ‖d‖∞ = 1
        let scale = sol.x[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        return Ok(Verdict::decided(
            Status::Holds,
            Certificate::MfcqDirection {
                d: sol.x[..n].iter().map(|v| v / scale).collect(),
                slack: sol.x[n] / scale,
            },
        ));
    }

    // Gordan alternative: Gᵀy + Hᵀz = 0, y ≥ 0, Σy = 1
    let k_in = ineq.len();
    let k_eq = eq.len();
    let a = Matrix::from_fn(n + 1, k_in + k_eq, |r, k| match (r < n, k < k_in) {
        (true, true) => g[(k, r)],
        (true, false) => h[(k - k_in, r)],
        (false, true) => 1.0,
        (false, false) => 0.0,
    });
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let bounds = (0..k_in + k_eq)
        .map(|k| if k < k_in { Bound::NONNEG } else { Bound::FREE })
        .collect();
    let dual = simplex_lp(&LinearProgram::new(vec![0.0; k_in + k_eq]).with_eq(a, b).with_bounds(bounds))?;
    if dual.status != LpStatus::Optimal {
        return Ok(Verdict {
            status: Status::Undetermined,
            certificate: None,
            evidence: None,
            note: Some(format!(
                "LP slack {:e} at or below {MFCQ_SLACK_TOL:e} but no dual certificate was found",
                sol.value.abs()
            )),
        });
    }
    let (y, z) = dual.x.split_at(k_in);
    let cert = Certificate::GordanDual {
        residual: gordan_residual(pd, &ineq, y, &eq, z),
        ineq,
        y: y.to_vec(),
        eq,
        z: z.to_vec(),
    };
    Ok(Verdict::decided(Status::Fails, cert))
}

fn gordan_residual(pd: &PointData, ineq: &[FunctionId], y: &[f64], eq: &[FunctionId], z: &[f64]) -> f64 {
    let mut v = vec![0.0; pd.n()];
    for (id, w) in ineq.iter().zip(y).chain(eq.iter().zip(z)) {
        v.iter_mut().zip(pd.gradient(*id)).for_each(|(a, b)| *a += w * b);
    }
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Subsets of `0..k` in scan order: singletons, pairs, the full set, then the
/// remaining sizes ascending; lexicographic within a size.
fn subsets_in_scan_order(k: usize, include_empty: bool, full_scan: bool) -> Vec<Vec<usize>> {
    fn combos(k: usize, size: usize) -> Vec<Vec<usize>> {
        if size > k {
            return vec![];
        }
        let mut cur: Vec<usize> = (0..size).collect();
        let mut out = vec![];
        loop {
            out.push(cur.clone());
            let Some(i) = (0..size).rev().find(|&i| cur[i] < i + k - size) else {
                return out;
            };
            cur[i] += 1;
            for j in i + 1..size {
                cur[j] = cur[j - 1] + 1;
            }
        }
    }
    let mut out = vec![];
    if include_empty {
        out.push(vec![]);
    }
    let mut sizes: Vec<usize> = vec![1, 2, k];
    if full_scan {
        sizes.extend(3..k);
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in sizes {
        if s == 0 || s > k || !seen.insert(s) {
            continue;
        }
        out.extend(combos(k, s));
    }
    out
}

struct ScanSetup {
    /// Always-included functions.
    fixed: Vec<FunctionId>,
    /// Functions ranging over subsets.
    free: Vec<FunctionId>,
    include_empty: bool,
}

fn rank_scan(p: &Problem, pd: &PointData, sampler: &NeighborhoodSampler, tol_rank: f64, setup: ScanSetup) -> Result<Verdict, LinalgError> {
    let all: Vec<FunctionId> = setup.fixed.iter().chain(&setup.free).copied().collect();
    let full_scan = all.len() <= SUBSET_SCAN_MAX_FUNCTIONS;
    let subsets = subsets_in_scan_order(setup.free.len(), setup.include_empty, full_scan);
    let subsets_total = if setup.include_empty {
        1u64 << setup.free.len()
    } else {
        (1u64 << setup.free.len()) - 1
    };

    let mut points = vec![];
    let mut skipped = 0;
    for (r, k, x) in sampler.points() {
        let grads: Result<Vec<Vec<f64>>, _> = all
            .iter()
            .map(|&id| expr::grad_hess(p.function(id), &x).map(|t| t.gradient))
            .collect();
        match grads {
            Ok(gs) => points.push((r, k, x, gs)),
            Err(_) => skipped += 1,
        }
    }
    let center: Vec<Vec<f64>> = all.iter().map(|&id| pd.gradient(id).to_vec()).collect();
    let n = pd.n();
    let stack = |grads: &[Vec<f64>], members: &[usize]| Matrix::from_fn(members.len(), n, |r, c| grads[members[r]][c]);

    let mut evidence = ScanEvidence {
        radii: sampler.radii.clone(),
        samples_per_radius: sampler.samples_per_radius,
        seed: sampler.seed,
        points_evaluated: points.len(),
        points_skipped: skipped,
        subsets_total,
        subsets_scanned: 0,
        rank_evaluations: 0,
        truncated: !full_scan,
    };
    for subset in &subsets {
        if evidence.rank_evaluations + points.len() + 1 > RANK_EVALUATION_CAP {
            evidence.truncated = true;
            break;
        }
        let members: Vec<usize> = (0..setup.fixed.len())
            .chain(subset.iter().map(|&i| setup.fixed.len() + i))
            .collect();
        if members.is_empty() {
            continue;
        }
        let at_center = numerical_rank(&stack(&center, &members), tol_rank)?.rank;
        evidence.rank_evaluations += 1;
        evidence.subsets_scanned += 1;
        for (r, k, x, grads) in &points {
            let at_x = numerical_rank(&stack(grads, &members), tol_rank)?.rank;
            evidence.rank_evaluations += 1;
            if at_x != at_center {
                return Ok(Verdict {
                    status: Status::Fails,
                    certificate: Some(Certificate::RankMismatch {
                        functions: members.iter().map(|&m| all[m]).collect(),
                        center: pd.x.clone(),
                        x: x.clone(),
                        radius: *r,
                        sample_index: *k,
                        rank_at_center: at_center,
                        rank_at_x: at_x,
                        tol_rank,
                    }),
                    evidence: Some(Evidence::Scan(evidence)),
                    note: None,
                });
            }
        }
    }
    Ok(Verdict {
        status: Status::Undetermined,
        certificate: None,
        evidence: Some(Evidence::Scan(evidence)),
        note: Some("consistent with constant rank at the sampled radii".into()),
    })
}

/// Scans every nonempty subset of the active inequalities and equalities.
pub fn check_crcq(p: &Problem, pd: &PointData, sampler: &NeighborhoodSampler, tol_rank: f64) -> Result<Verdict, LinalgError> {
    let setup = ScanSetup {
        fixed: vec![],
        free: pd.active_ids(),
        include_empty: false,
    };
    rank_scan(p, pd, sampler, tol_rank, setup)
}

/// As [`check_crcq`] with all equalities always included.
pub fn check_rcrcq(p: &Problem, pd: &PointData, sampler: &NeighborhoodSampler, tol_rank: f64) -> Result<Verdict, LinalgError> {
    let setup = ScanSetup {
        fixed: (0..pd.p()).map(FunctionId::Eq).collect(),
        free: pd.active.iter().map(|&i| FunctionId::Ineq(i)).collect(),
        include_empty: pd.p() > 0,
    };
    rank_scan(p, pd, sampler, tol_rank, setup)
}

/// Recomputes both ranks of a mismatch certificate from its own data.
pub fn recheck_rank_mismatch(p: &Problem, cert: &Certificate) -> Option<bool> {
    let Certificate::RankMismatch {
        functions,
        center,
        x,
        rank_at_center,
        rank_at_x,
        tol_rank,
        ..
    } = cert
    else {
        return None;
    };
    let rank_at = |pt: &[f64]| -> Option<usize> {
        let pd = evaluate_point(p, pt, 0.0).ok()?;
        numerical_rank(&pd.jacobian(functions), *tol_rank).ok().map(|r| r.rank)
    };
    Some(rank_at(center)? == *rank_at_center && rank_at(x)? == *rank_at_x && rank_at_center != rank_at_x)
}

/// Re-validates a decided certificate against the point data.
pub fn recheck_certificate(pd: &PointData, cert: &Certificate) -> bool {
    match cert {
        Certificate::Rank {
            functions,
            rank,
            singular_values,
            ..
        } => {
            let Ok(info) = numerical_rank(&pd.jacobian(functions), 1e-8) else {
                return false;
            };
            info.rank == *rank && info.singular_values.len() == singular_values.len()
        }
        Certificate::MfcqDirection { d, slack } => {
            let dot = |id: FunctionId| pd.gradient(id).iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
            *slack > MFCQ_SLACK_TOL
                && d.iter().all(|v| v.abs() <= 1.0 + LP_FEAS_TOL)
                && pd.active.iter().all(|&i| dot(FunctionId::Ineq(i)) + slack <= LP_FEAS_TOL)
                && (0..pd.p()).all(|j| dot(FunctionId::Eq(j)).abs() <= LP_FEAS_TOL)
        }
        Certificate::GordanDual { ineq, y, eq, z, .. } => {
            let sum: f64 = y.iter().sum();
            y.iter().all(|&v| v >= -LP_FEAS_TOL) && (sum - 1.0).abs() <= 1e-9 && gordan_residual(pd, ineq, y, eq, z) <= 1e-9
        }
        Certificate::RankMismatch { .. } => false,
    }
}

/// Traces arcs along sampled linearized-cone directions.
///
/// A missing arc does not show that a direction is outside the tangent cone,
/// so the status is always undetermined; `all_realized` is supporting
/// evidence for Abadie's condition.
pub fn check_acq_empirical(p: &Problem, pd: &PointData, count: usize, seed: u64, opts: &ArcOptions) -> (Verdict, Vec<DirectionArc>) {
    let cone = linearized_cone(pd);
    let sampled = sample_directions(&cone, count, seed);
    let mut arcs = vec![];
    let mut failures = vec![];
    let mut not_realized = 0;
    for d in &sampled.directions {
        match arc_for_direction(p, pd, d, opts) {
            Ok(a) => {
                if !a.realized() {
                    not_realized += 1;
                }
                arcs.push(a);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let realized = arcs.len() - not_realized;
    let all_realized = failures.is_empty() && not_realized == 0;
    let note = if sampled.trivial_cone {
        "linearized cone is {0}: vacuously all realized".to_string()
    } else if all_realized {
        "all sampled directions realized".to_string()
    } else {
        format!("{realized} of {} sampled directions realized", sampled.directions.len())
    };
    let verdict = Verdict {
        status: Status::Undetermined,
        certificate: None,
        evidence: Some(Evidence::Acq(AcqEvidence {
            directions_requested: count,
            directions_sampled: sampled.directions.len(),
            seed,
            realized,
            not_realized,
            construction_failures: failures.len(),
            trivial_cone: sampled.trivial_cone,
            all_realized,
            failures,
        })),
        note: Some(note),
    };
    (verdict, arcs)
}
