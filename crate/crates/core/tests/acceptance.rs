#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance criteria 1–9, one PASS/FAIL line each. Exits nonzero when any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use optcond::arc::{arc_for_direction, ArcOptions};
use optcond::cones::{
    critical_cone_multiplier_form, membership, min_quadratic_on_cone, sample_directions, strong_critical_cone, ConeRep, QuadMethod,
};
use optcond::cq::{
    check_licq, check_mfcq, check_rcrcq, recheck_certificate, recheck_rank_mismatch, Certificate, NeighborhoodSampler, Status,
};
use optcond::expr::{fd_grad_hess, grad_hess, DEFAULT_FD_STEP};
use optcond::kkt::{check_ssonc, recheck_witness, solve_multipliers, SsoncStatus};
use optcond::linalg::Matrix;
use optcond::model::{evaluate_point, FunctionId};
use optcond::report::{run, to_json, ArcDirections, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_problems, builtin_point_data, constant_rank_battery, max_abs_diff};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn close_set(got: &[Vec<f64>], want: &[[f64; 2]], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| max_abs_diff(g, w) <= tol)
}

fn sampled_agreement(a: &ConeRep, b: &ConeRep, count: usize, seed: u64) -> (usize, usize) {
    let mut disagreements = 0;
    let mut checked = 0;
    for (from, to, s) in [(a, b, seed), (b, a, seed + 1)] {
        let dirs = sample_directions(from, count, s).directions;
        checked += dirs.len();
        disagreements += dirs.iter().filter(|d| !membership(to, d, 1e-8)).count();
    }
    (checked, disagreements)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (p, pd) = builtin_point_data("paper-example-1");
    ensure!(pd.active == vec![0, 1], "active set {:?}", pd.active);
    ensure!(
        pd.gradient(FunctionId::Ineq(0)) == [0.0, -2.0] && pd.gradient(FunctionId::Ineq(1)) == [0.0, -2.0],
        "gradients {:?} {:?}",
        pd.gradient(FunctionId::Ineq(0)),
        pd.gradient(FunctionId::Ineq(1))
    );

    let mfcq = check_mfcq(&pd, 1e-8).map_err(|e| e.to_string())?;
    ensure!(mfcq.status == Status::Holds, "MFCQ {:?}", mfcq.status);
    let cert = mfcq.certificate.as_ref().ok_or("MFCQ without certificate")?;
    ensure!(
        matches!(cert, Certificate::MfcqDirection { .. }) && recheck_certificate(&pd, cert),
        "MFCQ certificate {cert:?}"
    );

    let licq = check_licq(&pd, 1e-8).map_err(|e| e.to_string())?;
    ensure!(
        licq.status == Status::Fails && matches!(licq.certificate, Some(Certificate::Rank { rank: 1, .. })),
        "LICQ {licq:?}"
    );

    let ms = solve_multipliers(&pd).map_err(|e| e.to_string())?;
    let mus: Vec<Vec<f64>> = ms.vertices.iter().map(|v| v.mu.clone()).collect();
    ensure!(close_set(&mus, &[[0.0, 0.5], [0.5, 0.0]], 1e-9), "vertices {mus:?}");
    ensure!(mus.iter().all(|m| (2.0 * (m[0] + m[1]) - 1.0).abs() <= 1e-9), "2(mu1 + mu2) != 1");

    let cs = strong_critical_cone(&pd);
    let axis = ConeRep {
        a_eq: Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ..ConeRep::whole_space(2)
    };
    let (checked, disagreements) = sampled_agreement(&cs, &axis, 1000, 0);
    ensure!(
        checked == 2000 && disagreements == 0,
        "critical cone vs d2 = 0: {disagreements} of {checked}"
    );

    let ssonc = check_ssonc(&pd, &ms).map_err(|e| e.to_string())?;
    ensure!(ssonc.status == SsoncStatus::Fails, "SSONC {:?}", ssonc.status);
    let w = ssonc.worst.as_ref().ok_or("no witness")?;
    ensure!((w.value + 1.0).abs() <= 1e-8, "witness value {}", w.value);
    ensure!(
        max_abs_diff(&w.multiplier.mu, &[0.0, 0.5]) <= 1e-9,
        "witness mu {:?}",
        w.multiplier.mu
    );
    ensure!(w.d[1].abs() <= 1e-8 && (w.d[0].abs() - 1.0).abs() <= 1e-8, "witness d {:?}", w.d);
    ensure!(
        recheck_witness(&pd, w).is_some_and(|v| (v - w.value).abs() <= 1e-9),
        "witness does not re-evaluate"
    );

    let sampler = NeighborhoodSampler::new(pd.x.clone(), 0);
    let rc = check_rcrcq(&p, &pd, &sampler, 1e-8).map_err(|e| e.to_string())?;
    ensure!(rc.status == Status::Fails, "RCRCQ {:?}", rc.status);
    let cert = rc.certificate.as_ref().ok_or("RCRCQ without certificate")?;
    let Certificate::RankMismatch {
        rank_at_center,
        rank_at_x,
        x,
        ..
    } = cert
    else {
        return Err(format!("unexpected certificate {cert:?}"));
    };
    ensure!((*rank_at_center, *rank_at_x) == (1, 2), "ranks {rank_at_center} {rank_at_x}");
    ensure!(recheck_rank_mismatch(&p, cert) == Some(true), "certificate does not re-verify");
    let at = evaluate_point(&p, x, 0.0).map_err(|e| e.to_string())?;
    let (a, b) = (at.gradient(FunctionId::Ineq(0)), at.gradient(FunctionId::Ineq(1)));
    let det = a[0] * b[1] - a[1] * b[0];
    ensure!(
        (det + 8.0 * x[0]).abs() <= 1e-12 && x[0] != 0.0,
        "det {det} vs -8 x1 = {}",
        -8.0 * x[0]
    );

    let ms_elapsed = start.elapsed().as_secs_f64() * 1e3;
    ensure!(ms_elapsed < 1000.0, "took {ms_elapsed:.1} ms");
    Ok(format!(
        "witness value {:.3e}, mismatch at x = {:?}, {ms_elapsed:.1} ms",
        w.value, x
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (p, pd) = builtin_point_data("paper-example-2");
    let mfcq = check_mfcq(&pd, 1e-8).map_err(|e| e.to_string())?;
    ensure!(mfcq.status == Status::Holds, "MFCQ {:?}", mfcq.status);

    let ms = solve_multipliers(&pd).map_err(|e| e.to_string())?;
    let mus: Vec<Vec<f64>> = ms.vertices.iter().map(|v| v.mu.clone()).collect();
    ensure!(close_set(&mus, &[[0.0, 1.0], [1.0, 0.0]], 1e-9), "vertices {mus:?}");
    ensure!(mus.iter().all(|m| (m[0] + m[1] - 1.0).abs() <= 1e-9), "mu1 + mu2 != 1");

    let ssonc = check_ssonc(&pd, &ms).map_err(|e| e.to_string())?;
    ensure!(ssonc.status == SsoncStatus::HoldsCertified, "SSONC {:?}", ssonc.status);
    for s in &ssonc.sub_results {
        let v = s.result.min_value.ok_or("empty cone")?;
        let want = 2.0 * s.multiplier.mu[0];
        ensure!(
            (v - want).abs() <= 1e-9 && s.result.certified,
            "cone minimum {v} for mu {:?}",
            s.multiplier.mu
        );
    }

    let sampler = NeighborhoodSampler::new(pd.x.clone(), 0);
    let rc = check_rcrcq(&p, &pd, &sampler, 1e-8).map_err(|e| e.to_string())?;
    ensure!(rc.status == Status::Fails, "RCRCQ {:?}", rc.status);
    let cert = rc.certificate.as_ref().ok_or("RCRCQ without certificate")?;
    ensure!(
        matches!(cert, Certificate::RankMismatch { functions, .. } if functions == &vec![FunctionId::Ineq(0), FunctionId::Ineq(1)]),
        "certificate {cert:?}"
    );
    ensure!(recheck_rank_mismatch(&p, cert) == Some(true), "certificate does not re-verify");

    let ms_elapsed = start.elapsed().as_secs_f64() * 1e3;
    ensure!(ms_elapsed < 1000.0, "took {ms_elapsed:.1} ms");
    Ok(format!("cone minima 0 and 2, {ms_elapsed:.1} ms"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (p, pd) = builtin_point_data("circle");
    let opts = ArcOptions {
        delta: 0.25,
        samples: 41,
        ..ArcOptions::default()
    };
    let r = arc_for_direction(&p, &pd, &[0.0, 1.0], &opts).map_err(|e| e.to_string())?;
    ensure!(
        r.arc.t.len() == 41 && !r.arc.truncated && r.arc.delta == 0.25,
        "grid {:?}",
        r.arc.t.len()
    );
    let max_h = r.arc.h.iter().map(|h| h[0].abs()).fold(0.0, f64::max);
    ensure!(max_h <= 1e-8, "max |h| = {max_h:e}");
    let pos = r.properties.arc1.position_error;
    ensure!(pos <= 1e-10, "position error {pos:e}");
    let der = r.properties.arc1.derivative_error.ok_or("no derivative")?;
    ensure!(der <= 1e-6, "derivative error {der:e}");
    for (t, z) in r.arc.t.iter().zip(&r.arc.points) {
        ensure!(
            max_abs_diff(z, &[(1.0 - t * t).sqrt(), *t]) <= 1e-10,
            "off the closed form at t = {t}"
        );
    }
    ensure!(r.properties.all_pass, "properties {:?}", r.properties);
    let ms_elapsed = start.elapsed().as_secs_f64() * 1e3;
    ensure!(ms_elapsed < 1000.0, "took {ms_elapsed:.1} ms");
    Ok(format!(
        "max |h| {max_h:.1e}, |ζ(0) − x̄| {pos:.1e}, |ζ′(0) − d̄| {der:.1e}, {ms_elapsed:.1} ms"
    ))
}

fn criterion_4() -> Outcome {
    let (p, pd) = builtin_point_data("paper-example-2");
    let r = arc_for_direction(&p, &pd, &[1.0, 0.0], &ArcOptions::default()).map_err(|e| e.to_string())?;
    let worst_fit = r
        .arc
        .t
        .iter()
        .zip(&r.arc.points)
        .map(|(t, z)| max_abs_diff(z, &[*t, t * t]))
        .fold(0.0, f64::max);
    ensure!(worst_fit <= 1e-8, "trace off (t, t²) by {worst_fit:e}");
    let pr = &r.properties;
    let delta = r.arc.delta;
    ensure!(
        !pr.arc2.pass && pr.arc2.worst_function == Some(FunctionId::Ineq(1)),
        "arc2 {:?}",
        pr.arc2
    );
    ensure!(
        (pr.arc2.worst - delta * delta).abs() <= 1e-8,
        "arc2 worst {} vs δ² = {}",
        pr.arc2.worst,
        delta * delta
    );
    ensure!(
        pr.arc1.pass && pr.arc3.pass && pr.arc4.pass && pr.arc5.pass,
        "other properties {pr:?}"
    );
    Ok(format!("arc2 worst {:.10} at δ = {delta}, fit {worst_fit:.1e}", pr.arc2.worst))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let battery = constant_rank_battery();
    ensure!(battery.len() >= 10, "battery has {} fixtures", battery.len());
    let opts = ArcOptions {
        delta: 1e-2,
        verify_tol: 1e-7,
        ..ArcOptions::default()
    };
    let mut arcs = 0;
    for (k, f) in battery.iter().enumerate() {
        let pd = f.point_data();
        let sampler = NeighborhoodSampler::new(pd.x.clone(), 0);
        let rc = check_rcrcq(&f.problem, &pd, &sampler, 1e-8).map_err(|e| e.to_string())?;
        ensure!(rc.status == Status::Undetermined, "{}: RCRCQ scan found a mismatch", f.name);
        let dirs = sample_directions(&optcond::cones::linearized_cone(&pd), 8, k as u64).directions;
        ensure!(dirs.len() == 8, "{}: only {} directions", f.name, dirs.len());
        for d in &dirs {
            let a = arc_for_direction(&f.problem, &pd, d, &opts).map_err(|e| format!("{}: {e}", f.name))?;
            ensure!(a.properties.all_pass, "{}: d = {d:?} fails {:?}", f.name, a.properties);
            arcs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!("{arcs} arcs on {} fixtures, {secs:.2} s", battery.len()))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    let mut expressions = 0;
    for f in all_problems() {
        let p = &f.problem;
        let ids = std::iter::once(FunctionId::Objective)
            .chain((0..p.m()).map(FunctionId::Ineq))
            .chain((0..p.p()).map(FunctionId::Eq));
        for id in ids {
            expressions += 1;
            let e = p.function(id);
            let mut points = 0;
            let mut tries = 0;
            while points < 100 {
                tries += 1;
                ensure!(tries < 100_000, "{} {id}: no in-domain points", f.name);
                // A half-width box keeps the stencil clear of log/sqrt singularities,
                // where O(step²) truncation dominates the oracle.
                let x: Vec<f64> = f.point.iter().map(|c| c + rng.random_range(-0.5..0.5)).collect();
                let (Ok(ad), Ok(fd)) = (grad_hess(e, &x), fd_grad_hess(e, &x, DEFAULT_FD_STEP)) else {
                    continue;
                };
                points += 1;
                let rel = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs() / u.abs().max(1.0)).fold(0.0, f64::max);
                worst_g = worst_g.max(rel(&ad.gradient, &fd.gradient));
                worst_h = worst_h.max(rel(&ad.hessian, &fd.hessian));
            }
        }
    }
    ensure!(worst_g <= 1e-6 && worst_h <= 1e-4, "gradient {worst_g:e}, Hessian {worst_h:e}");
    Ok(format!(
        "{expressions} expressions x 100 points, gradient {worst_g:.1e}, Hessian {worst_h:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let mut total = 0;
    for name in ["paper-example-1", "paper-example-2"] {
        let (_, pd) = builtin_point_data(name);
        let ms = solve_multipliers(&pd).map_err(|e| e.to_string())?;
        let strong = strong_critical_cone(&pd);
        for (k, v) in ms.vertices.iter().enumerate() {
            let mform = critical_cone_multiplier_form(&pd, &v.mu).map_err(|e| e.to_string())?;
            let (checked, disagreements) = sampled_agreement(&strong, &mform, 1000, 10 * k as u64);
            ensure!(
                checked == 2000 && disagreements == 0,
                "{name} vertex {k}: {disagreements} of {checked}"
            );
            total += checked;
        }
    }
    Ok(format!("{total} directions, 0 disagreements"))
}

struct Pair {
    rows: Vec<[f64; 3]>,
    h: [[f64; 3]; 3],
}

impl Pair {
    fn member(&self, d: &[f64; 3]) -> bool {
        self.rows.iter().all(|a| a[0] * d[0] + a[1] * d[1] + a[2] * d[2] <= 1e-12)
    }

    fn quad(&self, d: &[f64; 3]) -> f64 {
        let h = &self.h;
        let mut s = 0.0;
        for i in 0..3 {
            s += d[i] * (h[i][0] * d[0] + h[i][1] * d[1] + h[i][2] * d[2]);
        }
        s
    }
}

#[allow(clippy::needless_range_loop)]
fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=4);
            let rows = (0..k)
                .map(|_| {
                    let mut r = [0.0; 3];
                    for v in r.iter_mut().take(n) {
                        *v = rng.random_range(-1.0..1.0);
                    }
                    r
                })
                .collect();
            let mut h = [[0.0; 3]; 3];
            for i in 0..n {
                for j in i..n {
                    let v = rng.random_range(-1.0..1.0);
                    h[i][j] = v;
                    h[j][i] = v;
                }
            }
            Pair { rows, h }
        })
        .collect()
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Grid minimum over cone ∩ sphere: an angular grid at step 1e-3 plus points
/// on every facet boundary and every edge, so constrained minima on faces are
/// approximated to the same resolution as interior ones.
fn grid_minima(n: usize, pairs: &[Pair]) -> Vec<Option<f64>> {
    const STEP: f64 = 1e-3;
    let mut best: Vec<Option<f64>> = vec![None; pairs.len()];
    let visit = |best: &mut Vec<Option<f64>>, d: &[f64; 3]| {
        for (b, pr) in best.iter_mut().zip(pairs) {
            if pr.member(d) {
                let q = pr.quad(d);
                if b.is_none_or(|v| q < v) {
                    *b = Some(q);
                }
            }
        }
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let circle = |u: [f64; 3], v: [f64; 3], f: &mut dyn FnMut(&[f64; 3])| {
        let steps = (two_pi / STEP).ceil() as usize;
        for s in 0..steps {
            let (sn, cs) = (s as f64 * two_pi / steps as f64).sin_cos();
            f(&[cs * u[0] + sn * v[0], cs * u[1] + sn * v[1], cs * u[2] + sn * v[2]]);
        }
    };
    if n == 2 {
        circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], &mut |d| visit(&mut best, d));
        for pr in pairs {
            for a in &pr.rows {
                for s in [1.0, -1.0] {
                    visit(&mut best, &unit([-s * a[1], s * a[0], 0.0]));
                }
            }
        }
        return best;
    }

    let theta_steps = (std::f64::consts::PI / STEP).ceil() as usize;
    let threads = std::thread::available_parallelism().map_or(4, |c| c.get());
    let chunk = theta_steps.div_ceil(threads);
    let partial: Vec<Vec<Option<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    let mut local: Vec<Option<f64>> = vec![None; pairs.len()];
                    for i in t * chunk..((t + 1) * chunk).min(theta_steps + 1) {
                        let theta = std::f64::consts::PI * i as f64 / theta_steps as f64;
                        let (st, ct) = theta.sin_cos();
                        let phi_steps = ((two_pi * st) / STEP).ceil().max(1.0) as usize;
                        let (ds, dc) = (two_pi / phi_steps as f64).sin_cos();
                        let (mut s, mut c) = (0.0f64, 1.0f64);
                        for _ in 0..phi_steps {
                            let d = [st * c, st * s, ct];
                            for (b, pr) in local.iter_mut().zip(pairs) {
                                if pr.member(&d) {
                                    let q = pr.quad(&d);
                                    if b.is_none_or(|v| q < v) {
                                        *b = Some(q);
                                    }
                                }
                            }
                            (s, c) = (s * dc + c * ds, c * dc - s * ds);
                        }
                    }
                    local
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for local in partial {
        for (b, l) in best.iter_mut().zip(local) {
            if let Some(v) = l {
                if b.is_none_or(|cur| v < cur) {
                    *b = Some(v);
                }
            }
        }
    }
    for pr in pairs {
        for (i, a) in pr.rows.iter().enumerate() {
            let a = unit(*a);
            let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let u = unit(cross(a, helper));
            let v = cross(a, u);
            circle(u, v, &mut |d| visit(&mut best, d));
            for b in &pr.rows[i + 1..] {
                let e = cross(a, *b);
                if e.iter().map(|x| x * x).sum::<f64>() > 1e-24 {
                    let e = unit(e);
                    visit(&mut best, &e);
                    visit(&mut best, &[-e[0], -e[1], -e[2]]);
                }
            }
        }
    }
    best
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for n in [2usize, 3] {
        let pairs = random_pairs(n, 50, 100 + n as u64);
        let grid = grid_minima(n, &pairs);
        for (k, (pr, g)) in pairs.iter().zip(&grid).enumerate() {
            let cone = ConeRep {
                a_in: Matrix::from_fn(pr.rows.len(), n, |r, c| pr.rows[r][c]),
                in_rows: (0..pr.rows.len()).map(FunctionId::Ineq).collect(),
                ..ConeRep::whole_space(n)
            };
            let h = Matrix::from_fn(n, n, |r, c| pr.h[r][c]);
            let res = min_quadratic_on_cone(&h, &cone).map_err(|e| e.to_string())?;
            ensure!(
                res.certified && res.method == QuadMethod::FacialEnumeration,
                "n={n} pair {k}: {:?}",
                res.method
            );
            match (res.min_value, g) {
                (Some(a), Some(b)) => {
                    worst = worst.max((a - b).abs());
                    ensure!((a - b).abs() <= 1e-5, "n={n} pair {k}: facial {a} vs grid {b}");
                }
                (None, None) => {}
                (a, b) => return Err(format!("n={n} pair {k}: facial {a:?} vs grid {b:?}")),
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} pairs, max |facial − grid| {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let mut circle = RunConfig::builtin("circle");
    circle.arc_directions = ArcDirections::Explicit(vec![vec![0.0, 1.0]]);
    circle.delta = 0.25;
    let mut ex2_arc = RunConfig::builtin("paper-example-2");
    ex2_arc.arc_directions = ArcDirections::Explicit(vec![vec![1.0, 0.0]]);
    let configs = [
        RunConfig::builtin("paper-example-1"),
        RunConfig::builtin("paper-example-2"),
        circle,
        ex2_arc,
    ];
    let mut bytes = 0;
    for c in &configs {
        let a = to_json(&run(c).map_err(|e| e.to_string())?);
        let b = to_json(&run(c).map_err(|e| e.to_string())?);
        ensure!(a == b, "{:?}: reports differ", c.source);
        bytes += a.len();
    }
    Ok(format!("4 configurations, {bytes} bytes identical"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "first worked example reproduced", criterion_1),
        (2, "second worked example reproduced", criterion_2),
        (3, "circle arc against its closed form", criterion_3),
        (4, "parabola arc diagnostic", criterion_4),
        (5, "arc property suite on the constant-rank battery", criterion_5),
        (6, "AD against central differences", criterion_6),
        (7, "critical cone forms agree", criterion_7),
        (8, "cone minimization against a brute-force grid", criterion_8),
        (9, "byte-identical reports", criterion_9),
    ];
    let mut failed = 0;
    for (k, title, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {k}: PASS  {title}: {detail} [{secs:.2} s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {k}: FAIL  {title}: {why} [{secs:.2} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
