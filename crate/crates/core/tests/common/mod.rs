#![allow(dead_code)]

use optcond::fixtures;
use optcond::model::{evaluate_point, PointData, Problem};

pub struct Fixture {
    pub name: &'static str,
    pub problem: Problem,
    pub point: Vec<f64>,
}

impl Fixture {
    pub fn point_data(&self) -> PointData {
        evaluate_point(&self.problem, &self.point, 1e-8).unwrap()
    }
}

fn fixture(name: &'static str, n: usize, f: &str, ineq: &[&str], eq: &[&str], point: &[f64]) -> Fixture {
    Fixture {
        name,
        problem: Problem::from_sources(n, f, ineq, eq).unwrap(),
        point: point.to_vec(),
    }
}

/// Problems whose constraint gradients keep constant rank near the point:
/// linear constraints, independent nonlinear equalities, and circle variants.
pub fn constant_rank_battery() -> Vec<Fixture> {
    let circle = fixtures::builtin("circle").unwrap();
    vec![
        Fixture {
            name: "circle",
            point: circle.point.clone().unwrap(),
            problem: circle,
        },
        fixture("sphere", 3, "x1", &[], &["x1^2 + x2^2 + x3^2 - 1"], &[0.0, 0.0, 1.0]),
        fixture("sphere-halfspace", 3, "x1", &["x1"], &["x1^2 + x2^2 + x3^2 - 1"], &[0.0, 0.0, 1.0]),
        fixture("orthant", 2, "x1 + x2", &["-x1", "-x2"], &[], &[0.0, 0.0]),
        fixture(
            "linear-3d",
            3,
            "x1",
            &["x1 + x2 + x3", "-x1 + 2*x2"],
            &["x1 - x3"],
            &[0.0, 0.0, 0.0],
        ),
        fixture("redundant-linear", 2, "x2", &["-x1", "-2*x1"], &[], &[0.0, 0.0]),
        fixture(
            "circle-two-sided",
            2,
            "-x1",
            &["x1^2 + x2^2 - 1", "1 - x1^2 - x2^2"],
            &[],
            &[1.0, 0.0],
        ),
        fixture("paraboloid", 3, "x3", &["-x1"], &["x3 - x1^2 - x2^2"], &[0.0, 0.0, 0.0]),
        fixture("circle-radius-2", 2, "x2", &[], &["x1^2 + x2^2 - 4"], &[0.0, 2.0]),
        fixture("shifted-circle", 2, "x1", &[], &["(x1 - 1)^2 + (x2 + 1)^2 - 1"], &[1.0, 0.0]),
        fixture(
            "duplicated-circle",
            2,
            "x1",
            &[],
            &["x1^2 + x2^2 - 1", "2*x1^2 + 2*x2^2 - 2"],
            &[0.6, 0.8],
        ),
        fixture("exp-inactive", 2, "x1^2", &["exp(x1) - 3"], &["x1 + x2"], &[0.0, 0.0]),
        fixture("log-curve", 2, "x2", &[], &["log(x1) - x2"], &[1.0, 0.0]),
        fixture(
            "sphere-plane",
            3,
            "x3",
            &[],
            &["x1^2 + x2^2 + x3^2 - 1", "x1 + x2 + x3 - 1"],
            &[1.0, 0.0, 0.0],
        ),
    ]
}

/// Every problem used by the suites, builtins first.
pub fn all_problems() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = fixtures::BUILTIN_NAMES
        .iter()
        .map(|&name| {
            let p = fixtures::builtin(name).unwrap();
            Fixture {
                name,
                point: p.point.clone().unwrap(),
                problem: p,
            }
        })
        .collect();
    out.extend(constant_rank_battery().into_iter().filter(|f| f.name != "circle"));
    out
}

pub fn builtin_point_data(name: &str) -> (Problem, PointData) {
    let p = fixtures::builtin(name).unwrap();
    let pd = evaluate_point(&p, p.point.as_ref().unwrap(), 1e-8).unwrap();
    (p, pd)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
