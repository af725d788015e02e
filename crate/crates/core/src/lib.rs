//! Pointwise optimality analysis for smooth nonlinear programs
//!
//! ```text
//! minimize f(x)  subject to  g_i(x) ≤ 0,  h_j(x) = 0
//! ```
//!
//! Given the problem as expression strings and a candidate point `x̄`, the
//! crate reports which constraint qualifications hold (LICQ and MFCQ decided
//! with certificates, CRCQ and RCRCQ by a seeded neighbourhood rank scan),
//! the KKT multiplier polyhedron, the strong second-order necessary condition
//! over the critical cone, and, for any linearized-cone direction, a traced
//! feasible arc with its properties checked sample by sample.
//!
//! ```
//! use optcond::{cq, kkt, model};
//!
//! let p = model::Problem::from_sources(2, "-x2", &["x1^2 + (x2 - 1)^2 - 1", "x1^2 + (x2 + 1)^2 - 1"], &[]).unwrap();
//! let pd = model::evaluate_point(&p, &[0.0, 0.0], 1e-8).unwrap();
//! assert_eq!(cq::check_licq(&pd, 1e-8).unwrap().status, cq::Status::Fails);
//! let ms = kkt::solve_multipliers(&pd).unwrap();
//! assert!(ms.kkt && !ms.bounded);
//! ```
//!
//! Modules, bottom up: [`expr`] (parser and second-order forward AD),
//! [`linalg`] (rank, nullspace, simplex, NNLS, Newton), [`model`], [`cones`],
//! [`cq`], [`kkt`], [`arc`], and [`report`], which strings them together for
//! the `optcond analyze` command.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arc;
pub mod cones;
pub mod cq;
pub mod expr;
pub mod fixtures;
pub mod kkt;
pub mod linalg;
pub mod model;
pub mod report;
