//! Problems compiled into the library so analyses can run without files.

use crate::model::{load_problem, Problem};

pub const BUILTIN_NAMES: [&str; 3] = ["paper-example-1", "paper-example-2", "circle"];

/// Two tangent discs: MFCQ holds at the origin but the Lagrangian Hessian is
/// indefinite on the critical cone for some multipliers.
const EXAMPLE_1: &str = "\
# minimize x2 over the intersection of two tangent discs' regions
vars 2
objective x2
ineq x1^2 + (x2-1)^2 - 1
ineq 1 - x1^2 - (x2+1)^2
point 0 0
";

/// Parabola over a half-plane: the gradients lose constant rank at the
/// origin yet the second-order condition still holds.
const EXAMPLE_2: &str = "\
vars 2
objective x2
ineq x1^2 - x2
ineq -x2
point 0 0
";

const CIRCLE: &str = "\
# unit circle; (1, 0) minimizes -x1
vars 2
objective -x1
eq x1^2 + x2^2 - 1
point 1 0
";

/// Problem-file text of a builtin.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "paper-example-1" => Some(EXAMPLE_1),
        "paper-example-2" => Some(EXAMPLE_2),
        "circle" => Some(CIRCLE),
        _ => None,
    }
}

pub fn builtin(name: &str) -> Option<Problem> {
    builtin_source(name).map(|s| load_problem(s).expect("builtin fixtures parse"))
}
