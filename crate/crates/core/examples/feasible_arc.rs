//! Build the local diffeomorphism for a direction and trace the feasible arc
//! it induces, then check the arc properties sample by sample.
//!
//! `cargo run --example feasible_arc -- 0.25` sets the half-width of the grid.

use optcond::arc::{arc_for_direction, ArcOptions};
use optcond::fixtures;
use optcond::model::evaluate_point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.25);
    let p = fixtures::builtin("circle").expect("builtin");
    let pd = evaluate_point(&p, &[1.0, 0.0], 1e-8)?;
    let opts = ArcOptions {
        delta,
        samples: 11,
        ..ArcOptions::default()
    };
    let a = arc_for_direction(&p, &pd, &[0.0, 1.0], &opts)?;
    println!(
        "sigma rows {:?}, K = {:?}, cond(phi') = {:.3}",
        a.sigma.rows, a.phi.k, a.phi.condition
    );
    println!("{:>8} {:>20} {:>20} {:>10}", "t", "zeta_1", "zeta_2", "|h|");
    for ((t, z), h) in a.arc.t.iter().zip(&a.arc.points).zip(&a.arc.h) {
        println!("{t:>8.4} {:>20.15} {:>20.15} {:>10.1e}", z[0], z[1], h[0].abs());
    }
    println!("zeta'(0) = {:?}", a.arc.derivative);
    let pr = &a.properties;
    println!(
        "arc1 {} arc2 {} arc3 {} arc4 {} arc5 {} feasible for t >= 0: {}",
        pr.arc1.pass, pr.arc2.pass, pr.arc3.pass, pr.arc4.pass, pr.arc5.pass, pr.feasible_forward.pass
    );

    // Where the constant-rank premise breaks, the same construction leaves an
    // inequality that should stay at zero.
    let q = fixtures::builtin("paper-example-2").expect("builtin");
    let qd = evaluate_point(&q, &[0.0, 0.0], 1e-8)?;
    let b = arc_for_direction(&q, &qd, &[1.0, 0.0], &ArcOptions::default())?;
    let w = &b.properties.arc2;
    println!(
        "parabola: arc2 pass {} worst {:.3e} for {:?} at t = {:?}",
        w.pass, w.worst, w.worst_function, w.worst_t
    );
    Ok(())
}
