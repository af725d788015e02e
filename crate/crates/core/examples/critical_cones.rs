//! Linearized and critical cones as explicit row systems, direction sampling,
//! and minimizing a quadratic form over a polyhedral cone.

use optcond::cones::{
    critical_cone_multiplier_form, linearized_cone, membership, min_quadratic_on_cone, sample_directions, strong_critical_cone, ConeRep,
};
use optcond::fixtures;
use optcond::kkt::solve_multipliers;
use optcond::linalg::Matrix;
use optcond::model::{evaluate_point, FunctionId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = fixtures::builtin("paper-example-2").expect("builtin");
    let pd = evaluate_point(&p, &[0.0, 0.0], 1e-8)?;

    let lin = linearized_cone(&pd);
    let crit = strong_critical_cone(&pd);
    println!("linearized cone rows  {}", lin.a_in);
    println!("critical cone rows    {}", crit.a_in);

    let mu = solve_multipliers(&pd)?.vertices[0].mu.clone();
    let mform = critical_cone_multiplier_form(&pd, &mu)?;
    let sample = sample_directions(&crit, 5, 1);
    for d in &sample.directions {
        println!(
            "d = [{:+.4}, {:+.4}]  in multiplier form: {}",
            d[0],
            d[1],
            membership(&mform, d, 1e-8)
        );
    }

    // x1*x2 is indefinite, but nonnegative on the first orthant.
    let h = Matrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
    let orthant = ConeRep {
        a_in: Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
        in_rows: vec![FunctionId::Ineq(0), FunctionId::Ineq(1)],
        ..ConeRep::whole_space(2)
    };
    let r = min_quadratic_on_cone(&h, &orthant)?;
    println!(
        "min of x1*x2 on the orthant: {:?} at {:?} ({:?}, {} faces)",
        r.min_value, r.witness, r.method, r.faces_examined
    );
    let whole = min_quadratic_on_cone(&h, &ConeRep::whole_space(2))?;
    println!("min of x1*x2 on the plane:   {:?}", whole.min_value);
    Ok(())
}
