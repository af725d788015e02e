//! Enumerate the KKT multiplier set and test the strong second-order
//! necessary condition at every vertex and ray.

use optcond::fixtures;
use optcond::kkt::{check_ssonc, solve_multipliers};
use optcond::model::evaluate_point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["paper-example-1", "paper-example-2"] {
        let p = fixtures::builtin(name).expect("builtin");
        let pd = evaluate_point(&p, p.point.as_deref().expect("point"), 1e-8)?;
        let ms = solve_multipliers(&pd)?;
        println!("{name}: kkt {} (residual {:.1e}), bounded {}", ms.kkt, ms.residual, ms.bounded);
        for v in &ms.vertices {
            println!("  vertex mu = {:?} lambda = {:?}", v.mu, v.lambda);
        }
        for r in &ms.rays {
            println!("  ray    mu = {:?} lambda = {:?}", r.mu, r.lambda);
        }
        let s = check_ssonc(&pd, &ms)?;
        println!("  SSONC {:?}", s.status);
        for sub in &s.sub_results {
            println!(
                "    {:?} {}: min over critical cone {:?} via {:?}",
                sub.kind, sub.index, sub.result.min_value, sub.result.method
            );
        }
        if let Some(w) = &s.worst {
            println!("  worst: d = {:?}, value {:.6} at mu = {:?}", w.d, w.value, w.multiplier.mu);
        }
    }
    Ok(())
}
