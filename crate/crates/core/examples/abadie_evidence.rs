//! Empirical Abadie check: sample linearized-cone directions and try to
//! realize each one by a feasible arc.

use optcond::arc::ArcOptions;
use optcond::cq::{check_acq_empirical, Evidence};
use optcond::model::{evaluate_point, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problems = [
        (
            "sphere cap",
            Problem::from_sources(3, "x3", &["-x1"], &["x1^2 + x2^2 + x3^2 - 1"])?,
            vec![0.0, 0.0, 1.0],
        ),
        (
            "orthant",
            Problem::from_sources(2, "x1 + x2", &["-x1", "-x2"], &[])?,
            vec![0.0, 0.0],
        ),
        ("cusp", Problem::from_sources(2, "x1", &["x2 - x1^3", "-x2"], &[])?, vec![0.0, 0.0]),
    ];
    let opts = ArcOptions {
        delta: 1e-2,
        ..ArcOptions::default()
    };
    for (name, p, x) in &problems {
        let pd = evaluate_point(p, x, 1e-8)?;
        let (verdict, arcs) = check_acq_empirical(p, &pd, 6, 1, &opts);
        println!("{name}: {:?}, {}", verdict.status, verdict.note.as_deref().unwrap_or(""));
        if let Some(Evidence::Acq(e)) = &verdict.evidence {
            println!("  realized {}/{}, failures {:?}", e.realized, e.directions_sampled, e.failures);
        }
        for a in &arcs {
            println!(
                "  d = {:?} realized: {}",
                a.arc.direction.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>(),
                a.realized()
            );
        }
    }
    Ok(())
}
