//! LICQ, MFCQ, CRCQ and RCRCQ at a point, with the certificate behind each
//! decided verdict.
//!
//! Two discs touching at the origin: the active gradients are opposite, so
//! LICQ and MFCQ both fail (a Gordan dual vector certifies the second), and
//! the pair regains full rank at any point off the vertical axis.

use optcond::cq::{check_crcq, check_licq, check_mfcq, check_rcrcq, recheck_rank_mismatch, NeighborhoodSampler};
use optcond::model::{evaluate_point, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = Problem::from_sources(2, "-x2", &["x1^2 + (x2 - 1)^2 - 1", "x1^2 + (x2 + 1)^2 - 1"], &[])?;
    let pd = evaluate_point(&p, &[0.0, 0.0], 1e-8)?;
    println!("active: {:?}", pd.active_ids());

    let licq = check_licq(&pd, 1e-8)?;
    let mfcq = check_mfcq(&pd, 1e-8)?;
    println!("LICQ  {:?}  {}", licq.status, serde_json::to_string(&licq.certificate)?);
    println!("MFCQ  {:?}  {}", mfcq.status, serde_json::to_string(&mfcq.certificate)?);

    let sampler = NeighborhoodSampler::new(pd.x.clone(), 0);
    for (name, v) in [
        ("CRCQ", check_crcq(&p, &pd, &sampler, 1e-8)?),
        ("RCRCQ", check_rcrcq(&p, &pd, &sampler, 1e-8)?),
    ] {
        println!("{name:<5} {:?}", v.status);
        if let Some(c) = &v.certificate {
            println!("      {}", serde_json::to_string(c)?);
            println!("      re-verified: {:?}", recheck_rank_mismatch(&p, c));
        }
    }
    Ok(())
}
