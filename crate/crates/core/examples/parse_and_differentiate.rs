//! Parse an expression, then get its value, gradient and Hessian by forward
//! mode AD and compare against central differences.
//!
//! `cargo run --example parse_and_differentiate -- "x1^2*sin(x2) + exp(x1/x2)" 0.5 1.2`

use optcond::expr::{fd_grad_hess, grad_hess, parse, DEFAULT_FD_STEP};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "x1^2*sin(x2) + exp(x1/x2)".into());
    let mut x: Vec<f64> = args.map(|a| a.parse()).collect::<Result<_, _>>()?;
    if x.is_empty() {
        x = vec![0.5, 1.2];
    }
    let e = parse(&source, x.len())?;
    let ad = grad_hess(&e, &x)?;
    let fd = fd_grad_hess(&e, &x, DEFAULT_FD_STEP)?;

    println!("f       = {e}");
    println!("x       = {x:?}");
    println!("value   = {:.15}", ad.value);
    println!("grad AD = {:?}", ad.gradient);
    println!("grad FD = {:?}", fd.gradient);
    let n = x.len();
    for i in 0..n {
        let ad_row: Vec<String> = (0..n).map(|j| format!("{:>12.6}", ad.hess(i, j))).collect();
        let fd_row: Vec<String> = (0..n).map(|j| format!("{:>12.6}", fd.hess(i, j))).collect();
        println!("H[{i}]    AD {}   FD {}", ad_row.join(" "), fd_row.join(" "));
    }
    Ok(())
}
