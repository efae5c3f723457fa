//! The three curvature readings a single rotation produces, against the exact
//! `N̂ᵀHN̂`, as the dimer length shrinks.
//!
//! `curv_paper = (L₂ − L)/ΔR` is a one-sided first difference: it tends to the
//! slope `g·N̂`, not to the curvature. The gradient and second-order forms do
//! converge to `N̂ᵀHN̂`.
//!
//! cargo run --example curvature_estimators

use deo::prelude::*;

fn main() -> deo::Result<()> {
    let problem = make_rosenbrock(2)?;
    let theta = ParamVector::from_slice(&[-0.5, 0.8])?;
    let g = problem.grad(&theta, None)?;
    let n = ParamVector::from_slice(&[0.6, 0.8])?;
    let exact = problem.hessian(&theta).expect("analytic").quadratic_form(n.as_slice());
    println!("g·N̂ = {:.6}   N̂ᵀHN̂ = {exact:.6}\n", g.dot(&n)?);
    println!("{:>8} {:>14} {:>14} {:>14}", "ΔR", "curv_paper", "curv_grad", "curv_2nd");
    for delta_r in [1e-1, 3e-2, 1e-2, 6e-3, 1e-3, 1e-4, 1e-5] {
        let cfg = DimerConfig { delta_r, ..DimerConfig::default() };
        let state = DimerState::with_direction(cfg, &n)?;
        let (_, d) = rotate_once(&problem, &theta, &g, &state, None)?;
        println!(
            "{delta_r:>8.0e} {:>14.6} {:>14.6} {:>14.6}",
            d.curvature_paper, d.curvature_grad, d.curvature_second_order
        );
    }
    Ok(())
}
