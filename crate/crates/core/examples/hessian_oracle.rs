//! Finite-difference Hessian plus Jacobi eigendecomposition on Rosenbrock and
//! on the two-moons MLP at initialization.
//!
//! cargo run --example hessian_oracle

use deo::prelude::*;

fn report(name: &str, problem: &dyn Problem, theta: &ParamVector) -> deo::Result<()> {
    let fd = hessian_fd(problem, theta, 1e-5, None)?;
    let eig = eig_sym(&fd.matrix)?;
    let negative = eig.values.iter().filter(|l| **l < -1e-6).count();
    println!("{name}: n = {}, asymmetry before symmetrizing {:.2e}", fd.matrix.n(), fd.asymmetry);
    println!("  λ_min {:.6}  λ_max {:.6}  negative {negative}", eig.values[0], eig.values[eig.values.len() - 1]);
    let recon = eig.reconstruct();
    println!("  reconstruction max error {:.2e}", recon.max_abs_diff(&fd.matrix));
    if let Some(exact) = problem.hessian(theta) {
        println!("  max |FD − analytic| {:.2e}", fd.matrix.max_abs_diff(&exact));
    }
    Ok(())
}

fn main() -> deo::Result<()> {
    let rosen = make_rosenbrock(2)?;
    report("rosenbrock at (1, 1)", &rosen, &ParamVector::from_slice(&[1.0, 1.0])?)?;
    report("rosenbrock at (-0.5, 0.8)", &rosen, &ParamVector::from_slice(&[-0.5, 0.8])?)?;

    let monkey = make_monkey_saddle();
    report("monkey saddle at (0.3, 0.1)", &monkey, &ParamVector::from_slice(&[0.3, 0.1])?)?;

    let mlp = MlpProblem::two_moons_default(0);
    let theta = init_params(&MlpShape::default(), &RngSeed::new(0, "init"));
    report("mlp (82 parameters) at init", &mlp, &theta)?;
    Ok(())
}
