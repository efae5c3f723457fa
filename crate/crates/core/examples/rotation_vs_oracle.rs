//! Dimer rotation on a random 10-d quadratic, checked against the dense
//! eigensolver. Prints `|⟨N̂, v⟩|` for the smallest and largest eigenvectors.
//!
//! cargo run --example rotation_vs_oracle [seed]

use deo::prelude::*;
use rand::Rng;

fn main() -> deo::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let dim = 10;
    let mut rng = RngSeed::new(seed, "spectrum").rng();
    let lambdas: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..2.0)).collect();
    let problem = Quadratic::with_spectrum(&lambdas, &random_orthogonal(dim, &RngSeed::new(seed, "basis")))?;

    let theta = random_unit_vector(dim, &RngSeed::new(seed, "theta"))?;
    let g = problem.grad(&theta, None)?;
    let eig = eig_sym(&hessian_fd(&problem, &theta, 1e-5, None)?.matrix)?;
    println!("eigenvalues {:.4?}", eig.values);

    for sign in [SignConvention::ForceConvention, SignConvention::AsWritten] {
        let cfg = DimerConfig { delta_r: 1e-2, eta_rot: 10.0, sign_convention: sign, ..DimerConfig::default() };
        let mut state = DimerState::random(cfg, dim, &RngSeed::new(seed, "dimer"))?;
        println!("\n{}", sign.as_str());
        println!("{:>6} {:>10} {:>10} {:>12}", "iter", "align_min", "align_max", "curv_grad");
        for it in 1..=2000 {
            let (next, diag) = rotate_once(&problem, &theta, &g, &state, None)?;
            state = next;
            if [1, 5, 20, 50, 100, 200, 500, 2000].contains(&it) {
                println!(
                    "{it:>6} {:>10.6} {:>10.6} {:>12.6}",
                    alignment(state.direction(), eig.min_vector())?,
                    alignment(state.direction(), eig.max_vector())?,
                    diag.curvature_grad
                );
            }
        }
    }
    Ok(())
}
