//! Plugging a user-defined loss surface into the runner. Himmelblau's function
//! has four minima, four saddles and one local maximum.
//!
//! cargo run --example custom_problem

use deo::prelude::*;
use deo::runner::run_on;

struct Himmelblau;

impl Problem for Himmelblau {
    fn name(&self) -> &str {
        "himmelblau"
    }

    fn dim(&self) -> usize {
        2
    }

    fn loss(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> deo::Result<f64> {
        let (x, y) = (theta[0], theta[1]);
        Ok((x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2))
    }

    fn grad(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> deo::Result<ParamVector> {
        let (x, y) = (theta[0], theta[1]);
        let a = x * x + y - 11.0;
        let b = x + y * y - 7.0;
        ParamVector::new(vec![4.0 * x * a + 2.0 * b, 2.0 * a + 4.0 * y * b])
    }
}

fn main() -> deo::Result<()> {
    for (what, at) in [("local maximum", [-0.2708, -0.9230]), ("saddle", [3.3852, 0.0739])] {
        let theta = ParamVector::from_slice(&at)?;
        let eig = eig_sym(&hessian_fd(&Himmelblau, &theta, 1e-5, None)?.matrix)?;
        println!("Hessian eigenvalues at the {what} {at:?}: {:.3?}", eig.values);
    }

    for opt in ["adam", "deo-adam"] {
        for seed in 0..3 {
            let seed = seed.to_string();
            let cfg = parse_config(&["--opt", opt, "--steps", "3000", "--lr", "2e-2", "--seed", &seed])?;
            let out = run_on(&cfg, &Himmelblau)?;
            let p = &out.final_params;
            println!(
                "{opt:<9} seed {seed}: ({:>7.4}, {:>7.4})  loss {:.2e}",
                p[0],
                p[1],
                out.summary.final_loss.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
