//! Training the 2-16-2 tanh MLP on two moons with Adam and DEO-Adam using the
//! default hyperparameters (lr 6e-4 with cosine decay, f = 10, α = 5).
//!
//! cargo run --release --example mlp_two_moons [steps]

use deo::prelude::*;

fn main() -> deo::Result<()> {
    let steps = std::env::args().nth(1).unwrap_or_else(|| "2000".into());
    let problem = MlpProblem::two_moons_default(0);
    for opt in ["adam", "deo-adam"] {
        let cfg = parse_config(&["--landscape", "mlp", "--opt", opt, "--steps", &steps])?;
        let out = run(&cfg)?;
        println!("{opt}");
        let every = (out.records.len() / 8).max(1);
        for r in out.records.iter().filter(|r| (r.step as usize).is_multiple_of(every)) {
            let curv = r.curv_grad.map_or(String::new(), |c| format!("  curv_grad {c:>9.4}"));
            println!("  step {:>5}  batch loss {:.4}{curv}", r.step, r.loss);
        }
        let s = &out.summary;
        println!(
            "  full-data loss {:.4} -> {:.4}, accuracy {:.3}, {} gradient evaluations\n",
            s.initial_loss,
            s.final_loss.unwrap_or(f64::NAN),
            problem.accuracy(&out.final_params),
            s.total_grad_evals
        );
    }
    Ok(())
}
