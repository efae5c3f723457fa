//! Trajectories near the saddle of `½(x² − y²)`, starting just off the ridge.
//!
//! The correction scales the gradient component along the tracked direction by
//! `1 − α`. With the default `α = 5` that component is reversed: tracking the
//! negative-curvature axis (force convention) pulls the iterate back onto the
//! saddle, tracking the positive-curvature axis (as written) pushes it up the
//! `x` wall. Plain Adam escapes along `y` on its own. `α = 0.5` only damps the
//! tracked component.
//!
//! cargo run --example saddle_escape

use deo::prelude::*;

fn trajectory(label: &str, dimer: Option<(SignConvention, f64)>) -> deo::Result<()> {
    let problem = make_quadratic(&QuadraticSpec { lambdas: vec![1.0, -1.0] })?;
    let steps = 400;
    let schedule = Schedule { lr_max: 1e-2, lr_min: 0.0, total: steps };
    let mut theta = ParamVector::from_slice(&[1.0, 1e-6])?;
    let mut base = BaseOptimizer::new(BaseKind::Adam, 2, AdamConfig::default(), SgdConfig::default());
    let mut state = match dimer {
        Some((sign, alpha)) => {
            let cfg = DimerConfig { sign_convention: sign, eta_rot: 50.0, alpha, ..DimerConfig::default() };
            Some(DimerState::random(cfg, 2, &RngSeed::new(0, "dimer"))?)
        }
        None => None,
    };
    print!("{label:<16}");
    for t in 1..=steps {
        let lr = schedule.lr(t);
        let (next, rec) = match state.as_mut() {
            Some(s) => {
                let cfg = DeoConfig { dimer: s.config, ..DeoConfig::default() };
                deo_step(&problem, &theta, t, lr, &cfg, s, &mut base, None)?
            }
            None => base_step(&problem, &theta, t, lr, &mut base, None)?,
        };
        theta = next;
        if t % 100 == 0 {
            print!("  t={t:<3} L={:>9.5} y={:>9.2e}", rec.loss, theta[1]);
        }
    }
    println!();
    Ok(())
}

fn main() -> deo::Result<()> {
    trajectory("adam", None)?;
    trajectory("as-written α=5", Some((SignConvention::AsWritten, 5.0)))?;
    trajectory("force α=5", Some((SignConvention::ForceConvention, 5.0)))?;
    trajectory("force α=0.5", Some((SignConvention::ForceConvention, 0.5)))?;
    Ok(())
}
