use deo::config::parse_config;
use deo::mlp::MlpProblem;
use deo::runner::{compare, csv_string, run, RunOutcome};

fn run_args(args: &[&str]) -> RunOutcome {
    run(&parse_config(args).unwrap()).unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/summary.schema.json");
    let text = std::fs::read_to_string(path).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn adam_solves_convex_bowl() {
    for seed in 0..5 {
        let seed = seed.to_string();
        let out = run_args(&[
            "--landscape", "quadratic", "--lambdas", "1,1", "--opt", "adam", "--steps", "500", "--lr", "1e-2",
            "--seed", &seed,
        ]);
        let final_loss = out.summary.final_loss.unwrap();
        assert!(final_loss < 1e-4, "seed {seed}: {final_loss:e}");
    }
}

#[test]
fn mlp_comparison_completes() {
    let configs: Vec<_> = ["adam", "deo-adam"]
        .iter()
        .map(|opt| parse_config(&["--landscape", "mlp", "--steps", "2000", "--opt", opt]).unwrap())
        .collect();
    let cmp = compare(&configs).unwrap();
    assert_eq!(cmp.exit_code(), 0);
    for s in cmp.summaries() {
        assert_eq!(s.steps_completed, 2000);
        assert!(s.final_loss.unwrap().is_finite());
        assert!(s.final_loss.unwrap() < s.initial_loss);
    }
    let rows = cmp.merged_records();
    assert_eq!(rows.len(), 4000);
    assert!(rows.iter().all(|r| r.loss.is_finite() && r.grad_norm.is_finite()));
}

#[test]
fn compare_with_zero_alpha_matches_plain() {
    let adam = parse_config(&["--landscape", "rosenbrock", "--opt", "adam", "--steps", "200"]).unwrap();
    let deo = parse_config(&["--landscape", "rosenbrock", "--opt", "deo-adam", "--alpha", "0", "--steps", "200"])
        .unwrap();
    let cmp = compare(&[adam, deo]).unwrap();
    let rows = cmp.merged_records();
    let (a, b) = rows.split_at(200);
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.loss.to_bits(), y.loss.to_bits());
    }
}

#[test]
fn trained_mlp_classifies_moons() {
    let out = run_args(&["--landscape", "mlp", "--opt", "adam", "--steps", "2000", "--lr", "1e-2"]);
    let problem = MlpProblem::two_moons_default(0);
    let acc = problem.accuracy(&out.final_params);
    assert!(acc >= 0.95, "accuracy {acc}");
}

#[test]
fn cumulative_evaluations_per_row() {
    for (f, every) in [("1", Some(1u64)), ("3", Some(3)), ("inf", None)] {
        let out = run_args(&["--landscape", "monkey", "--opt", "deo-sgd", "--steps", "31", "--f", f]);
        for r in &out.records {
            let extra = every.map_or(0, |e| r.step / e);
            assert_eq!(r.grad_evals, r.step + extra, "f={f} step {}", r.step);
        }
    }
    let out = run_args(&["--landscape", "monkey", "--opt", "sgd", "--steps", "31"]);
    assert!(out.records.iter().all(|r| r.grad_evals == r.step && r.g_dot_n.is_none()));
}

#[test]
fn summaries_match_schema() {
    let validator = schema();
    let outcomes = [
        run_args(&["--landscape", "monkey", "--steps", "10"]),
        run_args(&["--landscape", "quadratic", "--lambdas", "3,1,-2", "--oracle", "--steps", "30", "--f", "inf"]),
        run_args(&["--landscape", "rosenbrock", "--opt", "sgd", "--lr", "10", "--steps", "50"]),
        run_args(&["--landscape", "mlp", "--opt", "deo-adamw", "--steps", "25", "--sign", "force-convention"]),
    ];
    assert_eq!(outcomes[2].exit_code(), 3);
    for out in &outcomes {
        let value = serde_json::to_value(&out.summary).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}\n{value:#}");
    }
    let mut broken = serde_json::to_value(&outcomes[0].summary).unwrap();
    broken["status"] = "fine".into();
    assert!(!validator.is_valid(&broken));
}

#[test]
fn csv_identical_across_threads() {
    let cfg = parse_config(&["--landscape", "mlp", "--steps", "150", "--opt", "deo-sgd", "--seed", "9"]).unwrap();
    let reference = csv_string(&run(&cfg).unwrap().records);
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let cfg = cfg.clone();
            std::thread::spawn(move || csv_string(&run(&cfg).unwrap().records))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), reference);
    }
}
