//! All six optimizers on one landscape with shared seeds. Extra arguments are
//! passed through as run flags; set `CSV=path` to keep the merged telemetry.
//!
//! cargo run --release --example compare_optimizers -- --landscape mlp --steps 2000
//! cargo run --release --example compare_optimizers -- --landscape rosenbrock --steps 3000 --lr 1e-3

use deo::prelude::*;
use deo::runner::write_csv;

fn main() -> deo::Result<()> {
    let extra: Vec<String> = std::env::args().skip(1).collect();
    let configs = ["sgd", "adam", "adamw", "deo-sgd", "deo-adam", "deo-adamw"]
        .iter()
        .map(|opt| {
            let mut args = vec!["--opt".to_string(), opt.to_string()];
            args.extend(extra.iter().cloned());
            parse_config(&args)
        })
        .collect::<deo::Result<Vec<_>>>()?;
    let cmp = compare(&configs)?;
    print!("{}", cmp.table());
    if let Ok(path) = std::env::var("CSV") {
        write_csv(std::fs::File::create(&path)?, &cmp.merged_records())?;
        println!("wrote {path}");
    }
    Ok(())
}
