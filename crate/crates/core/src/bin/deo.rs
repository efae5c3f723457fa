use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use deo::config::{parse_invocation, Invocation};
use deo::mlp::Dataset;
use deo::numeric::RngSeed;
use deo::runner::{compare, output_paths, run, summary_json, write_csv};
use deo::DeoError;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    if argv.iter().skip(1).any(|a| a == "-h" || a == "--help" || a == "-V" || a == "--version") {
        // let clap print help/version itself
        use clap::Parser;
        deo::config::Cli::parse_from(&argv);
    }
    let code = match parse_invocation(&argv).and_then(execute) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("deo: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn env_dir() -> Option<PathBuf> {
    std::env::var_os("DEO_OUT_DIR").map(PathBuf::from)
}

fn execute(inv: Invocation) -> Result<i32, DeoError> {
    match inv {
        Invocation::Run(cfg) => {
            let outcome = run(&cfg)?;
            let json = summary_json(&outcome.summary);
            match output_paths(&cfg, env_dir().as_deref()) {
                Some((csv, summary)) => {
                    write_csv(BufWriter::new(File::create(&csv)?), &outcome.records)?;
                    std::fs::write(&summary, json + "\n")?;
                    eprintln!("wrote {} and {}", csv.display(), summary.display());
                }
                None => {
                    write_csv(io::stdout().lock(), &outcome.records)?;
                    eprintln!("{json}");
                }
            }
            if let Some(e) = &outcome.summary.error {
                let step = outcome.summary.failed_step.unwrap_or(0);
                eprintln!("deo: numeric failure at step {step}: {e}");
            }
            Ok(outcome.exit_code())
        }
        Invocation::Compare { configs, out } => {
            let cmp = compare(&configs)?;
            let records = cmp.merged_records();
            let json = serde_json::to_string_pretty(&cmp.summaries()).expect("summaries serialize");
            let out = out.or_else(|| env_dir().map(|d| d.join("compare.csv")));
            match out {
                Some(csv) => {
                    write_csv(BufWriter::new(File::create(&csv)?), &records)?;
                    std::fs::write(csv.with_extension("json"), json + "\n")?;
                }
                None => write_csv(io::stdout().lock(), &records)?,
            }
            let mut err = io::stderr().lock();
            write!(err, "{}", cmp.table())?;
            Ok(cmp.exit_code())
        }
        Invocation::Dataset { seed, n, noise, out } => {
            Dataset::two_moons(n, noise, &RngSeed::new(seed, "data")).write_csv(&out)?;
            eprintln!("wrote {} points to {}", n, out.display());
            Ok(0)
        }
    }
}
