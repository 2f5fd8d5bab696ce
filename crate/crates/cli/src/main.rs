mod config;
mod output;
mod run;

use clap::Parser;

use config::CliError;

/// Worker count for the parallel per-field computations. Affects wall
/// time only: rows are reduced in grid order, so output bytes are
/// identical at any thread count.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NVSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        CliError::Config(format!(
            "NVSIM_THREADS must be a positive integer (got '{raw}')"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Config(
            "NVSIM_THREADS must be a positive integer (got '0')".into(),
        ));
    }
    // a pool may already exist (tests); the setting still only affects speed
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn real_main() -> Result<(), CliError> {
    let cli = config::Cli::parse();
    init_threads()?;
    let cfg = config::resolve(cli)?;
    run::run(cfg)
}

fn main() {
    match real_main() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
