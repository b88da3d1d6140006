use std::process::ExitCode;

fn main() -> ExitCode {
    if let Ok(value) = std::env::var("SIGMAK_THREADS") {
        match value.trim().parse::<usize>() {
            Ok(threads) if threads > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => {
                eprintln!("error: SIGMAK_THREADS must be a positive integer, got `{value}`");
                return ExitCode::from(sigmak::cli::EXIT_USAGE as u8);
            }
        }
    }
    ExitCode::from(sigmak::cli::run(std::env::args_os()) as u8)
}
