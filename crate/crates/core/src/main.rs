use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = crf::cli::Cli::parse();
    match crf::cli::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
