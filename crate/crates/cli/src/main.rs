use clap::Parser;

fn main() {
    let cli = bayeskit_cli::cli::Cli::parse();
    let code = match bayeskit_cli::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
