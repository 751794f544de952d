use clap::Parser;

fn main() {
    let cli = acerl::cli::Cli::parse();
    if let Err(e) = acerl::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(acerl::cli::exit_code(&e));
    }
}
