use clap::Parser;

fn main() {
    let cli = wonglens_cli::Cli::parse();
    if let Err(e) = wonglens_cli::run(cli) {
        eprintln!("wonglens: {e}");
        std::process::exit(e.exit_code());
    }
}
