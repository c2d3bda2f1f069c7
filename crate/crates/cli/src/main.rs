use clap::Parser;
use eqsens_cli::{run, Cli, EXIT_OK};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
