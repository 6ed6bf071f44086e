use clap::Parser;
use pcd_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let command_line = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(&cli, &command_line) {
        Ok(outcome) => {
            if !outcome.converged {
                eprintln!("warning: optimizer did not converge");
            }
            std::process::exit(outcome.exit_code());
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
