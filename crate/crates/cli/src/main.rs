use std::process::ExitCode;

use clap::Parser;
use sketchproj_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let (kind, flags) = Cli::parse().command.split();
    let outcome = flags.into_config(kind).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(exit_code(&out) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
