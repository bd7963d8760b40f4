use std::process::exit;

use clap::Parser;

fn main() {
    let cli = cfl_cli::Cli::parse();
    let out = cli.common().out.clone();
    match cfl_cli::execute(&cli) {
        Ok(output) => {
            if let Some(path) = out {
                if let Err(err) = std::fs::write(&path, output.text.as_bytes()) {
                    eprintln!("error: cannot write {}: {err}", path.display());
                    exit(2);
                }
            } else {
                print!("{}", output.text);
            }
            exit(if output.ok { 0 } else { 1 });
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit(2);
        }
    }
}
