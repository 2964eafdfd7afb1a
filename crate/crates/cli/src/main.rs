use std::process::ExitCode;
use std::thread;

use clap::Parser;
use sct_cli::{execute, Cli};

/// Symbolic exploration and deep data structures recurse on the host stack.
const STACK_BYTES: usize = 64 << 20;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(move || {
            let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
            execute(cli, &mut out, &mut err)
        })
        .expect("spawn worker thread")
        .join()
        .unwrap_or(101);
    ExitCode::from(code as u8)
}
