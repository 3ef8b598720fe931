use std::io;
use std::process::ExitCode;

use mimo_switch::cli::{run, Environment};

fn main() -> ExitCode {
    let code = run(
        std::env::args_os(),
        &Environment::from_process(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code.clamp(0, 255) as u8)
}
