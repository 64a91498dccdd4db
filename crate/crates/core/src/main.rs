use std::io;
use std::process::ExitCode;

use jumptime::cli::{parse_args, run};

fn main() -> ExitCode {
    let config = match parse_args(std::env::args().skip(1)) {
        Ok(c) => c,
        Err(e) => {
            if e.status == 0 {
                print!("{}", e.message);
            } else {
                eprintln!("{}", e.message.trim_end());
            }
            return ExitCode::from(e.status as u8);
        }
    };
    let status = run(&config, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(status as u8)
}
