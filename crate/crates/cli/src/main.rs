use std::process::ExitCode;

fn main() -> ExitCode {
    crowdctl::main_with_args(std::env::args_os())
}
