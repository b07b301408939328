use std::process::ExitCode;

fn main() -> ExitCode {
    twostage::pipeline::cli_main()
}
