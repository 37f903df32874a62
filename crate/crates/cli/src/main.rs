use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout();
    ExitCode::from(revcurve_cli::commands::run(std::env::args_os(), &mut stdout))
}
