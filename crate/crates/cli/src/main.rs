use std::io::IsTerminal;
use std::process::ExitCode;

fn main() -> ExitCode {
    let styled = std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    ExitCode::from(winloop_cli::run(
        std::env::args_os(),
        styled,
        &mut stdout,
        &mut stderr,
    ))
}
