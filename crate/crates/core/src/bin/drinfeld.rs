use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = drinfeld_padic::cli::dispatch(std::env::args());
    print!("{}", out.stdout);
    let _ = std::io::stdout().flush();
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr.trim_end());
    }
    ExitCode::from(out.code as u8)
}
