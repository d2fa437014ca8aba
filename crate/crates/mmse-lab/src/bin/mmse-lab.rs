use std::io::Write;

fn main() {
    let mut out = std::io::stdout();
    let code = mmse_lab::cli::run_with_args(std::env::args_os(), &mut out);
    let _ = out.flush();
    std::process::exit(code);
}
