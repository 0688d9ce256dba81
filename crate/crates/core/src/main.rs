fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = lensopt::cli::run_with(std::env::args(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
