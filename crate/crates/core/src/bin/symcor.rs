fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = symcor::cli::main_dispatch(&argv, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
