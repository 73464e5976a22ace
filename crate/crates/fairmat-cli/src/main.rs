fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut out = std::io::stdout();
    let code = fairmat_cli::run(&args, &mut out);
    std::process::exit(code);
}
