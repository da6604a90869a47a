fn main() {
    let code = mixed_urn::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
