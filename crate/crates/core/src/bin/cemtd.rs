fn main() {
    let code = cemtd::harness::cli_main(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr());
    std::process::exit(code);
}
