fn main() {
    let code = ascf::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
