fn main() {
    std::process::exit(socopf_cli::run(std::env::args_os()));
}
