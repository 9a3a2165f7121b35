fn main() {
    std::process::exit(reflexnet::cli::run_cli(std::env::args_os()));
}
