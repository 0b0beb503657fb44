fn main() { std::process::exit(clusterlens::cli::run_cli(std::env::args_os())); }
