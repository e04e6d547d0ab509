fn main() {
    std::process::exit(pgopt::cli::run(std::env::args_os()));
}
