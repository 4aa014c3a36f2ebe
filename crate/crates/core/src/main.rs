fn main() {
    std::process::exit(dilato::cli::run(std::env::args_os()));
}
