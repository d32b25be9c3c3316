fn main() {
    std::process::exit(kuramoto_core::cli::run(std::env::args_os()));
}
