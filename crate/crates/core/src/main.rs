fn main() {
    std::process::exit(gsrisk::cli::run(std::env::args_os()));
}
