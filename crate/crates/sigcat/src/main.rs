fn main() {
    std::process::exit(sigcat::cli::run(std::env::args_os()));
}
