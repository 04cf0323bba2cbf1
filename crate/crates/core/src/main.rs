fn main() {
    std::process::exit(rcif::cli::run(std::env::args_os()));
}
