fn main() {
    std::process::exit(phardy::cli::run(std::env::args_os()));
}
