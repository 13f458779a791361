fn main() {
    std::process::exit(reproj::cli::run(std::env::args_os()));
}
