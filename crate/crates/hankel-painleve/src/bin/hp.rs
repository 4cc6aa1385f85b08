fn main() {
    std::process::exit(hankel_painleve::cli::run(std::env::args_os()));
}
