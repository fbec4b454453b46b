fn main() {
    std::process::exit(nilpotentizer::cli::run(std::env::args_os()));
}
