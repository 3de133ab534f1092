fn main() {
    std::process::exit(delay_margin::cli::run(std::env::args_os()));
}
