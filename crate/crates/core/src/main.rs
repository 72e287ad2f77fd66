fn main() {
    std::process::exit(apsk_capacity::cli::run(std::env::args_os()));
}
