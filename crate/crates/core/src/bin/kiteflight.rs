fn main() {
    std::process::exit(kiteflight::cli::run(std::env::args_os()));
}
