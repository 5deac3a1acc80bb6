fn main() {
    std::process::exit(liquidstate::cli::run(std::env::args_os()));
}
