fn main() {
    std::process::exit(varlasso::cli::run(std::env::args_os()));
}
