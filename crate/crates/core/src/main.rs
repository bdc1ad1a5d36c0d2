fn main() {
    std::process::exit(isolab::cli::run(std::env::args_os()));
}
