fn main() {
    std::process::exit(patchsmith_cli::run(std::env::args_os()));
}
