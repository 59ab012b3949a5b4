fn main() {
    std::process::exit(pcol_cli::run(std::env::args_os()));
}
