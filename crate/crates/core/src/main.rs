fn main() {
    std::process::exit(dbar_akns::cli::run(std::env::args_os()));
}
