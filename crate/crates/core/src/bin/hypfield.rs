fn main() {
    std::process::exit(hypfield::cli::cli_main(std::env::args_os()));
}
