fn main() {
    std::process::exit(gatefid::cli::cli_main(std::env::args_os()));
}
