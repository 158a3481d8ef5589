fn main() {
    std::process::exit(broxlab::cli::parse_and_dispatch(std::env::args_os()));
}
