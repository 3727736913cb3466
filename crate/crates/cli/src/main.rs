fn main() {
    std::process::exit(ghzauth_cli::run_from_args(std::env::args_os()));
}
