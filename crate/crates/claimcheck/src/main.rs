fn main() {
    std::process::exit(claimcheck::cli::main_with_args(std::env::args_os()));
}
