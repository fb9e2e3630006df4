fn main() {
    std::process::exit(mpost::cli::run(std::env::args_os().collect()));
}
