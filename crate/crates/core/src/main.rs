fn main() {
    std::process::exit(treegrower::cli::run(std::env::args_os()));
}
