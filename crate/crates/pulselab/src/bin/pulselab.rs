fn main() {
    std::process::exit(pulselab::cli::run(std::env::args_os()));
}
