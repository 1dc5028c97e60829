fn main() {
    std::process::exit(mgp_clearing::cli::run(std::env::args_os()));
}
