fn main() {
    std::process::exit(lwcoint::cli::run(std::env::args_os()));
}
