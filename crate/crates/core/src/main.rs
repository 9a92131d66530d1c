fn main() {
    std::process::exit(inertial::cli::run(std::env::args_os()));
}
