fn main() {
    std::process::exit(odekit_cli::run(std::env::args_os()));
}
