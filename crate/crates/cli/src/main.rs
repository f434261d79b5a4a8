fn main() {
    std::process::exit(lpp_cli::run(std::env::args_os()));
}
