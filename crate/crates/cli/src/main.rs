fn main() {
    std::process::exit(optomech_squeeze_cli::run(std::env::args_os()));
}
