fn main() {
    std::process::exit(scarseg_cli::run(std::env::args_os()));
}
