fn main() {
    std::process::exit(ratchet_cli::run_command(std::env::args_os()));
}
