fn main() {
    std::process::exit(ris_crlb_cli::run(std::env::args_os()));
}
