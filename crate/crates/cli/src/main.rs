fn main() {
    std::process::exit(wavefrac_cli::run(std::env::args_os()));
}
