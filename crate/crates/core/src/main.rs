fn main() {
    std::process::exit(cascade_asr::cli::run(std::env::args_os()));
}
