fn main() {
    std::process::exit(blind_deconv::cli::run(std::env::args_os()));
}
