fn main() {
    std::process::exit(distortion_pls::cli::run(std::env::args_os()));
}
