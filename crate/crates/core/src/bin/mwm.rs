fn main() {
    std::process::exit(mwmatch::cli::run(std::env::args_os()));
}
