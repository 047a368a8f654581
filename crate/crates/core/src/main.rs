fn main() {
    std::process::exit(ortg_lab::cli::run(std::env::args_os()));
}
