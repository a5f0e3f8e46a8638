fn main() {
    std::process::exit(haqt::cli::run(std::env::args_os()));
}
