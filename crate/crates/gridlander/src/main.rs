fn main() {
    std::process::exit(gridlander::cli::run(std::env::args_os()));
}
