fn main() {
    std::process::exit(sgarch::cli::run(std::env::args_os()));
}
