fn main() {
    std::process::exit(ndsq::cli::main_with(std::env::args_os()));
}
