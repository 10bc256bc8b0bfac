fn main() {
    std::process::exit(csafsim::run(std::env::args_os()));
}
