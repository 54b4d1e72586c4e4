fn main() {
    std::process::exit(xsimkit::cli::run(std::env::args_os()));
}
