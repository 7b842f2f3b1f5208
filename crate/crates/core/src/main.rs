fn main() {
    std::process::exit(nsmajorant::harness::cli::main_with_args(std::env::args_os()));
}
