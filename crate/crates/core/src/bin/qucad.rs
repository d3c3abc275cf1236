fn main() {
    std::process::exit(qucad::harness::cli_main(std::env::args_os()));
}
