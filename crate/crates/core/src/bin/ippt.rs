fn main() {
    std::process::exit(ippt::harness::cli_main(std::env::args_os()));
}
