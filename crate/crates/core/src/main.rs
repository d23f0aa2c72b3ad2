fn main() {
    std::process::exit(glwire::cli_main());
}
