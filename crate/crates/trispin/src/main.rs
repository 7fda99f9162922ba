fn main() {
    std::process::exit(trispin::cli::run());
}
