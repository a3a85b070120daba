fn main() {
    std::process::exit(gridreg::cli::run(std::env::args_os()));
}
