fn main() {
    std::process::exit(thingc::cli::run(std::env::args_os()));
}
