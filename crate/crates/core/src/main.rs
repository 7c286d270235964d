fn main() {
    std::process::exit(engine_deeponet::cli::run(std::env::args_os()));
}
