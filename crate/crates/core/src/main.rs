fn main() {
    std::process::exit(summary_loop::cli::run(std::env::args_os()));
}
