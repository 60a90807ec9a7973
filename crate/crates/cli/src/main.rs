fn main() {
    std::process::exit(ramsq_cli::run(std::env::args_os()));
}
