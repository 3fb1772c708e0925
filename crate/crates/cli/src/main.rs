fn main() {
    std::process::exit(qhall_cli::run(std::env::args_os()));
}
