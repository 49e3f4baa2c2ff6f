fn main() {
    std::process::exit(monweaver::cli::run(std::env::args_os()));
}
