fn main() {
    std::process::exit(corrdiff::commands::run(std::env::args_os()));
}
