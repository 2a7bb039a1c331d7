fn main() {
    std::process::exit(hyperbolization::cli::run(std::env::args_os()));
}
