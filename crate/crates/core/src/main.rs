fn main() {
    std::process::exit(fdd_reciprocity::cli::run(std::env::args_os()));
}
