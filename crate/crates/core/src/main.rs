fn main() {
    std::process::exit(jobtune::cli::run(std::env::args_os()));
}
