fn main() {
    std::process::exit(dyadic_lab::cli::main(std::env::args_os()));
}
