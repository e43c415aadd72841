fn main() {
    std::process::exit(realmono::cli::main_with_args(std::env::args_os()));
}
