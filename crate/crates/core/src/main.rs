fn main() {
    std::process::exit(sidewalk_audit::cli::main_with_args(std::env::args_os()));
}
