fn main() {
    std::process::exit(rfsweep_cli::main_with_args(std::env::args_os()));
}
