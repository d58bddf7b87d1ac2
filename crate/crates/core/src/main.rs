fn main() {
    std::process::exit(critavg::cli::main_with_args(std::env::args_os()));
}
