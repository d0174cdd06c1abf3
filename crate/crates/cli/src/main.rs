fn main() {
    std::process::exit(heatroute_cli::main_with_args(std::env::args_os()));
}
