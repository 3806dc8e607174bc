fn main() {
    std::process::exit(fno_edge_cli::main_with_args(std::env::args_os()));
}
