fn main() {
    std::process::exit(navgraph::cli::main_with(std::env::args_os()));
}
