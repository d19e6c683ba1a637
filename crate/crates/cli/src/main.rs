fn main() {
    std::process::exit(sbmclique_cli::run(std::env::args_os()));
}
