fn main() {
    std::process::exit(hiring_sim_cli::run(std::env::args_os()));
}
