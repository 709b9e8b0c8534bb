fn main() {
    std::process::exit(detox_cli::main_with_process_env());
}
