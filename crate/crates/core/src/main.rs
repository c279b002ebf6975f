fn main() {
    std::process::exit(ustat_core::cli::main_exit_code());
}
