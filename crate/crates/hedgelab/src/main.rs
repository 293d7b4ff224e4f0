fn main() {
    std::process::exit(hedgelab::cli::main_entry());
}
