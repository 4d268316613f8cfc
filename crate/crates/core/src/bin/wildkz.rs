fn main() {
    std::process::exit(wildkz::cli::main_entry());
}
