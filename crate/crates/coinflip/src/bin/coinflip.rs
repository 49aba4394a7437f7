fn main() {
    std::process::exit(coinflip::cli::main_entry());
}
