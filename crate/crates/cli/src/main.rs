fn main() {
    std::process::exit(rarity_cli::run(std::env::args_os()));
}
