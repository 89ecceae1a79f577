fn main() {
    std::process::exit(coinflip_lab::cli::run(std::env::args_os()));
}
