fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ferrojet_cli::run(&args));
}
