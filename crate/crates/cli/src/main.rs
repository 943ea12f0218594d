fn main() {
    eprintln!("experiment driver not wired up yet");
    std::process::exit(3);
}
