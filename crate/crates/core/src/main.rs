fn main() {
    std::process::exit(clinperturb::cli::main());
}
