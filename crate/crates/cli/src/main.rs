fn main() {
    if let Err(e) = skpca_cli::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
