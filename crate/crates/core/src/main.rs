fn main() {
    std::process::exit(lpgronwall::cli::run(std::env::args_os()));
}
