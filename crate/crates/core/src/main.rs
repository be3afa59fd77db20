fn main() {
    std::process::exit(fannet_core::cli::run_cli(std::env::args_os()));
}
