fn main() {
    std::process::exit(event_embed::cli::run(std::env::args_os()));
}
