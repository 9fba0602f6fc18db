fn main() {
    online_em::cli::init_logging();
    std::process::exit(online_em::cli::run(std::env::args_os()));
}
