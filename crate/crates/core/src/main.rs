fn main() {
    let seed = std::env::var(proxsweep::cli::SEED_ENV).ok();
    std::process::exit(proxsweep::cli::main_with_args(std::env::args_os(), seed.as_deref()));
}
