fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let code = augtest::cli::run(std::env::args_os(), &augtest::toolchain::Toolchain::default());
    std::process::exit(code);
}
