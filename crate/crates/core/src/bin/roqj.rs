fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROQJ_LOG", "warn")).init();
    std::process::exit(roqj::cli::run(std::env::args_os()));
}
