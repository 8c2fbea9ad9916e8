fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GASFLOW_LOG", "info")).init();
    std::process::exit(gasflow::cli::run(std::env::args_os()));
}
