fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NJSM_LOG", "warn")).init();
    std::process::exit(njsm::cli_io::run(std::env::args_os()));
}
