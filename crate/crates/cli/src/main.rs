use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("ANNODIFF_LOG", "info")).init();
    std::process::exit(annodiff_cli::run(std::env::args_os()));
}
