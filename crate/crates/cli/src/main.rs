use clap::Parser;

fn main() {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    // Peek at verbosity before the real parse so logging covers config loading.
    let level = match roadfuse_cli::Cli::try_parse_from(&args).map(|c| c.global.verbose) {
        Ok(0) | Err(_) => "warn",
        Ok(1) => "info",
        Ok(_) => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    std::process::exit(roadfuse_cli::run(args));
}
