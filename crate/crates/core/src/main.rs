use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut stdout = std::io::stdout().lock();
    let code = vidguide::cli::execute(std::env::args_os(), &mut stdout);
    let _ = stdout.flush();
    std::process::exit(code);
}
