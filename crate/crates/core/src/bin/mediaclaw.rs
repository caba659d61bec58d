#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let code =
        mediaclaw::gateway::cli::cli_main(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr()).await;
    std::process::exit(code);
}
