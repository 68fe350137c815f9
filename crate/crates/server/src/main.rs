use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

#[derive(Parser)]
#[command(name = "patchsmith-server", about = "Interactive patchsmith modeling sessions over HTTP and WebSocket")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory of static assets (e.g. the browser client) served at `/`.
    #[arg(long)]
    assets: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, patchsmith_server::router(Default::default(), args.assets)).await
}
