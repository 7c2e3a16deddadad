use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use classrefine_core::concepts::DecomposeOptions;
use classrefine_core::refine::RefineEngine;
use classrefine_core::store::{load_dictionary, load_store, EmbeddingSource, EncoderEndpoint};
use classrefine_service::{router, AppState, ServiceConfig};

/// Serve refinement sessions over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Concept dictionary file.
    #[arg(long)]
    dict: PathBuf,
    /// Embedding store file used to resolve texts.
    #[arg(long, conflicts_with = "encoder_url", required_unless_present = "encoder_url")]
    store: Option<PathBuf>,
    /// Encoder endpoint accepting POST {"texts": [...]}.
    #[arg(long, requires = "encoder_dim")]
    encoder_url: Option<String>,
    #[arg(long)]
    encoder_dim: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    encoder_timeout_ms: u64,
    /// Sparsity penalty for concept decomposition.
    #[arg(long, default_value_t = 0.05)]
    penalty: f64,
    #[arg(long, env = "HOST", default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "PORT", default_value_t = 8080)]
    port: u16,
    /// Directory for session event logs; sessions found there are replayed
    /// at startup.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    max_upload_mb: usize,
}

fn build(args: &Args) -> Result<AppState, String> {
    let dict = load_dictionary(&args.dict).map_err(|e| e.to_string())?;
    let source: Arc<dyn EmbeddingSource> = match (&args.store, &args.encoder_url) {
        (Some(path), _) => Arc::new(load_store(path).map_err(|e| e.to_string())?),
        (None, Some(url)) => Arc::new(
            EncoderEndpoint::new(
                url.clone(),
                Duration::from_millis(args.encoder_timeout_ms),
                args.encoder_dim.unwrap_or_default(),
            )
            .map_err(|e| e.to_string())?,
        ),
        (None, None) => return Err("either --store or --encoder-url is required".into()),
    };
    if source.dim() != dict.dim() {
        return Err(format!(
            "embedding dimension {} does not match dictionary dimension {}",
            source.dim(),
            dict.dim()
        ));
    }
    if let Some(dir) = &args.log_dir {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    let engine = RefineEngine::new(
        Arc::new(dict),
        DecomposeOptions {
            sparsity_penalty: args.penalty,
            ..Default::default()
        },
    );
    let config = ServiceConfig {
        log_dir: args.log_dir.clone(),
        max_upload_bytes: args.max_upload_mb * 1024 * 1024,
        ..Default::default()
    };
    AppState::new(engine, source, config)
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let state = match build(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let restored = state.session_count();
    let addr = format!("{}:{}", args.host, args.port);
    let listener = match tokio::net::TcpListener::bind(&addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: bind {addr}: {e}");
            return ExitCode::from(3);
        }
    };
    eprintln!("listening on {addr} ({restored} sessions restored)");
    let app = router(Arc::new(state));
    let served = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
