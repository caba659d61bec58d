//! `mediaclaw` command line. Every subcommand goes through the same
//! registry and engine entry points as the HTTP gateway.
//!
//! Exit codes: 0 success, 1 an [`ApiError`] (printed to stderr as canonical
//! JSON), 2 usage error.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use futures::StreamExt;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{build_request, serve, ApiError, InvokeBody};
use crate::app::MediaClaw;
use crate::engine::RunState;
use crate::media::ArtifactId;
use crate::providers::stub::{StubMode, StubServer};
use crate::routing::{validate_config, RoutingConfig, RoutingError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_API_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mediaclaw",
    version,
    about = "Capability middle layer: tools, routing, skills and runs"
)]
pub struct Cli {
    /// Data directory holding routing.json, artifacts/ and runs/.
    #[arg(long, env = "MEDIACLAW_HOME", default_value = ".mediaclaw", global = true)]
    pub home: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tool catalog.
    #[command(subcommand)]
    Capabilities(CapabilitiesCmd),
    /// Invoke one tool and print the resulting artifact id.
    Invoke(InvokeArgs),
    /// Skill catalog and runs.
    #[command(subcommand)]
    Skill(SkillCmd),
    /// Inspect skill runs.
    #[command(subcommand)]
    Runs(RunsCmd),
    /// Fetch stored artifacts.
    #[command(subcommand)]
    Artifacts(ArtifactsCmd),
    /// Check or install a routing config.
    #[command(subcommand)]
    Config(ConfigCmd),
    /// Run the HTTP gateway until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8780")]
        listen: SocketAddr,
    },
    /// Run the self-hosted provider stub until interrupted.
    Stub {
        #[arg(long, default_value = "127.0.0.1:8790")]
        listen: SocketAddr,
        /// mirror, bad-manifest, or an HTTP status such as 500.
        #[arg(long, default_value = "mirror", value_parser = parse_stub_mode)]
        mode: StubMode,
    },
}

#[derive(Debug, Subcommand)]
pub enum CapabilitiesCmd {
    List,
}

#[derive(Debug, Args)]
pub struct InvokeArgs {
    pub tool_name: String,
    #[arg(long, default_value = "{}")]
    pub params: String,
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SkillCmd {
    List,
    Run {
        name: String,
        #[arg(long, default_value = "{}")]
        params: String,
        /// Print events as they arrive, then the final artifact ids.
        #[arg(long)]
        follow: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum RunsCmd {
    List,
    Show { run_id: String },
}

#[derive(Debug, Subcommand)]
pub enum ArtifactsCmd {
    Get {
        artifact_id: String,
        /// Write the manifest here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigCmd {
    Validate {
        path: PathBuf,
    },
    Apply {
        path: PathBuf,
        /// Apply to a running gateway instead of the local home.
        #[arg(long)]
        gateway: Option<String>,
    },
}

fn parse_stub_mode(s: &str) -> Result<StubMode, String> {
    match s {
        "mirror" => Ok(StubMode::Mirror),
        "bad-manifest" => Ok(StubMode::BadManifest),
        other => other
            .parse::<u16>()
            .map(StubMode::Status)
            .map_err(|_| format!("unknown stub mode {other:?}")),
    }
}

enum Failure {
    Api(ApiError),
    Usage(String),
}

impl<E: Into<ApiError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Api(e.into())
    }
}

type CliResult = Result<(), Failure>;

/// Parses `argv` (including the program name) and runs the command.
pub async fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli, out).await {
        Ok(()) => EXIT_OK,
        Err(Failure::Api(e)) => {
            let _ = writeln!(err, "{}", e.to_canonical_json());
            EXIT_API_ERROR
        }
        Err(Failure::Usage(message)) => {
            let _ = writeln!(err, "{message}");
            EXIT_USAGE
        }
    }
}

fn line<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult {
    let text = crate::canonical::to_string(value).map_err(|e| ApiError::new("IO_ERROR", e.to_string()))?;
    writeln!(out, "{text}").map_err(io_error)
}

fn io_error(e: std::io::Error) -> Failure {
    Failure::Api(ApiError::new("IO_ERROR", e.to_string()))
}

fn parse_params(text: &str, schema_help: impl FnOnce() -> String) -> Result<Map<String, Value>, Failure> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Usage(format!(
            "--params must be a JSON object\n{}",
            schema_help()
        ))),
        Err(e) => Err(Failure::Usage(format!(
            "--params is not valid JSON: {e}\n{}",
            schema_help()
        ))),
    }
}

fn schema_help<T: Serialize>(label: &str, schema: &T) -> String {
    let schema = crate::canonical::to_string(schema).unwrap_or_default();
    format!("{label} parameters: {schema}")
}

async fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    let home = cli.home;
    match cli.command {
        Command::Config(ConfigCmd::Validate { path }) => return validate(&path, out),
        Command::Config(ConfigCmd::Apply {
            path,
            gateway: Some(url),
        }) => return apply_remote(&path, &url, out).await,
        Command::Stub { listen, mode } => {
            let stub = StubServer::start(listen, mode).await.map_err(io_error)?;
            writeln!(out, "stub listening on {}", stub.base_url()).map_err(io_error)?;
            let _ = tokio::signal::ctrl_c().await;
            return Ok(());
        }
        _ => {}
    }

    let app = Arc::new(MediaClaw::open(&home)?);
    match cli.command {
        Command::Capabilities(CapabilitiesCmd::List) => {
            for listing in app.registry().list_capabilities() {
                line(out, &listing)?;
            }
        }
        Command::Invoke(args) => {
            let capability = app.registry().tool(&args.tool_name)?;
            let params = parse_params(&args.params, || {
                schema_help(&args.tool_name, &capability.descriptor().param_schema)
            })?;
            let request = build_request(
                &app,
                &args.tool_name,
                InvokeBody {
                    params,
                    provider: args.provider,
                    model: args.model,
                },
            )?;
            let result = app.registry().invoke(&request).await?;
            writeln!(out, "{}", result.artifact_id.as_str()).map_err(io_error)?;
        }
        Command::Skill(SkillCmd::List) => {
            for skill in app.engine().skills() {
                line(out, &skill)?;
            }
        }
        Command::Skill(SkillCmd::Run { name, params, follow }) => {
            let skill = app.engine().skill(&name)?;
            let params = parse_params(&params, || schema_help(&name, &skill.params))?;
            let run_id = app.engine().run_skill(&name, &params)?;
            // The run lives in this process, so the command always waits.
            if !follow {
                writeln!(out, "{run_id}").map_err(io_error)?;
            }
            let mut events = Box::pin(app.engine().stream_events(&run_id, 0)?);
            while let Some(event) = events.next().await {
                if follow {
                    line(out, &event)?;
                }
            }
            let record = app.engine().get_run(&run_id)?;
            if record.state != RunState::Succeeded {
                let info = record.error.unwrap_or_else(|| crate::engine::ErrorInfo {
                    code: crate::engine::RESTART_CODE.into(),
                    message: "run did not finish".into(),
                });
                return Err(Failure::Api(ApiError::new(&info.code, info.message)));
            }
            if follow {
                for id in &record.final_outputs {
                    writeln!(out, "{}", id.as_str()).map_err(io_error)?;
                }
            }
        }
        Command::Runs(RunsCmd::List) => {
            for run in app.engine().list_runs() {
                line(out, &run)?;
            }
        }
        Command::Runs(RunsCmd::Show { run_id }) => line(out, &app.engine().get_run(&run_id)?)?,
        Command::Artifacts(ArtifactsCmd::Get { artifact_id, out: path }) => {
            let artifact = app.store().get(&ArtifactId::from(artifact_id.as_str()))?;
            let manifest = artifact.payload.to_canonical_json();
            match path {
                Some(path) => std::fs::write(&path, manifest).map_err(io_error)?,
                None => writeln!(out, "{manifest}").map_err(io_error)?,
            }
        }
        Command::Config(ConfigCmd::Apply { path, gateway: None }) => {
            let config = RoutingConfig::load(&path)?;
            let version = app.routing().apply(config)?;
            writeln!(out, "config_version {version}").map_err(io_error)?;
        }
        Command::Serve { listen } => {
            let listener = tokio::net::TcpListener::bind(listen).await.map_err(io_error)?;
            let addr = listener.local_addr().map_err(io_error)?;
            writeln!(out, "gateway listening on http://{addr}").map_err(io_error)?;
            serve(app, listener, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(io_error)?;
        }
        Command::Config(ConfigCmd::Validate { .. } | ConfigCmd::Apply { gateway: Some(_), .. })
        | Command::Stub { .. } => {
            unreachable!("handled above")
        }
    }
    Ok(())
}

fn validate(path: &std::path::Path, out: &mut dyn Write) -> CliResult {
    let config = RoutingConfig::load(path)?;
    let violations = validate_config(&config);
    if !violations.is_empty() {
        return Err(RoutingError::ValidationFailed(violations).into());
    }
    writeln!(out, "valid (version {})", config.version).map_err(io_error)
}

async fn apply_remote(path: &std::path::Path, url: &str, out: &mut dyn Write) -> CliResult {
    let config = RoutingConfig::load(path)?;
    let response = reqwest::Client::new()
        .put(format!("{}/v1/routing", url.trim_end_matches('/')))
        .header("content-type", "application/json")
        .body(config.to_canonical_json())
        .send()
        .await
        .map_err(|e| ApiError::new("TRANSPORT_ERROR", e.to_string()))?;
    let ok = response.status().is_success();
    let text = response
        .text()
        .await
        .map_err(|e| ApiError::new("TRANSPORT_ERROR", e.to_string()))?;
    if !ok {
        let error = serde_json::from_str::<ApiError>(&text).unwrap_or_else(|_| ApiError::new("REMOTE_ERROR", text));
        return Err(Failure::Api(error));
    }
    writeln!(out, "{text}").map_err(io_error)
}
