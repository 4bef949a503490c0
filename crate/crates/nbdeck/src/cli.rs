use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nbdeck_core::embedding::EmbedderHandle;
use nbdeck_core::eval::evaluate_corpus;
use nbdeck_core::matcher::MatchParams;
use nbdeck_core::summarizer::SummarizerHandle;
use nbdeck_core::template::parse_template;
use nbdeck_core::{
    export_deck, generate_deck_with, parse_notebook, template_for, Audience, DeckConfig,
    DeckFormat, DetailLevel,
};

use crate::service::{self, AppState, Backends};

#[derive(Debug, Parser)]
#[command(
    name = "nbdeck",
    version,
    about = "Turn a Jupyter notebook into a slide deck"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a deck from a notebook file.
    Generate(GenerateArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Evaluate section placement over a labeled corpus.
    Eval(EvalArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub notebook: PathBuf,
    #[arg(long, default_value = "technical")]
    pub audience: Audience,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub detail: u8,
    #[arg(long, default_value = "Untitled")]
    pub title: String,
    #[arg(long, default_value = "")]
    pub presenter: String,
    /// json, md or html
    #[arg(long, default_value = "json")]
    pub format: DeckFormat,
    /// Outline template override (TOML).
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// `builtin` or the URL of an embedding endpoint.
    #[arg(long)]
    pub embedder: Option<String>,
    /// `builtin` or the URL of a summarization endpoint.
    #[arg(long)]
    pub summarizer: Option<String>,
    /// Vector dimension of the builtin embedder.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub dimension: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Persist sessions in this directory and reload them on start.
    #[arg(long)]
    pub sessions: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Serve static files (e.g. a built UI) from this directory.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "technical")]
    pub audience: Audience,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub detail: u8,
    /// Vector dimension of the builtin embedder.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub dimension: Option<u32>,
}

/// Flag value if given, else the environment's backends.
pub fn resolve_backends(embedder: Option<&str>, summarizer: Option<&str>) -> Backends {
    let mut b = Backends::from_env();
    match embedder {
        Some("builtin") => b.embedder = EmbedderHandle::builtin(),
        Some(url) => b.embedder = EmbedderHandle::remote(url),
        None => {}
    }
    match summarizer {
        Some("builtin") => b.summarizer = SummarizerHandle::builtin(),
        Some(url) => b.summarizer = SummarizerHandle::remote(url),
        None => {}
    }
    b
}

fn detail(level: u8) -> anyhow::Result<DetailLevel> {
    DetailLevel::try_from(level).map_err(|e| anyhow::anyhow!(e))
}

pub fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let raw = fs::read_to_string(&args.notebook)
        .with_context(|| format!("reading {}", args.notebook.display()))?;
    let doc = parse_notebook(&raw, &args.notebook.to_string_lossy())?;
    let template = match &args.template {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let t = parse_template(&text)?;
            if t.audience != args.audience {
                log::warn!(
                    "template is for {:?}, generating for {:?}",
                    t.audience,
                    args.audience
                );
            }
            t
        }
        None => template_for(args.audience),
    };
    let mut backends = resolve_backends(args.embedder.as_deref(), args.summarizer.as_deref());
    if let Some(d) = args.dimension {
        backends.embedder.set_builtin_dimension(d as usize);
    }
    let config = DeckConfig {
        embedder: backends.embedder,
        summarizer: backends.summarizer,
        ..DeckConfig::new(
            &args.title,
            &args.presenter,
            args.audience,
            detail(args.detail)?,
        )
    };
    let deck = generate_deck_with(&doc, &config, &template, MatchParams::default())?;
    let archive = export_deck(&deck, args.format);
    fs::write(&args.out, &archive.payload)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let empty = deck.slides.iter().filter(|s| s.empty_auto).count();
    eprintln!(
        "{}: {} slides ({} empty auto sections) -> {}",
        deck.deck_id,
        deck.slides.len(),
        empty,
        args.out.display()
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let config = DeckConfig::new("Evaluation", "", args.audience, detail(args.detail)?);
    let mut backends = Backends::from_env();
    if let Some(d) = args.dimension {
        backends.embedder.set_builtin_dimension(d as usize);
    }
    let config = DeckConfig {
        embedder: backends.embedder,
        summarizer: backends.summarizer,
        ..config
    };
    let report = evaluate_corpus(&args.corpus, &args.gold, &config)?;
    report.write_csv(&args.out)?;
    for s in &report.skipped {
        eprintln!("skipped {}: {}", s.path.display(), s.reason);
    }
    eprintln!(
        "{} notebooks evaluated; a section occurs when its slide has generated bullets -> {}",
        report.corpus_size,
        args.out.display()
    );
    Ok(())
}

pub async fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let backends = Backends::from_env();
    let state = match &args.sessions {
        Some(dir) => AppState::with_store(backends, dir)?,
        None => AppState::new(backends),
    };
    let app = match &args.static_dir {
        Some(dir) if dir.is_dir() => service::router_with_static(state, dir),
        Some(dir) => bail!("{} is not a directory", dir.display()),
        None => service::router(state),
    };
    service::serve(SocketAddr::new(args.host, args.port), app).await
}
