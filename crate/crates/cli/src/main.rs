//! `fastscreen`: replay simulations, synthetic corpora and the HTTP server.

use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fastscreen_core::corpus::{import_csv, write_csv};
use fastscreen_core::sim::{generate_synthetic, simulate, SyntheticParams};
use fastscreen_core::SessionConfig;
use fastscreen_service::SessionStore;

#[derive(Parser)]
#[command(name = "fastscreen", version, about = "Active-learning document screening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen a fully labeled corpus, answering queries from its labels.
    Simulate {
        /// CSV with a `label` column (yes/no) on every row.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        target_recall: f64,
        #[arg(long, default_value_t = 10)]
        batch_size: usize,
        /// Included documents needed before switching to certainty sampling.
        #[arg(long, default_value_t = 30)]
        threshold: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that a simulated reviewer flips a label.
        #[arg(long, default_value_t = 0.0)]
        error_rate: f64,
        /// Keyword query for the first batches; random draws without one.
        #[arg(long)]
        query: Option<String>,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a labeled synthetic corpus.
    Generate {
        #[arg(long, default_value_t = 5000)]
        docs: usize,
        #[arg(long, default_value_t = 250)]
        relevant: usize,
        /// Fraction of a relevant document's tokens that are topical.
        #[arg(long, default_value_t = 0.6)]
        signal: f64,
        #[arg(long, default_value_t = 2000)]
        vocab: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Where sessions are persisted and resumed from.
        #[arg(long, env = "FASTSCREEN_DATA_DIR", default_value = "fastscreen-data")]
        data_dir: PathBuf,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .init();
    match Cli::parse().command {
        Command::Simulate {
            input,
            target_recall,
            batch_size,
            threshold,
            seed,
            error_rate,
            query,
            out,
        } => {
            let report = import_csv(&input)?;
            if report.skipped() > 0 {
                eprintln!(
                    "skipped {} rows ({} without title, {} malformed)",
                    report.skipped(),
                    report.skipped_empty_title,
                    report.malformed_rows
                );
            }
            if report.unrecognized_labels > 0 {
                bail!("{} rows have an unrecognised label", report.unrecognized_labels);
            }
            let config = SessionConfig {
                target_recall,
                batch_size,
                strategy_threshold: threshold,
                rng_seed: seed,
                bootstrap_query: query,
            };
            let result = simulate(&report.corpus, &config, error_rate)
                .with_context(|| format!("simulating {}", input.display()))?;
            let mut w = output(out.as_ref())?;
            serde_json::to_writer_pretty(&mut w, &result)?;
            writeln!(w)?;
            w.flush()?;
            eprintln!(
                "screened {} of {} ({:.1}%), true recall {:.3}, estimated recall {}, stop {:?}",
                result.stop_screened,
                result.n_documents,
                100.0 * result.cost,
                result.true_recall,
                result.estimated_recall.map_or("n/a".into(), |r| format!("{r:.3}")),
                result.stop_reason
            );
        }
        Command::Generate {
            docs,
            relevant,
            signal,
            vocab,
            seed,
            out,
        } => {
            let synth = generate_synthetic(&SyntheticParams {
                n_docs: docs,
                n_relevant: relevant,
                vocab_size: vocab,
                signal,
                seed,
            })?;
            let mut w = output(out.as_ref())?;
            let rows = write_csv(&synth.labeled(), &mut w)?;
            w.flush()?;
            eprintln!("wrote {rows} documents, {relevant} relevant");
        }
        Command::Serve { port, host, data_dir } => {
            let store = SessionStore::open(&data_dir)?;
            eprintln!(
                "data dir {} ({} sessions resumed)",
                data_dir.display(),
                store.ids().len()
            );
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(fastscreen_service::serve(SocketAddr::new(host, port), store))?;
        }
    }
    Ok(())
}
