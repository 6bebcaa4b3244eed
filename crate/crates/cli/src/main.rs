//! `genu`: queries on multi-matrix algebras, their Hilbert modules and
//! generalized unitaries, plus the verification harness.
//!
//! Exit status: 0 success, 1 a check failed, 2 usage or input error.

mod commands;
mod instance;
mod output;

use clap::{Parser, Subcommand};
use genunitary::harness::InstanceSpec;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "genu", version, about = "Generalized unitaries on Hilbert modules over multi-matrix algebras")]
struct Cli {
    /// Print a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Picard group of the algebra and the image of its automorphisms.
    Pic { file: PathBuf },
    /// Decide whether a phi-unitary exists on the module.
    ExistsUnitary {
        file: PathBuf,
        /// Re-validate a witness printed by an earlier `exists-unitary --json`.
        #[arg(long, value_name = "WITNESS")]
        check_witness: Option<PathBuf>,
    },
    /// The classes of Phi_E with their witnesses.
    Phie { file: PathBuf },
    /// The image of straut(B^a(E)) in Pic(B_E).
    Straut { file: PathBuf },
    /// The chain Phi_E/(Phi_E ∩ gin(B_E)) ⊂ straut/inn ⊂ Pic(B_E) with verdicts.
    Theorem35 { file: PathBuf },
    /// Injectivity and surjectivity of i_phi for the `multMatrix` homomorphism.
    Canonical { file: PathBuf },
    /// Run every registered check on the golden and generated instances.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        max_blocks: usize,
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
        #[arg(long, default_value_t = 3)]
        max_mult: usize,
        /// Omit the per-check results.
        #[arg(long)]
        summary_only: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pic { file } => commands::pic(file),
        Command::ExistsUnitary { file, check_witness } => commands::exists_unitary(file, check_witness.as_deref()),
        Command::Phie { file } => commands::phie(file),
        Command::Straut { file } => commands::straut(file),
        Command::Theorem35 { file } => commands::theorem35(file),
        Command::Canonical { file } => commands::canonical(file),
        Command::Verify { seed, count, max_blocks, max_dim, max_mult, summary_only } => {
            let spec = InstanceSpec {
                seed: *seed,
                max_blocks: *max_blocks,
                max_block_dim: *max_dim,
                max_mult: *max_mult,
                count: *count,
            };
            commands::verify(&spec, *summary_only)
        }
    };
    match result {
        Ok(out) => {
            // The harness report is always machine-readable.
            let body = if cli.json || matches!(cli.command, Command::Verify { .. }) {
                output::pretty(&out.json) + "\n"
            } else {
                out.text
            };
            // A closed pipe on the reader's side is not an error here.
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            ExitCode::from(out.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
