use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netcode_core::cli::{self, CliError, DEFAULT_SEED};

/// Network-coded storage and distribution of patient records.
#[derive(Parser)]
#[command(name = "netcode", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code records from a text file into the store
    Ingest {
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        readers: usize,
        #[arg(long, default_value_t = 2)]
        clients: usize,
    },
    /// Decode a record and print the selected module columns
    Retrieve {
        patient_id: String,
        window: u32,
        #[arg(long)]
        store: PathBuf,
        /// Three binary digits: admin, nurse, physician-lab
        #[arg(long, default_value = "111")]
        mask: String,
    },
    /// Compare coded and uncoded download times on a topology
    Bench {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Replace blocks lost with a failed storage node
    Repair {
        origin: String,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Exhaustive field and block-code checks
    Selftest,
}

fn execute(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Ingest { input, store, seed, readers, clients } => {
            let s = cli::cmd_ingest(&input, &store, readers, clients, seed)?;
            Ok(format!(
                "ingested {} records: {} generations, {} blocks written to {}\n",
                s.records,
                s.generations,
                s.blocks,
                store.display()
            ))
        }
        Command::Retrieve { patient_id, window, store, mask } => {
            Ok(cli::format_columns(&cli::cmd_retrieve(&store, &patient_id, window, &mask)?))
        }
        Command::Bench { topology, k, trials, seed } => cli::cmd_bench(&topology, k, trials, seed),
        Command::Repair { origin, store, seed } => {
            let s = cli::cmd_repair(&store, &origin, seed)?;
            Ok(format!("repaired {} generations ({} new blocks), {} degraded\n", s.repaired, s.new_blocks, s.degraded))
        }
        Command::Selftest => cli::cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("netcode: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
