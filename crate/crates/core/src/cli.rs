//! Command implementations behind the `netcode` binary.
//!
//! Ingest files hold one record per line:
//!
//! ```text
//! <patient_id> <window> <admin:16 hex> <nurse:16 hex> <physician-lab:16 hex>
//! ```
//!
//! Fields are separated by whitespace or commas; blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::blockcode;
use crate::gf256;
use crate::hierarchy::{
    flatten_record, run_pipeline, HierarchyConfig, HierarchyError, ModuleLayout, ModuleSelector, PatientRecordMatrix,
    RECORD_MODULES, RECORD_ROWS,
};
use crate::simnet::{self, SimError, Topology};
use crate::store::{GenerationKey, PutOutcome, StoreCatalog, StoreError, StoreLock, StoredBlock};

/// Seed used when none is given, so documented invocations reproduce.
pub const DEFAULT_SEED: u64 = 2012;

/// Pipeline draws allowed per stored block before ingest gives up.
const MAX_DRAWS_PER_BLOCK: usize = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("self-test found {0} failures")]
    SelfTest(usize),
}

impl CliError {
    /// 1 for domain errors, 2 for usage and parse errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Hierarchy(_) | CliError::Store(StoreError::Hierarchy(_)) => 2,
            CliError::Sim(SimError::Parse { .. } | SimError::TooFewTrials { .. } | SimError::InvalidK) => 2,
            _ => 1,
        }
    }
}

fn parse_hex8(field: &str) -> Result<[u8; RECORD_ROWS], String> {
    if field.len() != 2 * RECORD_ROWS {
        return Err(format!(
            "module field {field:?} has {} hex digits, expected {} ({} bytes)",
            field.len(),
            2 * RECORD_ROWS,
            RECORD_ROWS
        ));
    }
    let mut out = [0u8; RECORD_ROWS];
    for (i, b) in out.iter_mut().enumerate() {
        let pair = field.get(2 * i..2 * i + 2).ok_or_else(|| format!("bad hex in {field:?}"))?;
        *b = u8::from_str_radix(pair, 16).map_err(|_| format!("bad hex pair {pair:?}"))?;
    }
    Ok(out)
}

pub fn parse_record_line(line: &str) -> Result<PatientRecordMatrix, String> {
    let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
    if fields.len() != 2 + RECORD_MODULES {
        return Err(format!("expected {} fields, found {}", 2 + RECORD_MODULES, fields.len()));
    }
    let window: u32 = fields[1].parse().map_err(|_| format!("bad window {:?}", fields[1]))?;
    let mut columns = [[0u8; RECORD_ROWS]; RECORD_MODULES];
    for (m, col) in columns.iter_mut().enumerate() {
        *col = parse_hex8(fields[2 + m])?;
    }
    Ok(PatientRecordMatrix::from_columns(fields[0], window, columns))
}

pub fn parse_records(text: &str) -> Result<Vec<PatientRecordMatrix>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| parse_record_line(l.trim()).map_err(|message| CliError::Parse { line: n + 1, message }))
        .collect()
}

pub fn format_record_line(rec: &PatientRecordMatrix) -> String {
    let cols: Vec<String> = rec.columns().iter().map(|c| to_hex(c)).collect();
    format!("{} {} {}", rec.patient_id, rec.window, cols.join(" "))
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Name of the storage node holding block `i` of a generation.
pub fn storage_node(i: usize) -> String {
    format!("node-{}", i + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub records: usize,
    pub generations: usize,
    pub blocks: usize,
}

/// Codes one record through the hierarchy and stores `k + 1` server-level
/// blocks, each on its own storage node. Any previous generation with the
/// same key is replaced.
pub fn ingest_record(
    cat: &mut StoreCatalog,
    rec: &PatientRecordMatrix,
    config: &HierarchyConfig,
    rng: &mut ChaCha8Rng,
) -> Result<usize, CliError> {
    let key = GenerationKey::new(&rec.patient_id, rec.window)?;
    cat.remove_generation(&key);
    let payloads: Vec<Vec<u8>> = flatten_record(rec).into_iter().map(|p| p.payload).collect();
    let target = RECORD_MODULES + 1;
    let mut stored = 0;
    let mut draws = 0;
    while stored < target {
        if draws == MAX_DRAWS_PER_BLOCK * target {
            let rank = cat.rank(&key).unwrap_or(0);
            return Err(StoreError::Undecodable { key, rank, k: RECORD_MODULES }.into());
        }
        draws += 1;
        let run = run_pipeline(config, &payloads, rng)?;
        let block = StoredBlock::new(key.clone(), storage_node(stored), run.server.composed, run.server.payload);
        if cat.put_block(block)? != PutOutcome::Redundant {
            stored += 1;
        }
    }
    Ok(stored)
}

pub fn cmd_ingest(
    input: &Path,
    store: &Path,
    readers: usize,
    clients: usize,
    seed: u64,
) -> Result<IngestSummary, CliError> {
    let config = HierarchyConfig::new(RECORD_MODULES, readers, clients)?;
    let text = fs::read_to_string(input)?;
    let records = parse_records(&text)?;
    let _lock = StoreLock::acquire(store)?;
    let mut cat = if store.exists() { StoreCatalog::load(store)? } else { StoreCatalog::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys = std::collections::BTreeSet::new();
    let mut blocks = 0;
    for rec in &records {
        blocks += ingest_record(&mut cat, rec, &config, &mut rng)?;
        keys.insert((rec.patient_id.clone(), rec.window));
    }
    cat.save_atomic(store)?;
    Ok(IngestSummary { records: records.len(), generations: keys.len(), blocks })
}

pub fn cmd_retrieve(
    store: &Path,
    patient_id: &str,
    window: u32,
    mask: &str,
) -> Result<Vec<(String, [u8; RECORD_ROWS])>, CliError> {
    let sel = ModuleSelector::parse(mask)?;
    if sel.is_empty() {
        return Err(HierarchyError::EmptySelector.into());
    }
    let cat = StoreCatalog::load(store)?;
    let key = GenerationKey::new(patient_id, window)?;
    let layout = ModuleLayout::default();
    Ok(cat.get_record(&key, &sel)?.into_iter().map(|c| (layout.names[c.module].clone(), c.bytes)).collect())
}

pub fn format_columns(cols: &[(String, [u8; RECORD_ROWS])]) -> String {
    cols.iter().map(|(name, bytes)| format!("{name} {}\n", to_hex(bytes))).collect()
}

pub fn cmd_bench(topology: &Path, k: usize, trials: usize, seed: u64) -> Result<String, CliError> {
    if trials < simnet::MIN_BENCH_TRIALS {
        return Err(CliError::Usage(format!("--trials must be at least {}, got {trials}", simnet::MIN_BENCH_TRIALS)));
    }
    let text = fs::read_to_string(topology)?;
    let top = Topology::parse(&text)?;
    let mut out = String::new();
    if top == Topology::figure21() {
        let f = simnet::figure21_scenario(seed, trials.max(simnet::FIGURE21_MIN_TRIALS));
        writeln!(
            out,
            "# figure21 trials={} uncoded_innovative={:.4} coded_innovative={:.4}",
            f.trials, f.uncoded_fraction, f.coded_fraction
        )
        .unwrap();
    }
    let report = simnet::bench_download(&top, k, trials, seed)?;
    out.push_str(&report.to_csv());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSummary {
    pub repaired: usize,
    pub degraded: usize,
    pub new_blocks: usize,
}

/// Repairs the store after `origin` fails and swaps the result in
/// atomically. Holds the store lock for the whole read-modify-write.
pub fn cmd_repair(store: &Path, origin: &str, seed: u64) -> Result<RepairSummary, CliError> {
    let _lock = StoreLock::acquire(store)?;
    let mut cat = StoreCatalog::load(store)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = cat.repair(origin, &mut rng);
    cat.save_atomic(store)?;
    Ok(RepairSummary {
        repaired: report.repaired.len(),
        degraded: report.degraded.len(),
        new_blocks: report.new_blocks.len(),
    })
}

/// Exhaustive field and block-code sweeps.
pub fn cmd_selftest() -> Result<String, CliError> {
    let field = gf256::exhaustive_field_check();
    let code = blockcode::exhaustive_code_check();
    let out = format!(
        "gf256: 255 inverses and 255 multiplication bijections checked, {field} failures\n\
         hamming(7,4): 120 codeword pairs and 112 single-bit errors checked, {code} failures\n"
    );
    if field + code > 0 {
        return Err(CliError::SelfTest(field + code));
    }
    Ok(out)
}
