//! Multilevel coding pipeline: tags are combined at readers, readers at
//! clients, clients at the server.
//!
//! ```text
//! R_j = Σ_i a_ji · T_i        (reader stage, M×N coefficients)
//! C_k = Σ_j p_kj · R_j        (client stage, K×M coefficients)
//! S   = Σ_k α_k  · C_k        (server stage, 1×K coefficients)
//! ```
//!
//! Every packet carries its vector composed down to the N tag sources, so a
//! server packet is an ordinary coded packet over the tags and the stage
//! coefficients can be replayed later from the recorded matrices.
//!
//! The record side maps an 8×3 observation matrix (8 byte rows, one column
//! per capture module) onto a k=3 generation and selects module columns back
//! out on retrieval.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::blockcode::{self, BlockCodeError, PackedBits};
use crate::gf256::{mul_add_slice, FieldMatrix, Gf256};
use crate::rlnc::{random_vector, CodingVector, SourcePacket};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("expected {expected} level input, found {found}")]
    LevelMismatch { expected: Level, found: Level },
    #[error("{found} coefficients supplied for {expected} inputs")]
    LengthMismatch { expected: usize, found: usize },
    #[error("payload width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("composed vectors disagree in length")]
    VectorMismatch,
    #[error("no inputs to combine")]
    Empty,
    #[error("stage dimensions do not chain: {0}")]
    DimensionMismatch(String),
    #[error("hierarchy sizes must all be at least 1")]
    InvalidConfig,
    #[error("module selector has no bit set")]
    EmptySelector,
    #[error("expected {expected} decoded packets, found {found}")]
    PacketCount { expected: usize, found: usize },
    #[error("invalid module selector {0:?}")]
    BadSelector(String),
    #[error(transparent)]
    BlockCode(#[from] BlockCodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Tag,
    Reader,
    Client,
    Server,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Tag => "tag",
            Level::Reader => "reader",
            Level::Client => "client",
            Level::Server => "server",
        })
    }
}

/// N tags, M readers, K clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyConfig {
    pub n_tags: usize,
    pub n_readers: usize,
    pub n_clients: usize,
}

impl HierarchyConfig {
    pub fn new(n_tags: usize, n_readers: usize, n_clients: usize) -> Result<Self, HierarchyError> {
        if n_tags == 0 || n_readers == 0 || n_clients == 0 {
            return Err(HierarchyError::InvalidConfig);
        }
        Ok(Self { n_tags, n_readers, n_clients })
    }

    /// Two tags, two readers, two clients.
    pub fn worked_instance() -> Self {
        Self { n_tags: 2, n_readers: 2, n_clients: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPacket {
    pub level: Level,
    pub node_id: String,
    /// Coefficients over the N tag payloads.
    pub composed: CodingVector,
    pub payload: Vec<u8>,
}

impl LevelPacket {
    /// Tag `index` of `n_tags`, carrying its payload under a unit vector.
    pub fn tag(index: usize, n_tags: usize, payload: Vec<u8>) -> Self {
        Self {
            level: Level::Tag,
            node_id: format!("T{}", index + 1),
            composed: CodingVector::unit(n_tags, index),
            payload,
        }
    }
}

fn combine(
    expected: Level,
    output: Level,
    node_id: String,
    inputs: &[LevelPacket],
    coeffs: &CodingVector,
) -> Result<LevelPacket, HierarchyError> {
    let first = inputs.first().ok_or(HierarchyError::Empty)?;
    if coeffs.len() != inputs.len() {
        return Err(HierarchyError::LengthMismatch { expected: inputs.len(), found: coeffs.len() });
    }
    let (n, width) = (first.composed.len(), first.payload.len());
    let mut composed = CodingVector::zeros(n);
    let mut payload = vec![0u8; width];
    for (p, &c) in inputs.iter().zip(coeffs.coefficients()) {
        if p.level != expected {
            return Err(HierarchyError::LevelMismatch { expected, found: p.level });
        }
        if p.payload.len() != width {
            return Err(HierarchyError::WidthMismatch { expected: width, found: p.payload.len() });
        }
        if p.composed.len() != n {
            return Err(HierarchyError::VectorMismatch);
        }
        composed.mul_add(&p.composed, c);
        mul_add_slice(&mut payload, &p.payload, c);
    }
    Ok(LevelPacket { level: output, node_id, composed, payload })
}

pub fn reader_combine(
    node_id: impl Into<String>,
    tags: &[LevelPacket],
    coeffs: &CodingVector,
) -> Result<LevelPacket, HierarchyError> {
    combine(Level::Tag, Level::Reader, node_id.into(), tags, coeffs)
}

pub fn client_combine(
    node_id: impl Into<String>,
    readers: &[LevelPacket],
    coeffs: &CodingVector,
) -> Result<LevelPacket, HierarchyError> {
    combine(Level::Reader, Level::Client, node_id.into(), readers, coeffs)
}

pub fn server_combine(
    node_id: impl Into<String>,
    clients: &[LevelPacket],
    coeffs: &CodingVector,
) -> Result<LevelPacket, HierarchyError> {
    combine(Level::Client, Level::Server, node_id.into(), clients, coeffs)
}

/// Chains the stage matrices (M×N reader, K×M client, 1×K server) into the
/// 1×N end-to-end coefficient row.
pub fn compose_end_to_end(
    reader: &FieldMatrix,
    client: &FieldMatrix,
    server: &FieldMatrix,
) -> Result<FieldMatrix, HierarchyError> {
    if client.cols() != reader.rows() {
        return Err(HierarchyError::DimensionMismatch(format!(
            "client stage is {}x{} but reader stage has {} rows",
            client.rows(),
            client.cols(),
            reader.rows()
        )));
    }
    if server.rows() != 1 || server.cols() != client.rows() {
        return Err(HierarchyError::DimensionMismatch(format!(
            "server stage must be 1x{}, found {}x{}",
            client.rows(),
            server.rows(),
            server.cols()
        )));
    }
    let mid = client.mul(reader).expect("checked above");
    Ok(server.mul(&mid).expect("checked above"))
}

fn stage_matrix(rows: &[CodingVector]) -> FieldMatrix {
    let rows: Vec<Vec<Gf256>> = rows.iter().map(|v| v.coefficients().to_vec()).collect();
    FieldMatrix::from_rows(&rows).expect("stage rows share one length")
}

/// One pass through all three stages with the coefficients that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineRun {
    pub tags: Vec<LevelPacket>,
    pub readers: Vec<LevelPacket>,
    pub clients: Vec<LevelPacket>,
    pub server: LevelPacket,
    /// M×N
    pub reader_coeffs: FieldMatrix,
    /// K×M
    pub client_coeffs: FieldMatrix,
    /// 1×K
    pub server_coeffs: FieldMatrix,
}

impl PipelineRun {
    pub fn end_to_end(&self) -> FieldMatrix {
        compose_end_to_end(&self.reader_coeffs, &self.client_coeffs, &self.server_coeffs)
            .expect("pipeline stages chain by construction")
    }
}

/// Runs the full pipeline over `tag_payloads` with coefficients drawn from
/// `[1, 255]`. Every reader sees every tag, every client every reader.
pub fn run_pipeline<R: Rng + ?Sized>(
    config: &HierarchyConfig,
    tag_payloads: &[Vec<u8>],
    rng: &mut R,
) -> Result<PipelineRun, HierarchyError> {
    if tag_payloads.len() != config.n_tags {
        return Err(HierarchyError::LengthMismatch { expected: config.n_tags, found: tag_payloads.len() });
    }
    let tags: Vec<LevelPacket> =
        tag_payloads.iter().enumerate().map(|(i, p)| LevelPacket::tag(i, config.n_tags, p.clone())).collect();

    let reader_rows: Vec<CodingVector> = (0..config.n_readers).map(|_| random_vector(config.n_tags, rng)).collect();
    let readers = reader_rows
        .iter()
        .enumerate()
        .map(|(j, c)| reader_combine(format!("R{}", j + 1), &tags, c))
        .collect::<Result<Vec<_>, _>>()?;

    let client_rows: Vec<CodingVector> = (0..config.n_clients).map(|_| random_vector(config.n_readers, rng)).collect();
    let clients = client_rows
        .iter()
        .enumerate()
        .map(|(k, c)| client_combine(format!("C{}", k + 1), &readers, c))
        .collect::<Result<Vec<_>, _>>()?;

    let server_row = random_vector(config.n_clients, rng);
    let server = server_combine("S", &clients, &server_row)?;

    Ok(PipelineRun {
        reader_coeffs: stage_matrix(&reader_rows),
        client_coeffs: stage_matrix(&client_rows),
        server_coeffs: stage_matrix(std::slice::from_ref(&server_row)),
        tags,
        readers,
        clients,
        server,
    })
}

pub const RECORD_ROWS: usize = 8;
pub const RECORD_MODULES: usize = 3;
/// Width of one block-coded module column.
pub const COLUMN_WIDTH: usize = RECORD_ROWS * blockcode::BITS_PER_BYTE / 8;

/// Display names for the three module columns, in column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleLayout {
    pub names: [String; RECORD_MODULES],
}

impl Default for ModuleLayout {
    fn default() -> Self {
        Self { names: ["admin".into(), "nurse".into(), "physician-lab".into()] }
    }
}

/// One observation: 8 byte rows by 3 module columns for a patient and a
/// 15-minute window.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatientRecordMatrix {
    pub patient_id: String,
    pub window: u32,
    pub cells: [[u8; RECORD_MODULES]; RECORD_ROWS],
}

impl PatientRecordMatrix {
    pub fn from_columns(
        patient_id: impl Into<String>,
        window: u32,
        columns: [[u8; RECORD_ROWS]; RECORD_MODULES],
    ) -> Self {
        let mut cells = [[0u8; RECORD_MODULES]; RECORD_ROWS];
        for (m, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                cells[r][m] = v;
            }
        }
        Self { patient_id: patient_id.into(), window, cells }
    }

    pub fn column(&self, module: usize) -> [u8; RECORD_ROWS] {
        std::array::from_fn(|r| self.cells[r][module])
    }

    pub fn columns(&self) -> [[u8; RECORD_ROWS]; RECORD_MODULES] {
        std::array::from_fn(|m| self.column(m))
    }
}

/// Block-codes each module column into one source packet of
/// [`COLUMN_WIDTH`] bytes.
pub fn flatten_record(rec: &PatientRecordMatrix) -> Vec<SourcePacket> {
    (0..RECORD_MODULES).map(|m| SourcePacket::new(m, blockcode::encode_bytes(&rec.column(m)).into_bytes())).collect()
}

fn decode_column(packet: &SourcePacket) -> Result<[u8; RECORD_ROWS], HierarchyError> {
    if packet.payload.len() != COLUMN_WIDTH {
        return Err(HierarchyError::WidthMismatch { expected: COLUMN_WIDTH, found: packet.payload.len() });
    }
    let bits = PackedBits::from_packed(packet.payload.clone(), RECORD_ROWS * blockcode::BITS_PER_BYTE)?;
    let (bytes, _corrections) = blockcode::decode_bytes(&bits)?;
    Ok(bytes.try_into().expect("eight rows decoded"))
}

fn check_decoded(decoded: &[SourcePacket]) -> Result<(), HierarchyError> {
    if decoded.len() != RECORD_MODULES {
        return Err(HierarchyError::PacketCount { expected: RECORD_MODULES, found: decoded.len() });
    }
    Ok(())
}

pub fn unflatten_record(
    patient_id: impl Into<String>,
    window: u32,
    decoded: &[SourcePacket],
) -> Result<PatientRecordMatrix, HierarchyError> {
    check_decoded(decoded)?;
    let mut columns = [[0u8; RECORD_ROWS]; RECORD_MODULES];
    for (m, col) in columns.iter_mut().enumerate() {
        *col = decode_column(&decoded[m])?;
    }
    Ok(PatientRecordMatrix::from_columns(patient_id, window, columns))
}

/// 3×1 binary mask choosing module columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModuleSelector {
    pub mask: [bool; RECORD_MODULES],
}

impl ModuleSelector {
    pub fn new(mask: [bool; RECORD_MODULES]) -> Self {
        Self { mask }
    }

    pub fn all() -> Self {
        Self { mask: [true; RECORD_MODULES] }
    }

    /// Parses three `0`/`1` characters, e.g. `"010"`.
    pub fn parse(s: &str) -> Result<Self, HierarchyError> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(HierarchyError::BadSelector(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        let mask: [bool; RECORD_MODULES] = bits.try_into().map_err(|_| HierarchyError::BadSelector(s.to_string()))?;
        Ok(Self { mask })
    }

    /// The seven masks with at least one bit set.
    pub fn all_valid() -> Vec<ModuleSelector> {
        (1u8..8).map(|b| Self::new([b & 4 != 0, b & 2 != 0, b & 1 != 0])).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

impl fmt::Display for ModuleSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.mask {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleColumn {
    pub module: usize,
    pub bytes: [u8; RECORD_ROWS],
}

/// Block-decodes the selected columns of a decoded generation.
pub fn retrieve_modules(decoded: &[SourcePacket], sel: &ModuleSelector) -> Result<Vec<ModuleColumn>, HierarchyError> {
    if sel.is_empty() {
        return Err(HierarchyError::EmptySelector);
    }
    check_decoded(decoded)?;
    sel.selected().map(|m| Ok(ModuleColumn { module: m, bytes: decode_column(&decoded[m])? })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rlnc::{encode, Decoder, GenerationId};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_payloads(rng: &mut ChaCha8Rng, n: usize, w: usize) -> Vec<Vec<u8>> {
        (0..n).map(|_| (0..w).map(|_| rng.gen()).collect()).collect()
    }

    fn tags_of(payloads: &[Vec<u8>]) -> Vec<LevelPacket> {
        payloads.iter().enumerate().map(|(i, p)| LevelPacket::tag(i, payloads.len(), p.clone())).collect()
    }

    fn apply(v: &CodingVector, payloads: &[Vec<u8>]) -> Vec<u8> {
        let refs: Vec<&[u8]> = payloads.iter().map(Vec::as_slice).collect();
        v.apply(&refs).unwrap()
    }

    #[test]
    fn reader_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let payloads = random_payloads(&mut rng, 2, 10);
        let tags = tags_of(&payloads);

        let r = reader_combine("R1", &tags, &CodingVector::unit(2, 1)).unwrap();
        assert_eq!(r.payload, payloads[1]);
        assert_eq!(r.level, Level::Reader);

        let r = reader_combine("R1", &tags, &CodingVector::from_bytes(&[1, 1])).unwrap();
        let xor: Vec<u8> = payloads[0].iter().zip(&payloads[1]).map(|(a, b)| a ^ b).collect();
        assert_eq!(r.payload, xor);

        let c = random_vector(2, &mut rng);
        let r = reader_combine("R1", &tags, &c).unwrap();
        let sources = SourcePacket::from_payloads(payloads.clone()).unwrap();
        assert_eq!(r.payload, encode(GenerationId(0), &sources, &c).unwrap().payload);
        assert_eq!(r.composed, c);
    }

    #[test]
    fn client_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let payloads = random_payloads(&mut rng, 2, 6);
        let tags = tags_of(&payloads);
        let (a, b) = (random_vector(2, &mut rng), random_vector(2, &mut rng));
        let r1 = reader_combine("R1", &tags, &a).unwrap();
        let r2 = reader_combine("R2", &tags, &b).unwrap();

        let single = client_combine("C1", std::slice::from_ref(&r1), &CodingVector::from_bytes(&[1])).unwrap();
        assert_eq!((single.composed.clone(), single.payload.clone()), (r1.composed.clone(), r1.payload.clone()));

        let p = random_vector(2, &mut rng);
        let c = client_combine("C1", &[r1, r2], &p).unwrap();
        let (ac, bc, pc) = (a.coefficients(), b.coefficients(), p.coefficients());
        let expected = [pc[0] * ac[0] + pc[1] * bc[0], pc[0] * ac[1] + pc[1] * bc[1]];
        assert_eq!(c.composed.coefficients(), &expected);
        assert_eq!(apply(&c.composed, &payloads), c.payload);
    }

    #[test]
    fn server_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let payloads = random_payloads(&mut rng, 2, 4);
        let tags = tags_of(&payloads);
        let r = reader_combine("R1", &tags, &random_vector(2, &mut rng)).unwrap();
        let c = client_combine("C1", &[r], &CodingVector::from_bytes(&[1])).unwrap();
        let s = server_combine("S", std::slice::from_ref(&c), &CodingVector::from_bytes(&[1])).unwrap();
        assert_eq!((s.composed, s.payload), (c.composed, c.payload));

        let run = run_pipeline(&HierarchyConfig::worked_instance(), &payloads, &mut rng).unwrap();
        let oracle = run.server_coeffs.mul(&run.client_coeffs).unwrap().mul(&run.reader_coeffs).unwrap();
        assert_eq!(oracle.row(0), run.server.composed.coefficients());
        assert!(run.server_coeffs.entries().iter().all(|c| !c.is_zero()));
    }

    #[test]
    fn level_and_length_errors() {
        let tags = tags_of(&[vec![1], vec![2]]);
        let r = reader_combine("R1", &tags, &CodingVector::from_bytes(&[1, 2])).unwrap();
        assert!(matches!(
            client_combine("C1", &tags, &CodingVector::from_bytes(&[1, 1])),
            Err(HierarchyError::LevelMismatch { expected: Level::Reader, found: Level::Tag })
        ));
        assert!(matches!(
            server_combine("S", std::slice::from_ref(&r), &CodingVector::from_bytes(&[1])),
            Err(HierarchyError::LevelMismatch { .. })
        ));
        assert!(matches!(
            reader_combine("R1", &tags, &CodingVector::from_bytes(&[1])),
            Err(HierarchyError::LengthMismatch { expected: 2, found: 1 })
        ));
        assert_eq!(reader_combine("R1", &[], &CodingVector::from_bytes(&[])), Err(HierarchyError::Empty));
        assert_eq!(HierarchyConfig::new(0, 1, 1), Err(HierarchyError::InvalidConfig));
    }

    #[test]
    fn compose_examples() {
        let id = FieldMatrix::identity(3);
        let sel = FieldMatrix::from_bytes(1, 3, &[0, 1, 0]).unwrap();
        assert_eq!(compose_end_to_end(&id, &id, &sel).unwrap(), sel);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let payloads = random_payloads(&mut rng, 2, 8);
        let run = run_pipeline(&HierarchyConfig::worked_instance(), &payloads, &mut rng).unwrap();
        let e2e = compose_end_to_end(&run.reader_coeffs, &run.client_coeffs, &run.server_coeffs).unwrap();
        assert_eq!(e2e.row(0), run.server.composed.coefficients());

        // transposed server stage
        let bad = run.server_coeffs.transpose();
        assert!(matches!(
            compose_end_to_end(&run.reader_coeffs, &run.client_coeffs, &bad),
            Err(HierarchyError::DimensionMismatch(_))
        ));
        let reader = FieldMatrix::zeros(3, 2);
        assert!(matches!(
            compose_end_to_end(&reader, &FieldMatrix::zeros(2, 2), &FieldMatrix::zeros(1, 2)),
            Err(HierarchyError::DimensionMismatch(_))
        ));
    }

    fn sample_record(rng: &mut ChaCha8Rng) -> PatientRecordMatrix {
        let columns = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen()));
        PatientRecordMatrix::from_columns("300485", 12, columns)
    }

    #[test]
    fn flatten_examples() {
        let zero = PatientRecordMatrix::from_columns("p", 0, [[0; 8]; 3]);
        let packets = flatten_record(&zero);
        assert_eq!(packets.len(), 3);
        assert!(packets.iter().all(|p| p.payload == vec![0; COLUMN_WIDTH]));

        let distinct = PatientRecordMatrix::from_columns("p", 0, [[1; 8], [2; 8], [3; 8]]);
        let packets = flatten_record(&distinct);
        assert_ne!(packets[0].payload, packets[1].payload);
        assert_ne!(packets[1].payload, packets[2].payload);
        assert_ne!(packets[0].payload, packets[2].payload);
        assert_eq!(packets.iter().map(|p| p.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn retrieve_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rec = sample_record(&mut rng);
        let packets = flatten_record(&rec);
        let all = retrieve_modules(&packets, &ModuleSelector::all()).unwrap();
        assert_eq!(all.iter().map(|c| c.bytes).collect::<Vec<_>>(), rec.columns().to_vec());

        let nurse = retrieve_modules(&packets, &ModuleSelector::parse("010").unwrap()).unwrap();
        assert_eq!(nurse, vec![ModuleColumn { module: 1, bytes: rec.column(1) }]);

        assert_eq!(retrieve_modules(&packets, &ModuleSelector::new([false; 3])), Err(HierarchyError::EmptySelector));
        assert!(ModuleSelector::parse("01").is_err());
        assert!(ModuleSelector::parse("012").is_err());
        assert_eq!(ModuleSelector::all_valid().len(), 7);
        assert_eq!(ModuleSelector::parse("101").unwrap().to_string(), "101");
    }

    #[test]
    fn record_round_trip_through_coding() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let config = HierarchyConfig::new(3, 2, 2).unwrap();
        for _ in 0..50 {
            let rec = sample_record(&mut rng);
            let payloads: Vec<Vec<u8>> = flatten_record(&rec).into_iter().map(|p| p.payload).collect();
            let mut dec = Decoder::new(3, COLUMN_WIDTH).unwrap();
            while !dec.is_complete() {
                let run = run_pipeline(&config, &payloads, &mut rng).unwrap();
                let p = crate::rlnc::CodedPacket {
                    generation: GenerationId(1),
                    vector: run.server.composed,
                    payload: run.server.payload,
                };
                dec.add(&p).unwrap();
            }
            let decoded = dec.extract().unwrap();
            assert_eq!(unflatten_record(&rec.patient_id, rec.window, &decoded).unwrap(), rec);
        }
    }

    proptest! {
        #[test]
        fn unflatten_inverts_flatten(cells in proptest::array::uniform8(proptest::array::uniform3(any::<u8>())), window in any::<u32>()) {
            let rec = PatientRecordMatrix { patient_id: "x".into(), window, cells };
            prop_assert_eq!(unflatten_record("x", window, &flatten_record(&rec)).unwrap(), rec);
        }

        #[test]
        fn server_vector_reproduces_payload(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4, k in 1usize..=4, w in 1usize..=32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let payloads = random_payloads(&mut rng, n, w);
            let run = run_pipeline(&HierarchyConfig::new(n, m, k).unwrap(), &payloads, &mut rng).unwrap();
            prop_assert_eq!(apply(&run.server.composed, &payloads), run.server.payload.clone());
            for p in run.readers.iter().chain(&run.clients) {
                prop_assert_eq!(apply(&p.composed, &payloads), p.payload.clone());
            }
            let e2e = run.end_to_end();
            prop_assert_eq!(e2e.row(0), run.server.composed.coefficients());
        }
    }
}
