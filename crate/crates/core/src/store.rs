//! Persistent generation store for coded blocks, keyed by patient id and
//! observation window.
//!
//! A generation accepts blocks while they raise its rank. Once it reaches
//! full rank it still accepts spare blocks that keep the set decodable after
//! the loss of any single block; everything else is rejected as redundant.
//! Blocks remember which node they came from so a failed node can be
//! repaired by recoding the survivors.
//!
//! # File format
//!
//! Little-endian throughout:
//!
//! ```text
//! "NCEH"                         magic
//! u16                            format version (1)
//! u32                            generation count
//! per generation:
//!   u16 len, utf-8 bytes         patient id
//!   u32                          window
//!   u16                          k
//!   u32                          width
//!   u32                          block count
//!   per block:
//!     u16 len, utf-8 bytes       origin id
//!     k bytes                    coefficients
//!     width bytes                payload
//! u32                            CRC-32 of everything between magic and CRC
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Cursor, Read, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use thiserror::Error;

use crate::gf256::{FieldMatrix, Gf256};
use crate::hierarchy::{self, HierarchyError, ModuleColumn, ModuleSelector, PatientRecordMatrix};
use crate::rlnc::{random_vector, recode, CodedPacket, CodingError, CodingVector, Decoder, GenerationId, SourcePacket};

pub const MAGIC: [u8; 4] = *b"NCEH";
pub const FORMAT_VERSION: u16 = 1;

/// Attempts at drawing a usable replacement block during repair.
const REPAIR_ATTEMPTS: usize = 32;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("block shape (k={k}, width={width}) does not match generation {key} (k={gk}, width={gw})")]
    ShapeMismatch { key: GenerationKey, k: usize, width: usize, gk: usize, gw: usize },
    #[error("invalid block: {0}")]
    InvalidBlock(&'static str),
    #[error("patient id must not be empty")]
    InvalidKey,
    #[error("generation {0} not found")]
    NotFound(GenerationKey),
    #[error("generation {key} undecodable: rank {rank} of {k}")]
    Undecodable { key: GenerationKey, rank: usize, k: usize },
    #[error("store is locked by another writer ({0})")]
    Locked(PathBuf),
    #[error("corrupt store file: {0}")]
    CorruptFile(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Coding(#[from] CodingError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenerationKey {
    pub patient_id: String,
    pub window: u32,
}

impl GenerationKey {
    pub fn new(patient_id: impl Into<String>, window: u32) -> Result<Self, StoreError> {
        let patient_id = patient_id.into();
        if patient_id.is_empty() || patient_id.len() > u16::MAX as usize {
            return Err(StoreError::InvalidKey);
        }
        Ok(Self { patient_id, window })
    }

    /// Stable 64-bit id (FNV-1a over the patient id bytes and window).
    pub fn generation_id(&self) -> GenerationId {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.patient_id.bytes().chain(self.window.to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        GenerationId(h)
    }
}

impl fmt::Display for GenerationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.patient_id, self.window)
    }
}

/// A coded block as held by the store. `created_at` is not persisted and is
/// ignored by equality.
#[derive(Debug, Clone)]
pub struct StoredBlock {
    pub key: GenerationKey,
    pub origin: String,
    pub vector: CodingVector,
    pub payload: Vec<u8>,
    pub created_at: SystemTime,
}

impl StoredBlock {
    pub fn new(key: GenerationKey, origin: impl Into<String>, vector: CodingVector, payload: Vec<u8>) -> Self {
        Self { key, origin: origin.into(), vector, payload, created_at: SystemTime::now() }
    }

    pub fn to_packet(&self) -> CodedPacket {
        CodedPacket { generation: self.key.generation_id(), vector: self.vector.clone(), payload: self.payload.clone() }
    }
}

impl PartialEq for StoredBlock {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
            && self.origin == other.origin
            && self.vector == other.vector
            && self.payload == other.payload
    }
}

impl Eq for StoredBlock {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    /// Raised the generation's rank.
    Innovative,
    /// Generation was already full rank; kept as single-loss headroom.
    Spare,
    /// Rejected.
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationEntry {
    pub k: usize,
    pub width: usize,
    pub blocks: Vec<StoredBlock>,
}

impl GenerationEntry {
    fn vectors(&self, skip: Option<usize>) -> FieldMatrix {
        let rows: Vec<Vec<Gf256>> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, b)| b.vector.coefficients().to_vec())
            .collect();
        if rows.is_empty() {
            return FieldMatrix::zeros(0, self.k);
        }
        FieldMatrix::from_rows(&rows).expect("vectors share length k")
    }

    pub fn rank(&self) -> usize {
        self.vectors(None).rank()
    }

    pub fn is_decodable(&self) -> bool {
        self.rank() == self.k
    }

    pub fn origins(&self) -> Vec<&str> {
        let mut o: Vec<&str> = self.blocks.iter().map(|b| b.origin.as_str()).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    fn decoder(&self, key: &GenerationKey) -> Result<Decoder, StoreError> {
        let mut dec = Decoder::new(self.k, self.width)?;
        for b in &self.blocks {
            dec.add(&CodedPacket {
                generation: key.generation_id(),
                vector: b.vector.clone(),
                payload: b.payload.clone(),
            })?;
            if dec.is_complete() {
                break;
            }
        }
        Ok(dec)
    }

    /// Whether `candidate` may join a full-rank generation as a spare: it must
    /// not be a scalar multiple of a held vector, and swapping it in for any one
    /// held block must keep full rank.
    fn accepts_spare(&self, candidate: &CodingVector) -> bool {
        let proportional = self.blocks.iter().any(|b| {
            FieldMatrix::from_rows(&[b.vector.coefficients().to_vec(), candidate.coefficients().to_vec()])
                .expect("equal lengths")
                .rank()
                < 2
        });
        if proportional {
            return false;
        }
        (0..self.blocks.len()).all(|skip| {
            let mut m = self.vectors(Some(skip));
            let mut rows: Vec<Vec<Gf256>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
            rows.push(candidate.coefficients().to_vec());
            m = FieldMatrix::from_rows(&rows).expect("equal lengths");
            m.rank() == self.k
        })
    }
}

/// Outcome of [`StoreCatalog::repair`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairReport {
    pub new_blocks: Vec<StoredBlock>,
    /// Generations that lost blocks and got a replacement.
    pub repaired: Vec<GenerationKey>,
    /// Generations left below full rank.
    pub degraded: Vec<GenerationKey>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreCatalog {
    generations: BTreeMap<GenerationKey, GenerationEntry>,
}

impl StoreCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn generation(&self, key: &GenerationKey) -> Option<&GenerationEntry> {
        self.generations.get(key)
    }

    pub fn generations(&self) -> impl Iterator<Item = (&GenerationKey, &GenerationEntry)> {
        self.generations.iter()
    }

    pub fn remove_generation(&mut self, key: &GenerationKey) -> Option<GenerationEntry> {
        self.generations.remove(key)
    }

    pub fn rank(&self, key: &GenerationKey) -> Option<usize> {
        self.generations.get(key).map(GenerationEntry::rank)
    }

    /// Stores `b` if it raises its generation's rank, or if the generation
    /// is full rank and `b` qualifies as a spare. The first block of an
    /// unknown generation fixes its `k` and width.
    pub fn put_block(&mut self, b: StoredBlock) -> Result<PutOutcome, StoreError> {
        if b.key.patient_id.is_empty() || b.key.patient_id.len() > u16::MAX as usize {
            return Err(StoreError::InvalidKey);
        }
        if b.origin.len() > u16::MAX as usize {
            return Err(StoreError::InvalidBlock("origin name exceeds 65535 bytes"));
        }
        if b.vector.is_empty() || b.payload.is_empty() {
            return Err(StoreError::InvalidBlock("empty coefficient vector or payload"));
        }
        if b.vector.len() > u16::MAX as usize {
            return Err(StoreError::InvalidBlock("generation size exceeds u16"));
        }
        if b.vector.is_zero() {
            return Ok(PutOutcome::Redundant);
        }
        let entry = self.generations.entry(b.key.clone()).or_insert_with(|| GenerationEntry {
            k: b.vector.len(),
            width: b.payload.len(),
            blocks: Vec::new(),
        });
        if b.vector.len() != entry.k || b.payload.len() != entry.width {
            return Err(StoreError::ShapeMismatch {
                key: b.key.clone(),
                k: b.vector.len(),
                width: b.payload.len(),
                gk: entry.k,
                gw: entry.width,
            });
        }
        let rank = entry.rank();
        let outcome = if rank < entry.k {
            let mut rows: Vec<Vec<Gf256>> = entry.blocks.iter().map(|x| x.vector.coefficients().to_vec()).collect();
            rows.push(b.vector.coefficients().to_vec());
            if FieldMatrix::from_rows(&rows).expect("equal lengths").rank() > rank {
                PutOutcome::Innovative
            } else {
                PutOutcome::Redundant
            }
        } else if entry.accepts_spare(&b.vector) {
            PutOutcome::Spare
        } else {
            PutOutcome::Redundant
        };
        if outcome != PutOutcome::Redundant {
            entry.blocks.push(b);
        }
        Ok(outcome)
    }

    /// Decodes a generation back to its source packets.
    pub fn decode_generation(&self, key: &GenerationKey) -> Result<Vec<SourcePacket>, StoreError> {
        let entry = self.generations.get(key).ok_or_else(|| StoreError::NotFound(key.clone()))?;
        let dec = entry.decoder(key)?;
        if !dec.is_complete() {
            return Err(StoreError::Undecodable { key: key.clone(), rank: dec.rank(), k: entry.k });
        }
        Ok(dec.extract()?)
    }

    /// Selected module columns of a record generation. The caller names only
    /// the key and the selector; which nodes hold the blocks does not matter.
    pub fn get_record(&self, key: &GenerationKey, sel: &ModuleSelector) -> Result<Vec<ModuleColumn>, StoreError> {
        if sel.is_empty() {
            return Err(HierarchyError::EmptySelector.into());
        }
        let decoded = self.decode_generation(key)?;
        Ok(hierarchy::retrieve_modules(&decoded, sel)?)
    }

    pub fn get_full_record(&self, key: &GenerationKey) -> Result<PatientRecordMatrix, StoreError> {
        let decoded = self.decode_generation(key)?;
        Ok(hierarchy::unflatten_record(&key.patient_id, key.window, &decoded)?)
    }

    /// Drops every block from `failed_origin` and, for each affected
    /// generation whose survivors are still full rank, stores one fresh
    /// random recombination of the survivors attributed to the surviving
    /// origin holding the fewest blocks (ties broken by name).
    pub fn repair<R: Rng + ?Sized>(&mut self, failed_origin: &str, rng: &mut R) -> RepairReport {
        let mut report = RepairReport::default();
        let affected: Vec<GenerationKey> = self
            .generations
            .iter()
            .filter(|(_, e)| e.blocks.iter().any(|b| b.origin == failed_origin))
            .map(|(k, _)| k.clone())
            .collect();

        for key in affected {
            let entry = self.generations.get_mut(&key).expect("key collected above");
            entry.blocks.retain(|b| b.origin != failed_origin);
            if !entry.is_decodable() {
                report.degraded.push(key);
                continue;
            }
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for b in &entry.blocks {
                *counts.entry(b.origin.as_str()).or_default() += 1;
            }
            let origin = counts
                .iter()
                .min_by_key(|(name, n)| (**n, **name))
                .map(|(name, _)| name.to_string())
                .expect("full-rank generation has blocks");

            let survivors: Vec<CodedPacket> = entry.blocks.iter().map(StoredBlock::to_packet).collect();
            let mut placed = None;
            for _ in 0..REPAIR_ATTEMPTS {
                let local = random_vector(survivors.len(), rng);
                let p = recode(&survivors, &local).expect("survivors share generation and shape");
                let block = StoredBlock::new(key.clone(), origin.clone(), p.vector, p.payload);
                if entry.accepts_spare(&block.vector) {
                    entry.blocks.push(block.clone());
                    placed = Some(block);
                    break;
                }
            }
            match placed {
                Some(block) => {
                    report.new_blocks.push(block);
                    report.repaired.push(key);
                }
                // still decodable, just without fresh headroom
                None => report.repaired.push(key),
            }
        }
        report
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        body.write_u16::<LittleEndian>(FORMAT_VERSION).unwrap();
        body.write_u32::<LittleEndian>(self.generations.len() as u32).unwrap();
        for (key, entry) in &self.generations {
            write_str(&mut body, &key.patient_id);
            body.write_u32::<LittleEndian>(key.window).unwrap();
            body.write_u16::<LittleEndian>(entry.k as u16).unwrap();
            body.write_u32::<LittleEndian>(entry.width as u32).unwrap();
            body.write_u32::<LittleEndian>(entry.blocks.len() as u32).unwrap();
            for b in &entry.blocks {
                write_str(&mut body, &b.origin);
                body.extend(b.vector.to_bytes());
                body.extend(&b.payload);
            }
        }
        let crc = crc32fast::hash(&body);
        let mut out = Vec::with_capacity(body.len() + 8);
        out.extend(MAGIC);
        out.extend(body);
        out.write_u32::<LittleEndian>(crc).unwrap();
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < MAGIC.len() + 4 {
            return Err(StoreError::CorruptFile("truncated".into()));
        }
        if bytes[..4] != MAGIC {
            return Err(StoreError::CorruptFile("bad magic".into()));
        }
        let (body, trailer) = bytes[4..].split_at(bytes.len() - 8);
        let stored_crc = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored_crc {
            return Err(StoreError::CorruptFile("checksum mismatch".into()));
        }
        parse_body(body).map_err(|e| match e {
            StoreError::Io(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
                StoreError::CorruptFile("truncated body".into())
            }
            other => other,
        })
    }

    /// Writes the catalog to `path`, returning the byte count.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<u64, StoreError> {
        let bytes = self.to_bytes();
        let mut f = File::create(path)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        Ok(bytes.len() as u64)
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn save_atomic(&self, path: impl AsRef<Path>) -> Result<u64, StoreError> {
        let path = path.as_ref();
        let tmp = sibling(path, "tmp");
        let n = self.save(&tmp)?;
        fs::rename(&tmp, path)?;
        Ok(n)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Lengths are bounded by `put_block`, which rejects longer ids.
fn write_str(out: &mut Vec<u8>, s: &str) {
    out.write_u16::<LittleEndian>(s.len() as u16).unwrap();
    out.extend(s.as_bytes());
}

fn read_str(r: &mut Cursor<&[u8]>) -> Result<String, StoreError> {
    let len = r.read_u16::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| StoreError::CorruptFile("invalid utf-8 in id".into()))
}

fn parse_body(body: &[u8]) -> Result<StoreCatalog, StoreError> {
    let corrupt = |m: &str| StoreError::CorruptFile(m.to_string());
    let mut r = Cursor::new(body);
    let version = r.read_u16::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(StoreError::CorruptFile(format!("unsupported version {version}")));
    }
    let count = r.read_u32::<LittleEndian>()?;
    let mut generations = BTreeMap::new();
    for _ in 0..count {
        let patient_id = read_str(&mut r)?;
        let window = r.read_u32::<LittleEndian>()?;
        let key = GenerationKey::new(patient_id, window).map_err(|_| corrupt("empty patient id"))?;
        let k = r.read_u16::<LittleEndian>()? as usize;
        let width = r.read_u32::<LittleEndian>()? as usize;
        let n_blocks = r.read_u32::<LittleEndian>()? as usize;
        if k == 0 || width == 0 {
            return Err(corrupt("zero generation size or width"));
        }
        let remaining = body.len() as u64 - r.position();
        if (n_blocks as u64) * (2 + k as u64 + width as u64) > remaining {
            return Err(corrupt("truncated body"));
        }
        let mut blocks = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let origin = read_str(&mut r)?;
            let mut coeffs = vec![0u8; k];
            r.read_exact(&mut coeffs)?;
            let mut payload = vec![0u8; width];
            r.read_exact(&mut payload)?;
            blocks.push(StoredBlock::new(key.clone(), origin, CodingVector::from_bytes(&coeffs), payload));
        }
        if generations.insert(key, GenerationEntry { k, width, blocks }).is_some() {
            return Err(corrupt("duplicate generation key"));
        }
    }
    if r.position() != body.len() as u64 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(StoreCatalog { generations })
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

/// Exclusive writer lock: a `<store>.lock` file created with `create_new`.
/// Released on drop.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    pub fn acquire(store: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = sibling(store.as_ref(), "lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
