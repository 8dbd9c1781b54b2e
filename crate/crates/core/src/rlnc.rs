//! Generation-based random linear network coding.
//!
//! A generation is `k` equal-width source packets. Coded packets carry the
//! coefficient vector expressing them over those sources, so any node can
//! recode without decoding and any receiver can decode once it holds `k`
//! independent vectors.

use rand::Rng;
use thiserror::Error;

use crate::gf256::{mul_add_elems, mul_add_slice, scale_slice, FieldError, FieldMatrix, Gf256};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("payload width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("coefficient count {found} does not match packet count {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("packets belong to different generations")]
    GenerationMismatch,
    #[error("packet shape (k={k}, width={width}) does not match decoder (k={dk}, width={dw})")]
    ShapeMismatch { k: usize, width: usize, dk: usize, dw: usize },
    #[error("nothing to combine")]
    Empty,
    #[error("generation size and width must be at least 1")]
    InvalidShape,
    #[error("decoder incomplete: rank {rank} of {k}")]
    Incomplete { rank: usize, k: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Opaque generation identifier carried by coded packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GenerationId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourcePacket {
    pub index: usize,
    pub payload: Vec<u8>,
}

impl SourcePacket {
    pub fn new(index: usize, payload: Vec<u8>) -> Self {
        Self { index, payload }
    }

    /// Wraps payloads as sources `0..n`, checking they share one nonzero width.
    pub fn from_payloads(payloads: Vec<Vec<u8>>) -> Result<Vec<SourcePacket>, CodingError> {
        let width = payloads.first().map(Vec::len).ok_or(CodingError::Empty)?;
        if width == 0 {
            return Err(CodingError::InvalidShape);
        }
        payloads
            .into_iter()
            .enumerate()
            .map(|(index, payload)| {
                if payload.len() != width {
                    Err(CodingError::WidthMismatch { expected: width, found: payload.len() })
                } else {
                    Ok(SourcePacket { index, payload })
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodingVector(Vec<Gf256>);

impl CodingVector {
    pub fn new(coefficients: Vec<Gf256>) -> Self {
        Self(coefficients)
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self(bytes.iter().copied().map(Gf256).collect())
    }

    /// Unit vector `e_index` of length `k`.
    pub fn unit(k: usize, index: usize) -> Self {
        let mut v = vec![Gf256::ZERO; k];
        v[index] = Gf256::ONE;
        Self(v)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![Gf256::ZERO; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn coefficients(&self) -> &[Gf256] {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().map(|c| c.0).collect()
    }

    /// Adds `c * other` into `self`.
    pub fn mul_add(&mut self, other: &CodingVector, c: Gf256) {
        mul_add_elems(&mut self.0, &other.0, c);
    }

    /// Applies the vector to `payloads`: `Σ self[i] * payloads[i]`.
    pub fn apply(&self, payloads: &[&[u8]]) -> Result<Vec<u8>, CodingError> {
        if payloads.len() != self.len() {
            return Err(CodingError::LengthMismatch { expected: payloads.len(), found: self.len() });
        }
        let width = payloads.first().map_or(0, |p| p.len());
        let mut out = vec![0u8; width];
        for (&c, p) in self.0.iter().zip(payloads) {
            if p.len() != width {
                return Err(CodingError::WidthMismatch { expected: width, found: p.len() });
            }
            mul_add_slice(&mut out, p, c);
        }
        Ok(out)
    }
}

impl From<Vec<Gf256>> for CodingVector {
    fn from(v: Vec<Gf256>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodedPacket {
    pub generation: GenerationId,
    pub vector: CodingVector,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    /// The systematic packet carrying source `src` verbatim.
    pub fn systematic(generation: GenerationId, k: usize, src: &SourcePacket) -> Self {
        Self { generation, vector: CodingVector::unit(k, src.index), payload: src.payload.clone() }
    }

    pub fn width(&self) -> usize {
        self.payload.len()
    }
}

/// Draws `k` coefficients uniformly from `[1, 255]`.
pub fn random_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CodingVector {
    CodingVector((0..k).map(|_| Gf256(rng.gen_range(1..=255u8))).collect())
}

/// Combines source packets with `vector`. Sources are matched to
/// coefficients by position in the slice.
pub fn encode(
    generation: GenerationId,
    sources: &[SourcePacket],
    vector: &CodingVector,
) -> Result<CodedPacket, CodingError> {
    if vector.len() != sources.len() {
        return Err(CodingError::LengthMismatch { expected: sources.len(), found: vector.len() });
    }
    let width = sources.first().ok_or(CodingError::Empty)?.payload.len();
    let mut payload = vec![0u8; width];
    for (src, &c) in sources.iter().zip(vector.coefficients()) {
        if src.payload.len() != width {
            return Err(CodingError::WidthMismatch { expected: width, found: src.payload.len() });
        }
        mul_add_slice(&mut payload, &src.payload, c);
    }
    Ok(CodedPacket { generation, vector: vector.clone(), payload })
}

/// Combines already-coded packets. The output vector is the same
/// combination of the input vectors, so it stays expressed over the
/// original sources.
pub fn recode(packets: &[CodedPacket], local: &CodingVector) -> Result<CodedPacket, CodingError> {
    let first = packets.first().ok_or(CodingError::Empty)?;
    if local.len() != packets.len() {
        return Err(CodingError::LengthMismatch { expected: packets.len(), found: local.len() });
    }
    let (k, width) = (first.vector.len(), first.width());
    let mut vector = CodingVector::zeros(k);
    let mut payload = vec![0u8; width];
    for (p, &c) in packets.iter().zip(local.coefficients()) {
        if p.generation != first.generation {
            return Err(CodingError::GenerationMismatch);
        }
        if p.width() != width {
            return Err(CodingError::WidthMismatch { expected: width, found: p.width() });
        }
        if p.vector.len() != k {
            return Err(CodingError::LengthMismatch { expected: k, found: p.vector.len() });
        }
        vector.mul_add(&p.vector, c);
        mul_add_slice(&mut payload, &p.payload, c);
    }
    Ok(CodedPacket { generation: first.generation, vector, payload })
}

/// Verdict of feeding a packet to a [`Decoder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Innovative,
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Row {
    pivot: usize,
    vector: Vec<Gf256>,
    payload: Vec<u8>,
}

/// Incremental Gaussian-elimination decoder.
///
/// Rows are kept in row echelon form, sorted by pivot column, with unit
/// pivots. Each add costs O(k·(k + width)).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decoder {
    k: usize,
    width: usize,
    generation: Option<GenerationId>,
    rows: Vec<Row>,
}

impl Decoder {
    pub fn new(k: usize, width: usize) -> Result<Self, CodingError> {
        if k == 0 || width == 0 {
            return Err(CodingError::InvalidShape);
        }
        Ok(Self { k, width, generation: None, rows: Vec::with_capacity(k) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.k
    }

    pub fn generation(&self) -> Option<GenerationId> {
        self.generation
    }

    /// Reduces `p` against the held rows and keeps it if it raises the rank.
    pub fn add(&mut self, p: &CodedPacket) -> Result<AddOutcome, CodingError> {
        if p.vector.len() != self.k || p.width() != self.width {
            return Err(CodingError::ShapeMismatch { k: p.vector.len(), width: p.width(), dk: self.k, dw: self.width });
        }
        if self.generation.is_some_and(|g| g != p.generation) {
            return Err(CodingError::GenerationMismatch);
        }
        if self.is_complete() {
            return Ok(AddOutcome::Redundant);
        }
        let mut vector = p.vector.coefficients().to_vec();
        let mut payload = p.payload.clone();
        for row in &self.rows {
            let f = vector[row.pivot];
            if !f.is_zero() {
                mul_add_elems(&mut vector, &row.vector, f);
                mul_add_slice(&mut payload, &row.payload, f);
            }
        }
        let Some(pivot) = vector.iter().position(|c| !c.is_zero()) else {
            return Ok(AddOutcome::Redundant);
        };
        let inv = vector[pivot].inv()?;
        vector.iter_mut().for_each(|c| *c *= inv);
        scale_slice(&mut payload, inv);
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(at, Row { pivot, vector, payload });
        self.generation.get_or_insert(p.generation);
        Ok(AddOutcome::Innovative)
    }

    /// The held coefficient vectors as a `rank × k` matrix.
    pub fn coefficient_matrix(&self) -> FieldMatrix {
        let rows: Vec<Vec<Gf256>> = self.rows.iter().map(|r| r.vector.clone()).collect();
        if rows.is_empty() {
            return FieldMatrix::zeros(0, self.k);
        }
        FieldMatrix::from_rows(&rows).expect("rows share length k")
    }

    /// Held rows as coded packets.
    pub fn packets(&self) -> Vec<CodedPacket> {
        let generation = self.generation.unwrap_or_default();
        self.rows
            .iter()
            .map(|r| CodedPacket { generation, vector: CodingVector(r.vector.clone()), payload: r.payload.clone() })
            .collect()
    }

    /// A fresh random combination of the held span, or `None` when empty.
    pub fn recode<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<CodedPacket> {
        if self.rows.is_empty() {
            return None;
        }
        let mut vector = vec![Gf256::ZERO; self.k];
        let mut payload = vec![0u8; self.width];
        for row in &self.rows {
            let c = Gf256(rng.gen_range(1..=255u8));
            mul_add_elems(&mut vector, &row.vector, c);
            mul_add_slice(&mut payload, &row.payload, c);
        }
        Some(CodedPacket { generation: self.generation.unwrap_or_default(), vector: CodingVector(vector), payload })
    }

    /// Recovers the `k` sources in index order.
    pub fn extract(&self) -> Result<Vec<SourcePacket>, CodingError> {
        if !self.is_complete() {
            return Err(CodingError::Incomplete { rank: self.rank(), k: self.k });
        }
        let a = self.coefficient_matrix();
        let payloads: Vec<u8> = self.rows.iter().flat_map(|r| r.payload.iter().copied()).collect();
        let b = FieldMatrix::from_bytes(self.k, self.width, &payloads)?;
        let x = a.solve(&b)?;
        Ok((0..self.k).map(|i| SourcePacket::new(i, x.row(i).iter().map(|v| v.0).collect())).collect())
    }
}
