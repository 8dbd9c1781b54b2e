//! Arithmetic over GF(2^8) and dense linear algebra over that field.
//!
//! Elements are bytes interpreted as polynomials over GF(2) reduced modulo
//! `x^8 + x^4 + x^3 + x^2 + 1` (0x11D). Multiplication goes through
//! log/antilog tables built at compile time with generator `x` (0x02).
//!
//! Gaussian elimination pivots on the first nonzero entry found scanning a
//! column top to bottom; there is no notion of magnitude in a finite field.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use thiserror::Error;

/// Reduction polynomial `x^8 + x^4 + x^3 + x^2 + 1`.
pub const FIELD_POLY: u16 = 0x11D;

/// Generator of the multiplicative group used to build the tables.
pub const GENERATOR: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular (rank {rank} < {size})")]
    SingularMatrix { rank: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
}

/// Carry-less shift-and-add product reduced modulo [`FIELD_POLY`].
/// Only used to build the tables.
const fn mul_shift_add(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    let mut x = a as u16;
    let mut y = b;
    while y != 0 {
        if y & 1 != 0 {
            acc ^= x;
        }
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= FIELD_POLY;
        }
        y >>= 1;
    }
    acc as u8
}

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val = 1u8;
    let mut i = 0;
    while i < 255 {
        table[i] = val;
        table[i + 255] = val;
        val = mul_shift_add(val, GENERATOR);
        i += 1;
    }
    // entries 510 and 511 are never indexed: log sums are at most 508
    table
}

const fn build_log() -> [u8; 256] {
    let exp = build_exp();
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 255 {
        table[exp[i] as usize] = i as u8;
        i += 1;
    }
    table
}

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Field addition (bitwise XOR).
    #[inline]
    pub const fn add(self, other: Gf256) -> Gf256 {
        Gf256(self.0 ^ other.0)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Gf256) -> Gf256 {
        Gf256(mul_u8(self.0, other.0))
    }

    pub fn inv(self) -> Result<Gf256, FieldError> {
        if self.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, other: Gf256) -> Result<Gf256, FieldError> {
        Ok(self.mul(other.inv()?))
    }

    /// `GENERATOR^exponent`.
    pub fn exp(exponent: usize) -> Gf256 {
        Gf256(EXP[exponent % 255])
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(mul_u8(self.0, rhs.0))
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        self.0 = mul_u8(self.0, rhs.0);
    }
}

pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    a + b
}

pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    a * b
}

pub fn gf_inv(a: Gf256) -> Result<Gf256, FieldError> {
    a.inv()
}

#[inline]
fn mul_u8(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
    }
}

/// `dst[i] ^= c * src[i]` over byte symbols.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: Gf256) {
    debug_assert_eq!(dst.len(), src.len());
    match c.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let log_c = LOG[c.0 as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[log_c + LOG[s as usize] as usize];
                }
            }
        }
    }
}

/// `buf[i] = c * buf[i]`.
pub fn scale_slice(buf: &mut [u8], c: Gf256) {
    match c.0 {
        0 => buf.fill(0),
        1 => {}
        _ => buf.iter_mut().for_each(|b| *b = mul_u8(*b, c.0)),
    }
}

/// Same as [`mul_add_slice`] for slices of field elements.
pub fn mul_add_elems(dst: &mut [Gf256], src: &[Gf256], c: Gf256) {
    debug_assert_eq!(dst.len(), src.len());
    if c.is_zero() {
        return;
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Gf256>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Gf256>) -> Result<Self, FieldError> {
        if entries.len() != rows * cols {
            return Err(FieldError::DimensionMismatch("entries length must equal rows * cols"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self, FieldError> {
        Self::new(rows, cols, bytes.iter().copied().map(Gf256).collect())
    }

    pub fn from_rows(rows: &[Vec<Gf256>]) -> Result<Self, FieldError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(FieldError::DimensionMismatch("ragged rows"));
        }
        Ok(Self { rows: rows.len(), cols, entries: rows.concat() })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Gf256::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Gf256::ONE);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Gf256] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Gf256 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Gf256) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Gf256] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf256] {
        &mut self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
        if self.cols != rhs.rows {
            return Err(FieldError::DimensionMismatch("left cols must equal right rows"));
        }
        let mut out = FieldMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                let (dst, src) = (r * rhs.cols, k * rhs.cols);
                for c in 0..rhs.cols {
                    out.entries[dst + c] += a * rhs.entries[src + c];
                }
            }
        }
        Ok(out)
    }

    /// Rank by forward elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_echelon()
    }

    /// Reduces `self` in place to row echelon form with unit pivots and
    /// returns the rank.
    fn row_echelon(&mut self) -> usize {
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(found) = (pivot_row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            self.swap_rows(pivot_row, found);
            let inv = self.get(pivot_row, col).inv().expect("pivot is nonzero");
            self.row_mut(pivot_row).iter_mut().for_each(|v| *v *= inv);
            let pivot: Vec<Gf256> = self.row(pivot_row).to_vec();
            for r in pivot_row + 1..self.rows {
                let f = self.get(r, col);
                if !f.is_zero() {
                    mul_add_elems(self.row_mut(r), &pivot, f);
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }

    /// Solves `self · x = b` for square nonsingular `self`.
    pub fn solve(&self, b: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
        let n = self.rows;
        if self.cols != n {
            return Err(FieldError::DimensionMismatch("coefficient matrix must be square"));
        }
        if b.rows != n {
            return Err(FieldError::DimensionMismatch("right-hand side rows must match"));
        }
        let w = b.cols;
        // augmented [A | B]
        let mut aug = FieldMatrix::zeros(n, n + w);
        for r in 0..n {
            aug.row_mut(r)[..n].copy_from_slice(self.row(r));
            aug.row_mut(r)[n..].copy_from_slice(b.row(r));
        }
        for col in 0..n {
            let Some(found) = (col..n).find(|&r| !aug.get(r, col).is_zero()) else {
                let rank = self.rank();
                return Err(FieldError::SingularMatrix { rank, size: n });
            };
            aug.swap_rows(col, found);
            let inv = aug.get(col, col).inv()?;
            aug.row_mut(col).iter_mut().for_each(|v| *v *= inv);
            let pivot: Vec<Gf256> = aug.row(col).to_vec();
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = aug.get(r, col);
                if !f.is_zero() {
                    mul_add_elems(aug.row_mut(r), &pivot, f);
                }
            }
        }
        let mut x = FieldMatrix::zeros(n, w);
        for r in 0..n {
            x.row_mut(r).copy_from_slice(&aug.row(r)[n..]);
        }
        Ok(x)
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{:02x}", v.0)).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

pub fn mat_rank(m: &FieldMatrix) -> usize {
    m.rank()
}

pub fn mat_solve(a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
    a.solve(b)
}

/// Exhaustive check that every nonzero element has an inverse and that
/// multiplication by any fixed nonzero element permutes the field.
/// Returns the number of failures found.
pub fn exhaustive_field_check() -> usize {
    let mut failures = 0;
    for a in 1..=255u8 {
        match Gf256(a).inv() {
            Ok(inv) if Gf256(a) * inv == Gf256::ONE => {}
            _ => failures += 1,
        }
        let mut seen = [false; 256];
        for b in 0..=255u8 {
            seen[(Gf256(a) * Gf256(b)).0 as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            failures += 1;
        }
    }
    if Gf256::ZERO.inv() != Err(FieldError::ZeroInverse) {
        failures += 1;
    }
    failures
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Schoolbook polynomial product followed by long division; shares no
    /// code with the table path.
    fn oracle_mul(a: u8, b: u8) -> u8 {
        let mut prod: u32 = 0;
        for i in 0..8 {
            if (b >> i) & 1 == 1 {
                prod ^= (a as u32) << i;
            }
        }
        for deg in (8..16).rev() {
            if (prod >> deg) & 1 == 1 {
                prod ^= 0x11D << (deg - 8);
            }
        }
        prod as u8
    }

    /// Plain Gaussian elimination on `Vec<Vec<u8>>` with the oracle multiply
    /// and Fermat inversion `a^254`.
    fn oracle_rank(rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let inv = |a: u8| {
            let mut r = 1u8;
            for _ in 0..254 {
                r = oracle_mul(r, a);
            }
            r
        };
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
            m.swap(rank, p);
            let pi = inv(m[rank][c]);
            for r in 0..m.len() {
                if r != rank && m[r][c] != 0 {
                    let f = oracle_mul(m[r][c], pi);
                    for j in 0..cols {
                        let t = oracle_mul(f, m[rank][j]);
                        m[r][j] ^= t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> FieldMatrix {
        let bytes: Vec<u8> = (0..rows * cols).map(|_| rng.gen()).collect();
        FieldMatrix::from_bytes(rows, cols, &bytes).unwrap()
    }

    fn random_nonsingular(rng: &mut ChaCha8Rng, n: usize) -> FieldMatrix {
        loop {
            let m = random_matrix(rng, n, n);
            if m.rank() == n {
                return m;
            }
        }
    }

    #[test]
    fn add_examples() {
        assert_eq!(gf_add(Gf256(0x57), Gf256(0x57)), Gf256(0x00));
        assert_eq!(gf_add(Gf256(0x01), Gf256(0x02)), Gf256(0x03));
        assert_eq!(gf_add(Gf256(0xFF), Gf256(0x0F)), Gf256(0xF0));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(gf_mul(Gf256(0x13), Gf256(0x01)), Gf256(0x13));
        assert_eq!(gf_mul(Gf256(0x02), Gf256(0x02)), Gf256(0x04));
        // x^8 = x^4 + x^3 + x^2 + 1 (mod 0x11D)
        assert_eq!(oracle_mul(0x80, 0x02), 0x1D);
        assert_eq!(gf_mul(Gf256(0x80), Gf256(0x02)), Gf256(0x1D));
    }

    #[test]
    fn table_mul_matches_oracle_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!((Gf256(a) * Gf256(b)).0, oracle_mul(a, b), "{a:#x} * {b:#x}");
            }
        }
    }

    #[test]
    fn inverse_sweep() {
        assert_eq!(gf_inv(Gf256(1)), Ok(Gf256(1)));
        assert_eq!(gf_inv(Gf256(0)), Err(FieldError::ZeroInverse));
        for a in 1..=255u8 {
            let inv = gf_inv(Gf256(a)).unwrap();
            assert_eq!(oracle_mul(a, inv.0), 1, "inverse of {a:#x}");
        }
    }

    #[test]
    fn generator_is_primitive() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..255 {
            assert!(seen.insert(Gf256::exp(i).0));
        }
        assert!(!seen.contains(&0));
    }

    #[test]
    fn exhaustive_check_reports_zero_failures() {
        assert_eq!(exhaustive_field_check(), 0);
    }

    #[test]
    fn field_laws_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1E1D);
        for _ in 0..100_000 {
            let (a, b, c) = (Gf256(rng.gen()), Gf256(rng.gen()), Gf256(rng.gen()));
            assert_eq!(a + b, b + a);
            assert_eq!(a * b, b * a);
            assert_eq!((a + b) + c, a + (b + c));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a * Gf256::ONE, a);
            assert_eq!(a * Gf256::ZERO, Gf256::ZERO);
        }
    }

    #[test]
    fn slice_kernels_match_scalar_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in 0..=255u8 {
            let src: Vec<u8> = (0..33).map(|_| rng.gen()).collect();
            let mut dst: Vec<u8> = (0..33).map(|_| rng.gen()).collect();
            let expected: Vec<u8> = dst.iter().zip(&src).map(|(&d, &s)| d ^ oracle_mul(c, s)).collect();
            mul_add_slice(&mut dst, &src, Gf256(c));
            assert_eq!(dst, expected);
            let mut scaled = src.clone();
            scale_slice(&mut scaled, Gf256(c));
            let expected: Vec<u8> = src.iter().map(|&s| oracle_mul(c, s)).collect();
            assert_eq!(scaled, expected);
        }
    }

    #[test]
    fn rank_examples() {
        for k in 1..6 {
            assert_eq!(mat_rank(&FieldMatrix::identity(k)), k);
        }
        assert_eq!(mat_rank(&FieldMatrix::zeros(3, 5)), 0);
        assert_eq!(mat_rank(&FieldMatrix::zeros(0, 0)), 0);

        let row = [Gf256(0x3A), Gf256(0x91)];
        let s = Gf256(0x4C);
        let m = FieldMatrix::from_rows(&[row.to_vec(), row.iter().map(|&v| v * s).collect()]).unwrap();
        let oracle_rows: Vec<Vec<u8>> = (0..2).map(|r| m.row(r).iter().map(|v| v.0).collect()).collect();
        assert_eq!(oracle_rank(&oracle_rows), 1);
        assert_eq!(mat_rank(&m), 1);
    }

    #[test]
    fn rank_matches_oracle_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let rows = rng.gen_range(1..7);
            let cols = rng.gen_range(1..7);
            let mut m = random_matrix(&mut rng, rows, cols);
            // sprinkle in dependent rows
            if rows > 1 && rng.gen_bool(0.5) {
                let src = m.row(0).to_vec();
                let f = Gf256(rng.gen());
                m.row_mut(rows - 1).iter_mut().zip(&src).for_each(|(d, &s)| *d = s * f);
            }
            let oracle_rows: Vec<Vec<u8>> = (0..rows).map(|r| m.row(r).iter().map(|v| v.0).collect()).collect();
            assert_eq!(m.rank(), oracle_rank(&oracle_rows));
            assert!(m.rank() <= rows.min(cols));
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_matrix(&mut rng, 4, 5);
        assert_eq!(mat_solve(&FieldMatrix::identity(4), &b).unwrap(), b);

        let d = [Gf256(3), Gf256(0x80), Gf256(1), Gf256(0xFE)];
        let mut a = FieldMatrix::zeros(4, 4);
        for (i, &di) in d.iter().enumerate() {
            a.set(i, i, di);
        }
        let x = mat_solve(&a, &b).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                assert_eq!(x.get(i, j), d[i].inv().unwrap() * b.get(i, j));
            }
        }
    }

    #[test]
    fn solve_random_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_nonsingular(&mut rng, 4);
            let b = random_matrix(&mut rng, 4, 3);
            let x = mat_solve(&a, &b).unwrap();
            assert_eq!(a.mul(&x).unwrap(), b);
        }
    }

    #[test]
    fn solve_singular_and_shape_errors() {
        let mut a = FieldMatrix::identity(3);
        a.set(2, 2, Gf256::ZERO);
        let b = FieldMatrix::zeros(3, 1);
        assert_eq!(mat_solve(&a, &b), Err(FieldError::SingularMatrix { rank: 2, size: 3 }));
        assert!(matches!(mat_solve(&FieldMatrix::zeros(2, 3), &b), Err(FieldError::DimensionMismatch(_))));
        assert!(matches!(mat_solve(&FieldMatrix::identity(2), &b), Err(FieldError::DimensionMismatch(_))));
        assert!(FieldMatrix::new(2, 2, vec![Gf256::ONE; 3]).is_err());
    }

    proptest! {
        #[test]
        fn mul_by_nonzero_is_bijection(a in 1u8..=255) {
            let mut seen = [false; 256];
            for b in 0..=255u8 {
                seen[(Gf256(a) * Gf256(b)).0 as usize] = true;
            }
            prop_assert!(seen.iter().all(|&s| s));
        }

        #[test]
        fn solve_round_trip(seed in any::<u64>(), n in 1usize..8, w in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_nonsingular(&mut rng, n);
            let x = random_matrix(&mut rng, n, w);
            let b = a.mul(&x).unwrap();
            prop_assert_eq!(mat_solve(&a, &b).unwrap(), x);
        }

        #[test]
        fn rank_invariant_under_swaps_and_scaling(
            seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7, s in 1u8..=255,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, rows, cols);
            let before = m.rank();
            let mut t = m.clone();
            let (i, j) = (rng.gen_range(0..rows), rng.gen_range(0..rows));
            t.swap_rows(i, j);
            t.row_mut(i).iter_mut().for_each(|v| *v *= Gf256(s));
            prop_assert_eq!(t.rank(), before);
        }
    }
}
