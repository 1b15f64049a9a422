//! Exact rational linear algebra.
//!
//! Every quantity in the crate is a [`Scalar`], an arbitrary-precision
//! rational number kept in lowest terms. Vectors are plain `Vec<Scalar>`,
//! matrices are dense row-major grids, subspaces keep a canonical reduced
//! row echelon basis so that equality is structural, and projective points
//! compare up to a nonzero scale. Zero tests are exact, so genericity
//! conditions become decidable predicates.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar.
pub type Scalar = BigRational;

/// Column vector of scalars.
pub type Vector = Vec<Scalar>;

/// Errors raised by the linear algebra layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    /// Two operands have incompatible shapes.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// A square matrix was required.
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    /// The matrix has no inverse.
    #[error("matrix is singular")]
    Singular,
    /// A projective point was built from the zero vector.
    #[error("zero vector does not define a projective point")]
    ZeroVector,
    /// A column index is out of range.
    #[error("column index {index} out of range for {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },
    /// A factor of a multi-ratio has a vanishing denominator.
    #[error("degenerate multi-ratio: denominator of factor {factor} vanishes")]
    DegenerateDenominator { factor: usize },
    /// Three points that should be collinear are not.
    #[error("multi-ratio factor {factor} has non-collinear points")]
    NotCollinear { factor: usize },
    /// A multi-ratio needs an even, nonzero number of points.
    #[error("multi-ratio needs an even positive number of points, got {count}")]
    BadPointCount { count: usize },
    /// Two subspaces do not meet in a single projective point.
    #[error("subspaces meet in dimension {dim}, expected a single point")]
    NotAPoint { dim: usize },
    /// A scalar string could not be parsed.
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
}

/// Builds the integer scalar `n`.
pub fn q(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

/// Builds the rational scalar `n / d`. Panics when `d == 0`.
pub fn qf(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

/// Converts a slice of integers into a vector of scalars.
pub fn qv(entries: &[i64]) -> Vector {
    entries.iter().map(|&x| q(x)).collect()
}

/// Canonical text form `"p/q"` with a positive denominator, also for integers.
pub fn format_scalar(x: &Scalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"` or an integer literal `"p"`.
pub fn parse_scalar(s: &str) -> Result<Scalar, LinalgError> {
    let t = s.trim();
    let bad = || LinalgError::Parse(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Scalar::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| bad())?;
            Ok(Scalar::from_integer(n))
        }
    }
}

/// Serde adapters that encode scalars as `"p/q"` strings.
pub mod serde_scalar {
    use super::*;

    /// Serializes one scalar.
    pub fn serialize<S: Serializer>(x: &Scalar, s: S) -> Result<S::Ok, S::Error> {
        format_scalar(x).serialize(s)
    }

    /// Deserializes one scalar.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let text = String::deserialize(d)?;
        parse_scalar(&text).map_err(serde::de::Error::custom)
    }

    /// Adapters for `Vec<Scalar>`.
    pub mod vec {
        use super::*;

        /// Serializes a vector as a JSON array of strings.
        pub fn serialize<S: Serializer>(v: &[Scalar], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(format_scalar).collect::<Vec<_>>().serialize(s)
        }

        /// Deserializes a JSON array of strings.
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|t| parse_scalar(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    /// Adapters for `Vec<Vec<Scalar>>`.
    pub mod vecvec {
        use super::*;

        /// Serializes nested vectors as nested JSON arrays of strings.
        pub fn serialize<S: Serializer>(v: &[Vector], s: S) -> Result<S::Ok, S::Error> {
            v.iter()
                .map(|row| row.iter().map(format_scalar).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s)
        }

        /// Deserializes nested JSON arrays of strings.
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
            let raw = Vec::<Vec<String>>::deserialize(d)?;
            raw.iter()
                .map(|row| {
                    row.iter()
                        .map(|t| parse_scalar(t).map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }
}

/// Elementwise vector sum. Panics on length mismatch.
pub fn vadd(a: &[Scalar], b: &[Scalar]) -> Vector {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Elementwise vector difference. Panics on length mismatch.
pub fn vsub(a: &[Scalar], b: &[Scalar]) -> Vector {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Scalar multiple of a vector.
pub fn vscale(c: &Scalar, a: &[Scalar]) -> Vector {
    a.iter().map(|x| c * x).collect()
}

/// Standard bilinear pairing `Σ a_i b_i`.
pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).fold(Scalar::zero(), |acc, (x, y)| acc + x * y)
}

/// True when every entry vanishes.
pub fn is_zero_vec(a: &[Scalar]) -> bool {
    a.iter().all(Zero::is_zero)
}

/// Zero vector of length `k`.
pub fn zero_vec(k: usize) -> Vector {
    vec![Scalar::zero(); k]
}

/// Standard basis vector `e_i` of length `k`.
pub fn unit_vec(k: usize, i: usize) -> Vector {
    let mut v = zero_vec(k);
    v[i] = Scalar::one();
    v
}

/// Linear combination `Σ c_i v_i` of vectors of length `k`.
pub fn lin_comb<'a, I>(k: usize, terms: I) -> Vector
where
    I: IntoIterator<Item = (&'a Scalar, &'a Vector)>,
{
    let mut out = zero_vec(k);
    for (c, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += c * x;
        }
    }
    out
}

/// Rescales `v` to an integer vector with coprime entries whose first
/// nonzero entry is positive. The zero vector is returned unchanged.
pub fn primitive_integer(v: &[Scalar]) -> Vector {
    if is_zero_vec(v) {
        return v.to_vec();
    }
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Scalar::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    let lead_negative = ints.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false);
    let sign = if lead_negative { -BigInt::one() } else { BigInt::one() };
    ints.into_iter()
        .map(|x| Scalar::from_integer(&x / &g * &sign))
        .collect()
}

/// Scales `v` so that its first nonzero entry equals one.
pub fn normalize_leading(v: &[Scalar]) -> Vector {
    match v.iter().find(|x| !x.is_zero()) {
        Some(lead) => {
            let inv = lead.recip();
            vscale(&inv, v)
        }
        None => v.to_vec(),
    }
}

/// If `a = c · b` for some scalar `c`, returns `c`. Requires `b != 0`.
pub fn proportionality(a: &[Scalar], b: &[Scalar]) -> Option<Scalar> {
    if a.len() != b.len() {
        return None;
    }
    let idx = b.iter().position(|x| !x.is_zero())?;
    let c = &a[idx] / &b[idx];
    if a.iter().zip(b).all(|(x, y)| *x == &c * y) {
        Some(c)
    } else {
        None
    }
}

/// Dense row-major matrix of scalars.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_scalar::vecvec::serialize(&self.to_rows(), s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = serde_scalar::vecvec::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

impl Matrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    /// Builds a matrix from rows, which must all have equal length.
    pub fn from_rows(rows: Vec<Vector>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch { expected: c, found: row.len() });
            }
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// Builds a matrix with `rows` rows from an explicit zero-column case or
    /// from rows; useful when a matrix may have no rows but a known width.
    pub fn from_rows_with_width(rows: Vec<Vector>, cols: usize) -> Result<Self, LinalgError> {
        if rows.is_empty() {
            return Ok(Self::zeros(0, cols));
        }
        let m = Self::from_rows(rows)?;
        if m.cols != cols {
            return Err(LinalgError::DimensionMismatch { expected: cols, found: m.cols });
        }
        Ok(m)
    }

    /// Builds a matrix from integer rows. Panics on ragged input.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| qv(r)).collect()).expect("ragged integer matrix")
    }

    /// Builds a `k × columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(k: usize, columns: &[Vector]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(k, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != k {
                return Err(LinalgError::DimensionMismatch { expected: k, found: col.len() });
            }
            for (i, x) in col.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        Ok(m)
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    /// Overwrites the entry at `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, x: Scalar) {
        self.data[r * self.cols + c] = x;
    }

    /// Mutable access to the entry at `(r, c)`.
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut Scalar {
        &mut self.data[r * self.cols + c]
    }

    /// Copy of row `r`.
    pub fn row(&self, r: usize) -> Vector {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    /// Copy of column `c`.
    pub fn col(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    /// All rows as vectors.
    pub fn to_rows(&self) -> Vec<Vector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    /// All columns as vectors.
    pub fn to_columns(&self) -> Vec<Vector> {
        (0..self.cols).map(|c| self.col(c)).collect()
    }

    /// Transposed matrix.
    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let prod = a * other.get(k, c);
                    *out.get_mut(r, c) += prod;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self · v`.
    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|r| dot(&self.data[r * self.cols..(r + 1) * self.cols], v))
            .collect())
    }

    /// Submatrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Matrix, LinalgError> {
        let mut m = Self::zeros(self.rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            if c >= self.cols {
                return Err(LinalgError::IndexOutOfRange { index: c, cols: self.cols });
            }
            for r in 0..self.rows {
                m.set(r, j, self.get(r, c).clone());
            }
        }
        Ok(m)
    }

    /// Submatrix made of the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut m = Self::zeros(rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.cols {
                m.set(i, c, self.get(r, c).clone());
            }
        }
        m
    }

    /// Reduced row echelon form and the list of pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m.get(row, col).recip();
            for c in col..m.cols {
                let x = m.get(row, c) * &inv;
                m.set(row, c, x);
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for c in col..m.cols {
                    let x = m.get(r, c) - &factor * m.get(row, c);
                    m.set(r, c, x);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Rank over ℚ.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn kernel(&self) -> Vec<Vector> {
        let (r, pivots) = self.rref();
        let mut out = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = zero_vec(self.cols);
            v[free] = Scalar::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(i, free).clone();
            }
            out.push(v);
        }
        out
    }

    /// Determinant of a square matrix by exact elimination.
    pub fn det(&self) -> Result<Scalar, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Ok(Scalar::zero());
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pivot = m.get(col, col).clone();
            det *= &pivot;
            let inv = pivot.recip();
            for r in col + 1..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col) * &inv;
                for c in col..n {
                    let x = m.get(r, c) - &factor * m.get(col, c);
                    m.set(r, c, x);
                }
            }
        }
        Ok(det)
    }

    /// Inverse of a square matrix.
    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, Scalar::one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(LinalgError::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, red.get(r, n + c).clone());
            }
        }
        Ok(inv)
    }

    /// Solves `self · x = b` for one solution, if any exists.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vector> {
        if b.len() != self.rows {
            return None;
        }
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, b[r].clone());
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = zero_vec(self.cols);
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = red.get(i, self.cols).clone();
        }
        Some(x)
    }
}

/// Basis of the right null space of `m`; empty exactly when `m` has full
/// column rank.
pub fn kernel(m: &Matrix) -> Vec<Vector> {
    m.kernel()
}

/// Determinant of the square submatrix of `m` on the given columns (taken in
/// the given order). Fails when the number of columns differs from the number
/// of rows or an index is out of range.
pub fn minor(m: &Matrix, cols: &[usize]) -> Result<Scalar, LinalgError> {
    if cols.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch { expected: m.rows(), found: cols.len() });
    }
    m.select_columns(cols)?.det()
}

/// Linear subspace of `ℚ^ambient` with a canonical basis (the nonzero rows of
/// the reduced row echelon form of any spanning set).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vector>,
}

impl Subspace {
    /// Span of the given vectors, each of length `ambient`.
    pub fn span(ambient: usize, vectors: &[Vector]) -> Self {
        let m = Matrix::from_rows_with_width(vectors.to_vec(), ambient).expect("span: wrong vector length");
        let (red, pivots) = m.rref();
        let basis = (0..pivots.len()).map(|r| red.row(r)).collect();
        Subspace { ambient, basis }
    }

    /// The zero subspace.
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    /// The whole space.
    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: (0..ambient).map(|i| unit_vec(ambient, i)).collect() }
    }

    /// Ambient dimension.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Canonical basis.
    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Membership test.
    pub fn contains(&self, v: &[Scalar]) -> bool {
        let mut vs = self.basis.clone();
        vs.push(v.to_vec());
        Subspace::span(self.ambient, &vs).dim() == self.dim()
    }

    /// Containment of subspaces.
    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    /// Sum `self + other`.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut vs = self.basis.clone();
        vs.extend(other.basis.iter().cloned());
        Subspace::span(self.ambient, &vs)
    }

    /// Annihilator under the standard pairing.
    pub fn orthogonal_complement(&self) -> Subspace {
        let m = Matrix::from_rows_with_width(self.basis.clone(), self.ambient).expect("basis shape");
        Subspace::span(self.ambient, &m.kernel())
    }

    /// Intersection `self ∩ other`, computed as the annihilator of the sum of
    /// annihilators.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "intersect: ambient mismatch");
        self.orthogonal_complement().sum(&other.orthogonal_complement()).orthogonal_complement()
    }
}

/// Exact intersection of two subspaces of the same ambient space.
pub fn intersect(a: &Subspace, b: &Subspace) -> Subspace {
    a.intersect(b)
}

/// Point of projective space given by nonzero homogeneous coordinates.
/// Equality and hashing ignore nonzero rescaling.
#[derive(Clone, Debug)]
pub struct ProjectivePoint {
    coords: Vector,
}

impl ProjectivePoint {
    /// Wraps homogeneous coordinates, rejecting the zero vector.
    pub fn new(coords: Vector) -> Result<Self, LinalgError> {
        if is_zero_vec(&coords) {
            return Err(LinalgError::ZeroVector);
        }
        Ok(ProjectivePoint { coords })
    }

    /// Affine point `(x_1, …, x_d)` embedded as `(x_1, …, x_d, 1)`.
    pub fn affine(xs: &[Scalar]) -> Self {
        let mut c = xs.to_vec();
        c.push(Scalar::one());
        ProjectivePoint { coords: c }
    }

    /// Homogeneous coordinates as stored.
    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// Dimension of the underlying vector space.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    /// Always false; a projective point has at least one coordinate.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Representative whose first nonzero coordinate is one.
    pub fn normalized(&self) -> Vector {
        normalize_leading(&self.coords)
    }

    /// Affine coordinates in the chart where the last coordinate is one, if
    /// the point is not at infinity there.
    pub fn dehomogenize(&self) -> Option<Vector> {
        let last = self.coords.last()?;
        if last.is_zero() {
            return None;
        }
        let inv = last.recip();
        Some(self.coords[..self.coords.len() - 1].iter().map(|x| x * &inv).collect())
    }

    /// Image under a linear map.
    pub fn transform(&self, m: &Matrix) -> Result<Self, LinalgError> {
        ProjectivePoint::new(m.mul_vec(&self.coords)?)
    }

    /// The subspace spanned by this point's coordinates.
    pub fn line(&self) -> Subspace {
        Subspace::span(self.coords.len(), std::slice::from_ref(&self.coords))
    }
}

impl PartialEq for ProjectivePoint {
    fn eq(&self, other: &Self) -> bool {
        self.normalized() == other.normalized()
    }
}

impl Eq for ProjectivePoint {}

impl std::hash::Hash for ProjectivePoint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.normalized().hash(state);
    }
}

/// Projective span of a set of points.
pub fn join(points: &[&ProjectivePoint]) -> Subspace {
    let k = points.first().map_or(0, |p| p.len());
    let vs: Vec<Vector> = points.iter().map(|p| p.coords.clone()).collect();
    Subspace::span(k, &vs)
}

/// The unique projective point of `a ∩ b`; fails unless the intersection is
/// one-dimensional.
pub fn meet_point(a: &Subspace, b: &Subspace) -> Result<ProjectivePoint, LinalgError> {
    let i = a.intersect(b);
    if i.dim() != 1 {
        return Err(LinalgError::NotAPoint { dim: i.dim() });
    }
    ProjectivePoint::new(i.basis()[0].clone())
}

/// Intersection of the lines `⟨p1, p2⟩` and `⟨p3, p4⟩`.
pub fn line_meet(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
    p4: &ProjectivePoint,
) -> Result<ProjectivePoint, LinalgError> {
    let l1 = join(&[p1, p2]);
    let l2 = join(&[p3, p4]);
    if l1.dim() != 2 || l2.dim() != 2 {
        return Err(LinalgError::NotAPoint { dim: 0 });
    }
    meet_point(&l1, &l2)
}

/// Signed ratio `(X − Y)/(Y − Z)` for three collinear points, computed from
/// 2×2 brackets in a coordinate pair that is injective on their span. The
/// affine normalisations cancel over a full multi-ratio, so the brackets alone
/// suffice once the chart functional factors are collected.
fn bracket_ratio(x: &[Scalar], y: &[Scalar], z: &[Scalar], factor: usize) -> Result<(Scalar, Scalar), LinalgError> {
    let k = x.len();
    let rank = Subspace::span(k, &[x.to_vec(), y.to_vec(), z.to_vec()]).dim();
    if rank > 2 {
        return Err(LinalgError::NotCollinear { factor });
    }
    let br = |a: &[Scalar], b: &[Scalar], r: usize, s: usize| &a[r] * &b[s] - &a[s] * &b[r];
    for r in 0..k {
        for s in r + 1..k {
            let xy = br(x, y, r, s);
            let yz = br(y, z, r, s);
            let xz = br(x, z, r, s);
            if !(xy.is_zero() && yz.is_zero() && xz.is_zero()) {
                if yz.is_zero() {
                    return Err(LinalgError::DegenerateDenominator { factor });
                }
                return Ok((xy, yz));
            }
        }
    }
    Err(LinalgError::DegenerateDenominator { factor })
}

/// Multi-ratio `[P_1, …, P_{2m}] = Π (P_{2i−1} − P_{2i}) / (P_{2i} − P_{2i+1})`
/// with `P_{2m+1} = P_1`, each factor a ratio of signed distances along the
/// line through three collinear points.
///
/// Each factor equals `[P_{2i−1} P_{2i}] ℓ(P_{2i+1}) / ([P_{2i} P_{2i+1}] ℓ(P_{2i−1}))`
/// for a chart functional `ℓ` and a bracket `[·,·]` on the line; the `ℓ`
/// factors telescope around the cycle, so the value is independent of the
/// chart and is computed from brackets alone. Points at infinity are allowed.
///
/// Errors: an odd or zero number of points, a non-collinear triple, or a
/// vanishing denominator (two consecutive points `P_{2i} = P_{2i+1}`).
pub fn multi_ratio(points: &[ProjectivePoint]) -> Result<Scalar, LinalgError> {
    let n = points.len();
    if n == 0 || n % 2 == 1 {
        return Err(LinalgError::BadPointCount { count: n });
    }
    let mut value = Scalar::one();
    for i in 0..n / 2 {
        let x = &points[2 * i].coords;
        let y = &points[2 * i + 1].coords;
        let z = &points[(2 * i + 2) % n].coords;
        let (num, den) = bracket_ratio(x, y, z, i)?;
        value *= num / den;
    }
    Ok(value)
}

/// Uniform random integer scalar in `[-9, 9]`.
pub fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    q(rng.gen_range(-9..=9))
}

/// Uniform random nonzero integer scalar in `[-9, 9] ∖ {0}`.
pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    loop {
        let x = rng.gen_range(-9..=9);
        if x != 0 {
            return q(x);
        }
    }
}

/// Uniform random positive integer scalar in `[1, 9]`.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    q(rng.gen_range(1..=9))
}

/// Random vector with entries in `[-9, 9]`.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vector {
    (0..k).map(|_| random_scalar(rng)).collect()
}

/// Random nonzero vector with entries in `[-9, 9]`.
pub fn random_nonzero_vector<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vector {
    loop {
        let v = random_vector(rng, k);
        if !is_zero_vec(&v) {
            return v;
        }
    }
}

/// Random matrix with entries in `[-9, 9]`.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_rows_with_width((0..rows).map(|_| random_vector(rng, cols)).collect(), cols)
        .expect("shape")
}

/// Random invertible matrix with entries in `[-9, 9]`, resampled until the
/// determinant is nonzero.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let m = random_matrix(rng, n, n);
        if !m.det().expect("square").is_zero() {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let k = kernel(&Matrix::from_i64(&[&[1, 1]]));
        assert_eq!(k.len(), 1);
        assert_eq!(primitive_integer(&k[0]), qv(&[1, -1]));
        assert!(kernel(&Matrix::identity(2)).is_empty());
        let k = kernel(&Matrix::from_i64(&[&[1, 2, 3], &[4, 5, 6]]));
        assert_eq!(k.len(), 1);
        assert_eq!(primitive_integer(&k[0]), qv(&[1, -2, 1]));
    }

    #[test]
    fn minor_examples() {
        assert_eq!(minor(&Matrix::identity(3), &[0, 1, 2]).unwrap(), q(1));
        assert_eq!(minor(&Matrix::from_i64(&[&[1, 2], &[3, 4]]), &[0, 1]).unwrap(), q(-2));
        let m = Matrix::from_i64(&[&[1, 2, 3], &[4, 5, 7]]);
        assert_eq!(minor(&m, &[1, 1]).unwrap(), q(0));
        assert!(matches!(minor(&m, &[0]), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn intersect_examples() {
        let a = Subspace::span(3, &[qv(&[1, 0, 0]), qv(&[0, 1, 0])]);
        let b = Subspace::span(3, &[qv(&[0, 0, 1]), qv(&[1, 1, 1])]);
        assert_eq!(intersect(&a, &b), Subspace::span(3, &[qv(&[1, 1, 0])]));
        assert_eq!(intersect(&a, &a), a);
        let e1 = Subspace::span(3, &[qv(&[1, 0, 0])]);
        let e2 = Subspace::span(3, &[qv(&[0, 1, 0])]);
        assert_eq!(intersect(&e1, &e2).dim(), 0);
    }

    fn on_line(t: i64) -> ProjectivePoint {
        ProjectivePoint::new(qv(&[t, 1])).unwrap()
    }

    #[test]
    fn multi_ratio_examples() {
        let pts: Vec<_> = [0, 1, 2, 3].iter().map(|&t| on_line(t)).collect();
        assert_eq!(multi_ratio(&pts).unwrap(), qf(-1, 3));
        let pts: Vec<_> = [5, 5, 2, 3].iter().map(|&t| on_line(t)).collect();
        assert_eq!(multi_ratio(&pts).unwrap(), q(0));
        let pts: Vec<_> = [0, 1, 1, 3].iter().map(|&t| on_line(t)).collect();
        assert!(matches!(multi_ratio(&pts), Err(LinalgError::DegenerateDenominator { factor: 0 })));
    }

    #[test]
    fn multi_ratio_in_the_plane_matches_affine_values() {
        // Points on the line y = 2x + 1 with parameters 0, 1, 2, 3.
        let pts: Vec<_> = [0i64, 1, 2, 3]
            .iter()
            .map(|&t| ProjectivePoint::affine(&qv(&[t, 2 * t + 1])))
            .collect();
        assert_eq!(multi_ratio(&pts).unwrap(), qf(-1, 3));
        // Rescaled homogeneous coordinates do not matter.
        let scaled: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ProjectivePoint::new(vscale(&q(i as i64 + 2), p.coords())).unwrap())
            .collect();
        assert_eq!(multi_ratio(&scaled).unwrap(), qf(-1, 3));
    }

    #[test]
    fn scalar_text_round_trip() {
        for s in ["3/1", "-2/3", "0/1"] {
            assert_eq!(format_scalar(&parse_scalar(s).unwrap()), s);
        }
        assert_eq!(parse_scalar("4").unwrap(), q(4));
        assert_eq!(parse_scalar("6/4").unwrap(), qf(3, 2));
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn primitive_integer_clears_denominators() {
        assert_eq!(primitive_integer(&[qf(-1, 2), qf(1, 3)]), qv(&[3, -2]));
    }

    #[test]
    fn solve_and_inverse() {
        let m = Matrix::from_i64(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
        assert_eq!(m.solve(&qv(&[3, 2])).unwrap(), qv(&[1, 1]));
        assert!(Matrix::from_i64(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }
}
