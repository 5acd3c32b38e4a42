//! Index vectors, masked vectorization and block expansion.
//!
//! Every stacked vector in the crate uses one layout: a vector of length
//! `N * B` is `B` consecutive blocks of length `N`, block `j` (1-based)
//! occupying positions `(j-1)*N .. j*N`. `vec(W)` of an `N x (K+1)` matrix is
//! therefore the column stack `[w_c; w_1; ...; w_K]`, and a scheduling vector
//! `p_k` of length `N * M` holds `rho_{k,m}` repeated over block `m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix stored column-major, so `data` is `vec(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a matrix from its vectorization.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `vec(M)` as a slice.
    pub fn as_vec(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_vec_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.data)
    }
}

/// The five index-vector families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    /// Selects stream column `i` of `vec(W)`; index 0 is the common stream.
    A,
    /// Selects DUE block `m` of an `N*M` vector.
    B,
    /// Selects element row `n` across all `K+1` columns of `vec(W)`.
    C,
    /// Selects element row `n` across all `M` columns of `vec(F_k)`.
    D,
    /// Single one at the leading position of block `m`.
    E,
}

/// Binary position-index vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexVector {
    pub kind: IndexKind,
    pub index: usize,
    pub entries: Vec<f64>,
}

impl IndexVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Positions holding a one.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
    }
}

/// Builds an index vector.
///
/// `blocks` is `K` for kinds `A`/`C` (vectors of length `N*(K+1)`) and `M`
/// for kinds `B`/`D`/`E` (vectors of length `N*M`). Kind `A` accepts
/// `index = 0` for the common stream and `1..=K` for the private streams;
/// the other kinds are 1-based.
pub fn make_index(kind: IndexKind, index: usize, n: usize, blocks: usize) -> Result<IndexVector> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let (len, lo, hi, what) = match kind {
        IndexKind::A => (n * (blocks + 1), 0, blocks, "stream index"),
        IndexKind::B => (n * blocks, 1, blocks, "DUE index"),
        IndexKind::C => (n * (blocks + 1), 1, n, "element index"),
        IndexKind::D => (n * blocks, 1, n, "element index"),
        IndexKind::E => (n * blocks, 1, blocks, "DUE index"),
    };
    if index < lo || index > hi {
        return Err(Error::IndexOutOfRange { what, index, lo, hi });
    }
    let mut entries = vec![0.0; len];
    match kind {
        IndexKind::A => entries[index * n..(index + 1) * n].fill(1.0),
        IndexKind::B => entries[(index - 1) * n..index * n].fill(1.0),
        IndexKind::C | IndexKind::D => {
            let cols = len / n;
            for c in 0..cols {
                entries[c * n + index - 1] = 1.0;
            }
        }
        IndexKind::E => entries[(index - 1) * n] = 1.0,
    }
    Ok(IndexVector {
        kind,
        index,
        entries,
    })
}

/// `vec(A ∘ X)`, computed elementwise.
pub fn vec_hadamard(mask: &CMatrix, x: &CMatrix) -> Result<Vec<Complex64>> {
    if mask.rows != x.rows || mask.cols != x.cols {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{}, operand is {}x{}",
            mask.rows, mask.cols, x.rows, x.cols
        )));
    }
    Ok(mask.data.iter().zip(&x.data).map(|(a, b)| a * b).collect())
}

/// `diag(vec(A)) · vec(X)` evaluated as a dense matrix-vector product.
///
/// Quadratic in the size; only meant as the second route for checking
/// [`vec_hadamard`].
pub fn diag_matvec(mask: &CMatrix, x: &CMatrix) -> Result<Vec<Complex64>> {
    if mask.rows != x.rows || mask.cols != x.cols {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{}, operand is {}x{}",
            mask.rows, mask.cols, x.rows, x.cols
        )));
    }
    let a = &mask.data;
    let v = &x.data;
    let len = a.len();
    let zero = Complex64::new(0.0, 0.0);
    Ok((0..len)
        .map(|i| {
            let mut acc = zero;
            for (j, vj) in v.iter().enumerate() {
                let d = if i == j { a[i] } else { zero };
                acc += d * vj;
            }
            acc
        })
        .collect())
}

/// How [`expand`] builds its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpandMode {
    /// Stack `copies` verbatim repeats of the input.
    Channel,
    /// Treat the input as `rho` (length `M`) and repeat each entry over a
    /// block of length `copies`.
    Schedule,
}

/// Channel repetition or scheduling-vector expansion.
pub fn expand<T: Copy>(v: &[T], copies: usize, mode: ExpandMode) -> Result<Vec<T>> {
    if copies == 0 {
        return Err(Error::invalid("copies", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(v.len() * copies);
    match mode {
        ExpandMode::Channel => {
            for _ in 0..copies {
                out.extend_from_slice(v);
            }
        }
        ExpandMode::Schedule => {
            for &x in v {
                out.extend(std::iter::repeat_n(x, copies));
            }
        }
    }
    Ok(out)
}

/// Concatenates equally sized blocks, e.g. `z~_{k,u} = [z_{k,1,u}; ...; z_{k,M,u}]`.
pub fn stack_blocks(blocks: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
    let Some(first) = blocks.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if blocks.iter().any(|b| b.len() != n) {
        return Err(Error::DimensionMismatch("blocks differ in length".into()));
    }
    Ok(blocks.iter().flatten().copied().collect())
}

/// `x ∘ mask` for a real binary mask.
pub fn apply_mask(x: &[Complex64], mask: &IndexVector) -> Vec<Complex64> {
    debug_assert_eq!(x.len(), mask.len());
    x.iter().zip(&mask.entries).map(|(v, &m)| v * m).collect()
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn common_stream_block() {
        let a = make_index(IndexKind::A, 0, 2, 1).unwrap();
        assert_eq!(a.entries, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn due_block() {
        let b = make_index(IndexKind::B, 1, 2, 2).unwrap();
        assert_eq!(b.entries, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn row_selector_spans_common_column() {
        let cn = make_index(IndexKind::C, 1, 2, 1).unwrap();
        assert_eq!(cn.entries, vec![1.0, 0.0, 1.0, 0.0]);
        let d2 = make_index(IndexKind::D, 2, 3, 2).unwrap();
        assert_eq!(d2.entries, vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn leading_entry_selector() {
        let e = make_index(IndexKind::E, 2, 3, 2).unwrap();
        assert_eq!(e.entries, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_indices() {
        assert!(matches!(
            make_index(IndexKind::A, 3, 2, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(make_index(IndexKind::B, 0, 2, 2).is_err());
        assert!(make_index(IndexKind::C, 3, 2, 2).is_err());
        assert!(make_index(IndexKind::E, 3, 2, 2).is_err());
        assert!(make_index(IndexKind::B, 1, 0, 2).is_err());
    }

    #[test]
    fn hadamard_small_example() {
        let a = CMatrix::from_fn(2, 2, |r, c| c2(&[[1.0, 0.0], [0.0, 2.0]], r, c));
        let x = CMatrix::from_fn(2, 2, |r, c| c2(&[[3.0, 4.0], [5.0, 6.0]], r, c));
        let v = vec_hadamard(&a, &x).unwrap();
        assert_eq!(v, vec![c(3.0), c(0.0), c(0.0), c(12.0)]);
        assert_eq!(diag_matvec(&a, &x).unwrap(), v);
    }

    fn c2(m: &[[f64; 2]; 2], r: usize, col: usize) -> Complex64 {
        c(m[r][col])
    }

    #[test]
    fn hadamard_identity_and_annihilator() {
        let x = CMatrix::from_fn(3, 2, |r, col| Complex64::new(r as f64 + 0.5, col as f64 - 1.0));
        let ones = CMatrix::from_fn(3, 2, |_, _| c(1.0));
        let zeros = CMatrix::zeros(3, 2);
        assert_eq!(vec_hadamard(&ones, &x).unwrap(), x.as_vec());
        assert!(vec_hadamard(&zeros, &x)
            .unwrap()
            .iter()
            .all(|v| *v == c(0.0)));
        assert!(vec_hadamard(&CMatrix::zeros(2, 3), &x).is_err());
    }

    #[test]
    fn expansion_modes() {
        assert_eq!(
            expand(&[c(2.0)], 2, ExpandMode::Channel).unwrap(),
            vec![c(2.0), c(2.0)]
        );
        assert_eq!(
            expand(&[1.0, 0.0], 2, ExpandMode::Schedule).unwrap(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        assert!(expand(&[1.0], 0, ExpandMode::Channel).is_err());
        let z1 = vec![c(1.0), c(2.0)];
        let z2 = vec![c(3.0), c(4.0)];
        assert_eq!(
            stack_blocks(&[z1.clone(), z2.clone()]).unwrap(),
            vec![c(1.0), c(2.0), c(3.0), c(4.0)]
        );
        assert!(stack_blocks(&[z1, vec![c(0.0)]]).is_err());
    }
}
