//! State specifications and exact distances between them.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, UnitBall};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{
    check_bloch, expectation_dense, expectation_product, pauli_count, PauliString,
    MAX_DENSE_QUBITS, MAX_QUBITS,
};

/// Tolerance for Hermiticity, unit trace, and the eigenvalue floor of dense states.
pub const DENSE_TOLERANCE: f64 = 1e-9;

/// Tensor product of single-qubit states given by Bloch vectors. `blochs[j]` is qubit `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    blochs: Vec<[f64; 3]>,
}

impl ProductState {
    pub fn new(blochs: Vec<[f64; 3]>) -> Result<Self> {
        let s = Self { blochs };
        s.validate()?;
        Ok(s)
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(vec![[0.0; 3]; n])
    }

    /// Bloch vectors drawn uniformly from the unit ball.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| UnitBall.sample(rng)).collect())
    }

    pub fn n(&self) -> usize {
        self.blochs.len()
    }

    pub fn blochs(&self) -> &[[f64; 3]] {
        &self.blochs
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.blochs.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount { n, max: MAX_QUBITS });
        }
        self.blochs.iter().try_for_each(check_bloch)
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        check_dense_size(self.n())?;
        let mut out = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for &[x, y, z] in self.blochs.iter().rev() {
            let q = DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new((1.0 + z) / 2.0, 0.0),
                    Complex64::new(x / 2.0, -y / 2.0),
                    Complex64::new(x / 2.0, y / 2.0),
                    Complex64::new((1.0 - z) / 2.0, 0.0),
                ],
            );
            out = out.kronecker(&q);
        }
        Ok(DenseState::from_matrix_unchecked(out))
    }
}

/// `(I + eps P) / 2^n` for a non-identity Pauli `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeedleState {
    pauli: PauliString,
    eps: f64,
}

impl NeedleState {
    pub fn new(pauli: PauliString, eps: f64) -> Result<Self> {
        let s = Self { pauli, eps };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.pauli.n()
    }

    pub fn pauli(&self) -> PauliString {
        self.pauli
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// PSD holds by construction since `|eps| <= 1` and `P` has eigenvalues `+-1`.
    pub fn validate(&self) -> Result<()> {
        if self.pauli.is_identity() {
            return Err(Error::InvalidState(
                "needle Pauli must not be the identity".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidState(format!(
                "needle eps {} outside (0, 1]",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn expectation(&self, p: &PauliString) -> f64 {
        if p.is_identity() {
            1.0
        } else if p.index() == self.pauli.index() {
            self.eps
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        let n = self.n();
        check_dense_size(n)?;
        let dim = 1usize << n;
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        let p = self.pauli.to_matrix()?;
        let m = (DMatrix::identity(dim, dim) + p * Complex64::new(self.eps, 0.0)) * scale;
        Ok(DenseState::from_matrix_unchecked(m))
    }
}

/// An explicit density matrix on at most eight qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    matrix: DMatrix<Complex64>,
}

fn check_dense_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not a power of two >= 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    check_dense_size(n)?;
    Ok(n)
}

impl DenseState {
    /// Builds and validates a density matrix.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let s = Self::from_matrix_unchecked(matrix);
        s.validate()?;
        Ok(s)
    }

    /// Skips validation. Panics if the matrix is not square with power-of-two size.
    pub fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "density matrix must be square");
        let n = qubits_for_dim(matrix.nrows()).expect("power-of-two dimension");
        Self { n, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn validate(&self) -> Result<()> {
        let dim = 1usize << self.n;
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.matrix.nrows(),
            });
        }
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > DENSE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |rho - rho^dagger| = {herm:e}"
            )));
        }
        let tr = self.matrix.trace();
        let tr_err = (tr - Complex64::new(1.0, 0.0)).norm();
        if tr_err > DENSE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 by {tr_err:e}"
            )));
        }
        let min_eig = self.eigenvalues().min();
        if min_eig < -DENSE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:e} is negative"
            )));
        }
        Ok(())
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> nalgebra::DVector<f64> {
        hermitian_part(&self.matrix).symmetric_eigenvalues()
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DenseFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DenseFile::from(self)).expect("dense state serializes")
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// On-disk form: `{"n": int, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Serialize, Deserialize)]
struct DenseFile {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<DenseFile> for DenseState {
    type Error = Error;

    fn try_from(f: DenseFile) -> Result<Self> {
        check_dense_size(f.n)?;
        let dim = 1usize << f.n;
        let rows_ok =
            |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
        if !rows_ok(&f.re) || !rows_ok(&f.im) {
            return Err(Error::Parse(format!(
                "expected {dim}x{dim} arrays for n = {}",
                f.n
            )));
        }
        let m = DMatrix::from_fn(dim, dim, |r, c| Complex64::new(f.re[r][c], f.im[r][c]));
        DenseState::from_matrix(m)
    }
}

impl From<&DenseState> for DenseFile {
    fn from(s: &DenseState) -> Self {
        let dim = s.matrix.nrows();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..dim)
                .map(|r| (0..dim).map(|c| f(&s.matrix[(r, c)])).collect())
                .collect()
        };
        DenseFile {
            n: s.n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

/// Any of the supported state descriptions.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Product(ProductState),
    Needle(NeedleState),
    Dense(DenseState),
}

impl StateSpec {
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Ok(StateSpec::Product(ProductState::maximally_mixed(n)?))
    }

    pub fn n(&self) -> usize {
        match self {
            StateSpec::Product(s) => s.n(),
            StateSpec::Needle(s) => s.n(),
            StateSpec::Dense(s) => s.n(),
        }
    }

    /// Checks the invariants of the underlying state.
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Product(s) => s.validate(),
            StateSpec::Needle(s) => s.validate(),
            StateSpec::Dense(s) => s.validate(),
        }
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        match self {
            StateSpec::Product(s) => s.to_dense(),
            StateSpec::Needle(s) => s.to_dense(),
            StateSpec::Dense(s) => Ok(s.clone()),
        }
    }

    /// `Tr(state P)` by the cheapest available path.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.n() {
            return Err(Error::QubitMismatch {
                left: self.n(),
                right: p.n(),
            });
        }
        match self {
            StateSpec::Product(s) => expectation_product(s.blochs(), p),
            StateSpec::Needle(s) => Ok(s.expectation(p)),
            StateSpec::Dense(s) => expectation_dense(s, p),
        }
    }

    /// All `4^n` Pauli coefficients, in index order.
    pub fn pauli_coefficients(&self) -> Result<Vec<f64>> {
        let n = self.n();
        check_dense_size(n)?;
        (0..pauli_count(n))
            .map(|i| self.expectation(&PauliString::new(n, i)?))
            .collect()
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Product(s) => {
                if s.blochs.iter().all(|v| *v == [0.0; 3]) {
                    return write!(f, "mixed");
                }
                write!(f, "product:")?;
                for (j, v) in s.blochs.iter().rev().enumerate() {
                    if j > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{},{},{}", v[0], v[1], v[2])?;
                }
                Ok(())
            }
            StateSpec::Needle(s) => write!(f, "needle:{}:{}", s.pauli, s.eps),
            StateSpec::Dense(s) => write!(f, "dense(n={})", s.n),
        }
    }
}

fn check_same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::QubitMismatch { left: a, right: b });
    }
    Ok(())
}

/// `||a - b||_1`, the (unnormalized) sum of absolute eigenvalues of `a - b`.
pub fn trace_distance(a: &DenseState, b: &DenseState) -> Result<f64> {
    check_same_n(a.n, b.n)?;
    let diff = hermitian_part(&(&a.matrix - &b.matrix));
    Ok(diff.symmetric_eigenvalues().iter().map(|v| v.abs()).sum())
}

/// Route for [`hs_distance_sq`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum HsPath {
    /// `Tr((a - b)^2)` on explicit matrices.
    Dense,
    /// `sum_P (alpha_P - beta_P)^2 / 2^n` over all Pauli coefficients.
    Parseval,
}

/// Squared Hilbert-Schmidt distance `||a - b||_2^2`.
pub fn hs_distance_sq(a: &StateSpec, b: &StateSpec, path: HsPath) -> Result<f64> {
    check_same_n(a.n(), b.n())?;
    let n = a.n();
    check_dense_size(n)?;
    match path {
        HsPath::Dense => {
            let d = a.to_dense()?.matrix - b.to_dense()?.matrix;
            // Tr(D^2) = sum |D_ij|^2 for Hermitian D
            Ok(d.iter().map(|z| z.norm_sqr()).sum())
        }
        HsPath::Parseval => {
            let mut acc = 0.0;
            for i in 0..pauli_count(n) {
                let p = PauliString::new(n, i)?;
                let d = a.expectation(&p)? - b.expectation(&p)?;
                acc += d * d;
            }
            Ok(acc / (1u64 << n) as f64)
        }
    }
}
