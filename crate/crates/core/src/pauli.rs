//! Pauli strings and their expectation values.
//!
//! A [`PauliString`] on `n` qubits is stored as a single integer in `[0, 4^n)`:
//! base-4 digit `j` (little-endian) is the letter acting on qubit `j`, with the
//! digit map `0 -> I, 1 -> X, 2 -> Y, 3 -> Z`. In text form qubit 0 is the
//! rightmost letter, so `"XZ"` is `X` on qubit 1 and `Z` on qubit 0 (index 7).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::states::DenseState;

/// Largest supported qubit count for a Pauli string.
pub const MAX_QUBITS: usize = 14;

/// Largest qubit count for which dense matrices are built.
pub const MAX_DENSE_QUBITS: usize = 8;

/// Imaginary part tolerated (and discarded) in `Tr(rho P)`.
pub const IMAG_TOLERANCE: f64 = 1e-9;

/// Tolerance on Bloch-vector norms.
pub const BLOCH_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

/// A single-qubit Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn digit(self) -> u64 {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_digit(d: u64) -> Self {
        Self::ALL[(d & 3) as usize]
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' | 'i' => Ok(Pauli::I),
            'X' | 'x' => Ok(Pauli::X),
            'Y' | 'y' => Ok(Pauli::Y),
            'Z' | 'z' => Ok(Pauli::Z),
            other => Err(Error::InvalidLetter(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The 2x2 matrix, row-major. `Y = [[0, -i], [i, 0]]`.
    pub const fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Pauli::I => SIGMA_I,
            Pauli::X => SIGMA_X,
            Pauli::Y => SIGMA_Y,
            Pauli::Z => SIGMA_Z,
        }
    }
}

pub const SIGMA_I: [[Complex64; 2]; 2] = [[ONE, ZERO], [ZERO, ONE]];
pub const SIGMA_X: [[Complex64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];
pub const SIGMA_Y: [[Complex64; 2]; 2] = [[ZERO, Complex64::new(0.0, -1.0)], [I_UNIT, ZERO]];
pub const SIGMA_Z: [[Complex64; 2]; 2] = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

/// An `n`-qubit Pauli string in canonical base-4 encoding.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    index: u64,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount { n, max: MAX_QUBITS });
    }
    Ok(())
}

/// Number of Pauli strings on `n` qubits.
pub fn pauli_count(n: usize) -> u64 {
    1u64 << (2 * n)
}

impl PauliString {
    pub fn new(n: usize, index: u64) -> Result<Self> {
        check_qubits(n)?;
        if index >= pauli_count(n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        Ok(Self { n, index })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    /// Encodes a letter word; the last letter acts on qubit 0.
    pub fn encode(letters: &str) -> Result<Self> {
        let chars: Vec<char> = letters.chars().collect();
        check_qubits(chars.len())?;
        let mut index = 0u64;
        for &c in &chars {
            index = index * 4 + Pauli::from_char(c)?.digit();
        }
        Ok(Self {
            n: chars.len(),
            index,
        })
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        check_qubits(letters.len())?;
        let index = letters.iter().fold(0u64, |acc, p| acc * 4 + p.digit());
        Ok(Self {
            n: letters.len(),
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_identity(&self) -> bool {
        self.index == 0
    }

    /// Letter acting on `qubit`.
    pub fn letter(&self, qubit: usize) -> Pauli {
        debug_assert!(qubit < self.n);
        Pauli::from_digit(self.index >> (2 * qubit))
    }

    /// Letters in text order (qubit `n-1` first).
    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).rev().map(|q| self.letter(q)).collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (0..self.n).filter(|&q| self.letter(q) != Pauli::I).count()
    }

    /// Bit masks `(flip, phase_y, phase_z)`: qubits acted on by X or Y, by Y, by Z.
    fn masks(&self) -> (usize, usize, usize) {
        let (mut flip, mut ys, mut zs) = (0usize, 0usize, 0usize);
        for q in 0..self.n {
            match self.letter(q) {
                Pauli::I => {}
                Pauli::X => flip |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    ys |= 1 << q;
                }
                Pauli::Z => zs |= 1 << q,
            }
        }
        (flip, ys, zs)
    }

    /// Explicit `2^n x 2^n` matrix (Kronecker product, qubit `n-1` outermost).
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::QubitCount {
                n: self.n,
                max: MAX_DENSE_QUBITS,
            });
        }
        let mut out = DMatrix::from_element(1, 1, ONE);
        for p in self.letters() {
            let m = p.matrix();
            let small = DMatrix::from_fn(2, 2, |r, c| m[r][c]);
            out = out.kronecker(&small);
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.letters() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::encode(s)
    }
}

/// `Tr(PQ)`: `2^n` when the strings coincide, zero otherwise.
pub fn pauli_pair_trace(p: &PauliString, q: &PauliString) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::QubitMismatch {
            left: p.n,
            right: q.n,
        });
    }
    Ok(if p.index == q.index {
        (1u64 << p.n) as f64
    } else {
        0.0
    })
}

/// Checks that a Bloch vector lies in the unit ball.
pub fn check_bloch(v: &[f64; 3]) -> Result<()> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !norm.is_finite() || norm > 1.0 + BLOCH_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "Bloch vector {v:?} has norm {norm} > 1"
        )));
    }
    Ok(())
}

/// `Tr(rho P)` for the product state with the given Bloch vectors (`blochs[j]` is qubit `j`).
pub fn expectation_product(blochs: &[[f64; 3]], p: &PauliString) -> Result<f64> {
    if blochs.len() != p.n {
        return Err(Error::QubitMismatch {
            left: blochs.len(),
            right: p.n,
        });
    }
    let mut acc = 1.0;
    for (q, v) in blochs.iter().enumerate() {
        check_bloch(v)?;
        acc *= match p.letter(q) {
            Pauli::I => 1.0,
            Pauli::X => v[0],
            Pauli::Y => v[1],
            Pauli::Z => v[2],
        };
    }
    Ok(acc)
}

/// `Tr(rho P)` for an explicit density matrix.
///
/// `P` maps `|b>` to `c(b) |b ^ flip>`, so the trace is a single pass over the
/// `2^n` entries `rho[b, b ^ flip] * c(b)` and never forms `P` explicitly.
pub fn expectation_dense(rho: &DenseState, p: &PauliString) -> Result<f64> {
    if rho.n() != p.n {
        return Err(Error::QubitMismatch {
            left: rho.n(),
            right: p.n,
        });
    }
    let m = rho.matrix();
    let (flip, ys, zs) = p.masks();
    let y_count = ys.count_ones();
    // i^(#Y) from the Y letters, before per-basis signs.
    let base = match y_count % 4 {
        0 => ONE,
        1 => I_UNIT,
        2 => -ONE,
        _ => -I_UNIT,
    };
    let mut acc = ZERO;
    for b in 0..m.nrows() {
        // Y|0> = i|1>, Y|1> = -i|0>: one extra minus per Y qubit set in b.
        let minus = ((b & ys).count_ones() + (b & zs).count_ones()) & 1 == 1;
        let v = m[(b, b ^ flip)];
        acc += if minus { -v } else { v };
    }
    let value = acc * base;
    if value.im.abs() > IMAG_TOLERANCE {
        return Err(Error::ImaginaryResidue(value.im.abs()));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_trace(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
        (a * b).trace()
    }

    #[test]
    fn encode_examples() {
        let p = PauliString::encode("I").unwrap();
        assert_eq!((p.n(), p.index()), (1, 0));
        assert_eq!(PauliString::encode("Z").unwrap().index(), 3);
        let xz = PauliString::encode("XZ").unwrap();
        assert_eq!((xz.n(), xz.index()), (2, 7));
        assert_eq!(xz.letter(0), Pauli::Z);
        assert_eq!(xz.letter(1), Pauli::X);
        assert_eq!(xz.to_string(), "XZ");
    }

    #[test]
    fn encode_errors() {
        assert_eq!(PauliString::encode("XQ"), Err(Error::InvalidLetter('Q')));
        assert!(matches!(
            PauliString::encode(""),
            Err(Error::QubitCount { n: 0, .. })
        ));
        assert!(matches!(
            PauliString::encode(&"X".repeat(15)),
            Err(Error::QubitCount { n: 15, .. })
        ));
        assert!(PauliString::encode(&"Z".repeat(14)).is_ok());
        assert!(PauliString::new(2, 16).is_err());
    }

    #[test]
    fn single_qubit_matrices() {
        let mats: Vec<DMatrix<Complex64>> = Pauli::ALL
            .iter()
            .map(|p| {
                PauliString::from_letters(&[*p])
                    .unwrap()
                    .to_matrix()
                    .unwrap()
            })
            .collect();
        let id = &mats[0];
        for (a, ma) in mats.iter().enumerate() {
            assert_eq!(ma, &ma.adjoint(), "Hermitian");
            assert_eq!(&(ma * ma), id, "squares to identity");
            for (b, mb) in mats.iter().enumerate() {
                let t = dense_trace(ma, mb);
                let expect = if a == b { 2.0 } else { 0.0 };
                assert_eq!(t, Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn pair_trace_examples() {
        let x = PauliString::encode("X").unwrap();
        assert_eq!(pauli_pair_trace(&x, &x).unwrap(), 2.0);
        let xz = PauliString::encode("XZ").unwrap();
        let yz = PauliString::encode("YZ").unwrap();
        assert_eq!(pauli_pair_trace(&xz, &xz).unwrap(), 4.0);
        assert_eq!(pauli_pair_trace(&xz, &yz).unwrap(), 0.0);
        let dense = dense_trace(&xz.to_matrix().unwrap(), &yz.to_matrix().unwrap());
        assert!(dense.norm() < 1e-12);
        assert!(pauli_pair_trace(&x, &xz).is_err());
    }

    #[test]
    fn pair_trace_matches_dense_up_to_three_qubits() {
        for n in 1..=3 {
            let mats: Vec<_> = (0..pauli_count(n))
                .map(|i| PauliString::new(n, i).unwrap())
                .map(|p| (p, p.to_matrix().unwrap()))
                .collect();
            for (p, mp) in &mats {
                for (q, mq) in &mats {
                    let dense = dense_trace(mp, mq);
                    let sym = pauli_pair_trace(p, q).unwrap();
                    assert!((dense.re - sym).abs() < 1e-12 && dense.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_expectation_examples() {
        let z = PauliString::encode("Z").unwrap();
        let x = PauliString::encode("X").unwrap();
        assert_eq!(expectation_product(&[[0.0, 0.0, 1.0]], &z).unwrap(), 1.0);
        assert_eq!(expectation_product(&[[0.0, 0.0, 1.0]], &x).unwrap(), 0.0);
        // qubit 1 along +x, qubit 0 along +z
        let xz = PauliString::encode("XZ").unwrap();
        let blochs = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        assert_eq!(expectation_product(&blochs, &xz).unwrap(), 1.0);
        let dense = crate::states::ProductState::new(blochs.to_vec())
            .unwrap()
            .to_dense()
            .unwrap();
        assert!((expectation_dense(&dense, &xz).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_expectation_rejects_long_vectors() {
        let z = PauliString::encode("Z").unwrap();
        assert!(expectation_product(&[[0.0, 0.0, 1.0 + 1e-9]], &z).is_err());
        assert!(expectation_product(&[[0.0, 0.0, 1.0 + 1e-13]], &z).is_ok());
    }

    #[test]
    fn dense_expectation_examples() {
        use crate::states::DenseState;
        let h = 0.5;
        let plus =
            DenseState::from_matrix(DMatrix::from_element(2, 2, Complex64::new(h, 0.0))).unwrap();
        let x = PauliString::encode("X").unwrap();
        assert!((expectation_dense(&plus, &x).unwrap() - 1.0).abs() < 1e-15);

        let mixed =
            DenseState::from_matrix(DMatrix::identity(2, 2) * Complex64::new(0.5, 0.0)).unwrap();
        let z = PauliString::encode("Z").unwrap();
        assert_eq!(expectation_dense(&mixed, &z).unwrap(), 0.0);

        // (I + 0.3 Y) / 2
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, -0.15),
                Complex64::new(0.0, 0.15),
                Complex64::new(0.5, 0.0),
            ],
        );
        let rho = DenseState::from_matrix(m).unwrap();
        let y = PauliString::encode("Y").unwrap();
        assert!((expectation_dense(&rho, &y).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dense_expectation_matches_explicit_trace() {
        use crate::states::ProductState;
        let state = ProductState::new(vec![[0.1, -0.5, 0.3], [0.6, 0.2, -0.7], [0.0, 0.9, 0.1]])
            .unwrap()
            .to_dense()
            .unwrap();
        for i in 0..pauli_count(3) {
            let p = PauliString::new(3, i).unwrap();
            let explicit = (state.matrix() * p.to_matrix().unwrap()).trace();
            let fast = expectation_dense(&state, &p).unwrap();
            assert!((explicit.re - fast).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn non_hermitian_input_is_flagged() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.2, 0.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        let rho = DenseState::from_matrix_unchecked(m);
        let y = PauliString::encode("Y").unwrap();
        assert!(matches!(
            expectation_dense(&rho, &y),
            Err(Error::ImaginaryResidue(_))
        ));
    }
}
