//! Product-operator algebra: Pauli matrices, embedded single-spin operators,
//! the orthogonal basis of su(2^n), commutators and inner products.
//!
//! The basis elements take the form `2^(q-1) * prod_k I_{k,a_k}` where `q` is
//! the number of non-identity factors; `q = 0` is excluded (the identity is
//! not an algebra element). With this normalization `tr(B_r B_s)` equals
//! `delta_rs * 2^(n-2)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-spin factor of a product operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Identity,
}

impl Axis {
    /// The three non-identity axes in enumeration order.
    pub const XYZ: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn is_identity(self) -> bool {
        matches!(self, Axis::Identity)
    }

    fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
            Axis::Identity => 'e',
        }
    }
}

/// Dense square complex matrix, row-major, of dimension 2^n.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            entries: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = Complex64::ONE;
        }
        m
    }

    /// Build from a row-major slice; the length must be `dim * dim`.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        Ok(ComplexMatrix {
            dim,
            entries: entries.to_vec(),
        })
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, &v) in values.iter().enumerate() {
            m[(k, k)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of spins n for a 2^n-dimensional matrix.
    pub fn spin_count(&self) -> Result<usize> {
        if !self.dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { dim: self.dim });
        }
        Ok(self.dim.trailing_zeros() as usize)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut out = Self::zeros(n);
        for i in 0..a {
            for j in 0..a {
                let s = self.entries[i * a + j];
                if s == Complex64::ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out.entries[(i * b + k) * n + (j * b + l)] = s * other.entries[k * b + l];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.entries[k * self.dim + k]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Maximum column sum of entry magnitudes (operator 1-norm).
    pub fn norm_one(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.entries[i * n + j].norm()).sum())
            .fold(0.0_f64, f64::max)
    }

    /// Residual of Hermiticity: `max |A - A^dag|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut r = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let d = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                r = r.max(d);
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let d = (self.entries[i * n + j] + self.entries[j * n + i].conj()).norm();
                if d > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Residual of unitarity: `max |U^dag U - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = self.adjoint().matmul(self).expect("same dim");
        prod.max_abs_diff(&Self::identity(self.dim))
            .expect("same dim")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                if i != j && self.entries[i * n + j] != Complex64::ZERO {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// The 2x2 spin-1/2 operator for `axis`: entries `+-1/2`, `+-i/2`, or the
/// identity matrix for `Axis::Identity`.
pub fn pauli(axis: Axis) -> ComplexMatrix {
    let h = 0.5;
    let (a, b, c, d) = match axis {
        Axis::X => (
            Complex64::ZERO,
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::ZERO,
        ),
        Axis::Y => (
            Complex64::ZERO,
            Complex64::new(0.0, -h),
            Complex64::new(0.0, h),
            Complex64::ZERO,
        ),
        Axis::Z => (
            Complex64::new(h, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(-h, 0.0),
        ),
        Axis::Identity => (
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ONE,
        ),
    };
    ComplexMatrix {
        dim: 2,
        entries: vec![a, b, c, d],
    }
}

/// The 2^n-dimensional single-spin operator `I_{k,axis}`: identity factors on
/// every slot except the 1-based position `k`.
pub fn embed(axis: Axis, spin: usize, n: usize) -> Result<ComplexMatrix> {
    if spin == 0 || spin > n {
        return Err(Error::SpinOutOfRange { spin, n });
    }
    let mut out = ComplexMatrix::identity(1);
    for k in 1..=n {
        let factor = if k == spin {
            pauli(axis)
        } else {
            pauli(Axis::Identity)
        };
        out = out.kron(&factor);
    }
    Ok(out)
}

/// One product-operator basis element: a per-spin axis assignment scaled by a
/// real coefficient. The matrix realization carries the `2^(q-1)` prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperatorTerm {
    pub n: usize,
    pub factors: Vec<Axis>,
    pub coefficient: f64,
}

impl ProductOperatorTerm {
    pub fn new(n: usize, factors: Vec<Axis>, coefficient: f64) -> Result<Self> {
        if factors.len() != n {
            return Err(Error::DimensionMismatch {
                left: factors.len(),
                right: n,
            });
        }
        Ok(ProductOperatorTerm {
            n,
            factors,
            coefficient,
        })
    }

    /// Convenience constructor from 1-based `(spin, axis)` pairs; unlisted
    /// spins get identity factors.
    pub fn from_axes(n: usize, axes: &[(usize, Axis)], coefficient: f64) -> Result<Self> {
        let mut factors = vec![Axis::Identity; n];
        for &(spin, axis) in axes {
            if spin == 0 || spin > n {
                return Err(Error::SpinOutOfRange { spin, n });
            }
            factors[spin - 1] = axis;
        }
        ProductOperatorTerm::new(n, factors, coefficient)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|a| !a.is_identity()).count()
    }
}

impl fmt::Display for ProductOperatorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coefficient)?;
        for (k, axis) in self.factors.iter().enumerate() {
            if !axis.is_identity() {
                write!(f, " I{}{}", k + 1, axis.letter())?;
            }
        }
        Ok(())
    }
}

/// Parse the textual form `"<coeff> I<k><axis> ..."`, e.g. `"1.0 I1z I2z"`.
/// Spins not mentioned get identity factors; `q = 0` is rejected.
pub fn parse_term(text: &str, n: usize) -> Result<ProductOperatorTerm> {
    let mut tokens = text.split_whitespace();
    let coeff_tok = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty term".into()))?;
    let coefficient: f64 = coeff_tok
        .parse()
        .map_err(|_| Error::Parse(format!("bad coefficient `{coeff_tok}`")))?;

    let mut factors = vec![Axis::Identity; n];
    for tok in tokens {
        let rest = tok
            .strip_prefix('I')
            .ok_or_else(|| Error::Parse(format!("expected I<k><axis>, got `{tok}`")))?;
        if rest.len() < 2 {
            return Err(Error::Parse(format!("expected I<k><axis>, got `{tok}`")));
        }
        let (idx_str, axis_str) = rest.split_at(rest.len() - 1);
        let spin: usize = idx_str
            .parse()
            .map_err(|_| Error::Parse(format!("bad spin index in `{tok}`")))?;
        if spin == 0 || spin > n {
            return Err(Error::SpinOutOfRange { spin, n });
        }
        let axis = match axis_str {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            other => return Err(Error::Parse(format!("bad axis `{other}` in `{tok}`"))),
        };
        if !factors[spin - 1].is_identity() {
            return Err(Error::Parse(format!("spin {spin} listed twice")));
        }
        factors[spin - 1] = axis;
    }
    let term = ProductOperatorTerm::new(n, factors, coefficient)?;
    if term.weight() == 0 {
        return Err(Error::IdentityTerm);
    }
    Ok(term)
}

/// Matrix realization `coefficient * 2^(q-1) * prod_k I_{k,a_k}`.
///
/// The factors act on distinct tensor slots, so the product order is
/// irrelevant; the whole product is a single Kronecker product.
pub fn realize(term: &ProductOperatorTerm) -> Result<ComplexMatrix> {
    let q = term.weight();
    if q == 0 {
        return Err(Error::IdentityTerm);
    }
    let mut out = ComplexMatrix::identity(1);
    for axis in &term.factors {
        out = out.kron(&pauli(*axis));
    }
    let prefactor = term.coefficient * f64::powi(2.0, q as i32 - 1);
    Ok(out.scale_real(prefactor))
}

/// Symbolic sum of product-operator terms over a common spin count.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    pub n: usize,
    pub terms: Vec<ProductOperatorTerm>,
}

impl OperatorSum {
    pub fn new(n: usize, terms: Vec<ProductOperatorTerm>) -> Result<Self> {
        for t in &terms {
            if t.n != n {
                return Err(Error::DimensionMismatch {
                    left: t.n,
                    right: n,
                });
            }
        }
        Ok(OperatorSum { n, terms })
    }

    pub fn realize(&self) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(1 << self.n);
        for t in &self.terms {
            out = out.add(&realize(t)?)?;
        }
        Ok(out)
    }
}

/// All `4^n - 1` basis terms with coefficient 1, enumerated lexicographically
/// over factor tuples with `identity < x < y < z`; the identity-only tuple is
/// excluded. The order is fixed so downstream expansions are reproducible.
pub fn basis(n: usize) -> Vec<ProductOperatorTerm> {
    let order = [Axis::Identity, Axis::X, Axis::Y, Axis::Z];
    let total = 4usize.pow(n as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 1..total {
        // Digit 0 of `code` in base 4 is the last spin, so divide from the end.
        let mut factors = vec![Axis::Identity; n];
        let mut c = code;
        for k in (0..n).rev() {
            factors[k] = order[c % 4];
            c /= 4;
        }
        out.push(ProductOperatorTerm {
            n,
            factors,
            coefficient: 1.0,
        });
    }
    out
}

/// Commutator `AB - BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}

/// Inner product `tr(A^dag B)`.
pub fn inner_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    a.check_same_dim(b)?;
    let n = a.dim;
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.entries[j * n + i].conj() * b.entries[j * n + i];
        }
    }
    Ok(acc)
}

/// Expand a 2^n-dimensional matrix in the product-operator basis, returning
/// the complex coefficient of each basis term: `c_s = tr(B_s M) / 2^(n-2)`.
pub fn basis_coefficients(
    m: &ComplexMatrix,
    n: usize,
) -> Result<Vec<(ProductOperatorTerm, Complex64)>> {
    if m.dim != 1 << n {
        return Err(Error::DimensionMismatch {
            left: m.dim,
            right: 1 << n,
        });
    }
    let norm = f64::powi(2.0, n as i32 - 2);
    basis(n)
        .into_iter()
        .map(|term| {
            let b = realize(&term)?;
            let c = inner_product(&b, m)? / norm;
            Ok((term, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::{ALGEBRA_TOL, PAULI_TOL};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_z_is_half_diag() {
        let z = pauli(Axis::Z);
        assert_eq!(z[(0, 0)], c(0.5, 0.0));
        assert_eq!(z[(1, 1)], c(-0.5, 0.0));
        assert_eq!(z[(0, 1)], Complex64::ZERO);
    }

    #[test]
    fn pauli_identity_is_unit() {
        let e = pauli(Axis::Identity);
        assert_eq!(e, ComplexMatrix::identity(2));
    }

    #[test]
    fn pauli_squares_are_quarter_identity() {
        for axis in Axis::XYZ {
            let p = pauli(axis);
            let sq = p.matmul(&p).unwrap();
            let expected = ComplexMatrix::identity(2).scale_real(0.25);
            assert!(sq.max_abs_diff(&expected).unwrap() <= PAULI_TOL);
        }
    }

    #[test]
    fn pauli_cyclic_commutators() {
        // [Ix,Iy] = i Iz and cyclic permutations.
        let cases = [
            (Axis::X, Axis::Y, Axis::Z),
            (Axis::Y, Axis::Z, Axis::X),
            (Axis::Z, Axis::X, Axis::Y),
        ];
        for (a, b, cc) in cases {
            let lhs = commutator(&pauli(a), &pauli(b)).unwrap();
            let rhs = pauli(cc).scale(c(0.0, 1.0));
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= PAULI_TOL);
        }
    }

    #[test]
    fn embed_z_first_of_two() {
        // I_{1z} for n=2 is (1/2) diag(1,1,-1,-1).
        let m = embed(Axis::Z, 1, 2).unwrap();
        let expected = ComplexMatrix::diag_real(&[0.5, 0.5, -0.5, -0.5]);
        assert!(m.max_abs_diff(&expected).unwrap() <= PAULI_TOL);
    }

    #[test]
    fn embed_z_second_of_two() {
        let m = embed(Axis::Z, 2, 2).unwrap();
        let expected = ComplexMatrix::diag_real(&[0.5, -0.5, 0.5, -0.5]);
        assert!(m.max_abs_diff(&expected).unwrap() <= PAULI_TOL);
    }

    #[test]
    fn embed_single_spin_is_pauli() {
        let m = embed(Axis::X, 1, 1).unwrap();
        assert!(m.max_abs_diff(&pauli(Axis::X)).unwrap() == 0.0);
    }

    #[test]
    fn embed_rejects_out_of_range() {
        assert!(matches!(
            embed(Axis::X, 4, 3),
            Err(Error::SpinOutOfRange { spin: 4, n: 3 })
        ));
        assert!(embed(Axis::X, 0, 3).is_err());
    }

    #[test]
    fn realize_two_spin_zz() {
        // 2 I1z I2z = (1/2) diag(1,-1,-1,1).
        let term = ProductOperatorTerm::new(2, vec![Axis::Z, Axis::Z], 1.0).unwrap();
        let m = realize(&term).unwrap();
        let expected = ComplexMatrix::diag_real(&[0.5, -0.5, -0.5, 0.5]);
        assert!(m.max_abs_diff(&expected).unwrap() <= PAULI_TOL);
    }

    #[test]
    fn realize_three_spin_zzz() {
        // 4 I1z I2z I3z: diagonal (1/2) (+,-,-,+,-,+,+,-).
        let term = ProductOperatorTerm::new(3, vec![Axis::Z, Axis::Z, Axis::Z], 1.0).unwrap();
        let m = realize(&term).unwrap();
        let signs = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        let expected = ComplexMatrix::diag_real(&signs.map(|s| 0.5 * s));
        assert!(m.max_abs_diff(&expected).unwrap() <= PAULI_TOL);
    }

    #[test]
    fn realize_single_factor_has_unit_prefactor() {
        let term = ProductOperatorTerm::new(2, vec![Axis::X, Axis::Identity], 1.0).unwrap();
        let m = realize(&term).unwrap();
        assert!(m.max_abs_diff(&embed(Axis::X, 1, 2).unwrap()).unwrap() == 0.0);
    }

    #[test]
    fn realize_matches_product_of_embeddings() {
        // Same matrix along an independent route: explicit product of
        // embedded factors times the 2^(q-1) prefactor.
        let term =
            ProductOperatorTerm::from_axes(3, &[(1, Axis::Z), (2, Axis::X), (3, Axis::Y)], -0.75)
                .unwrap();
        let via_kron = realize(&term).unwrap();
        let product = embed(Axis::Z, 1, 3)
            .unwrap()
            .matmul(&embed(Axis::X, 2, 3).unwrap())
            .unwrap()
            .matmul(&embed(Axis::Y, 3, 3).unwrap())
            .unwrap()
            .scale_real(-0.75 * 4.0);
        assert!(via_kron.max_abs_diff(&product).unwrap() <= PAULI_TOL);
    }

    #[test]
    fn realize_rejects_identity_term() {
        let term = ProductOperatorTerm::new(2, vec![Axis::Identity; 2], 1.0).unwrap();
        assert!(matches!(realize(&term), Err(Error::IdentityTerm)));
    }

    #[test]
    fn basis_counts() {
        assert_eq!(basis(1).len(), 3);
        assert_eq!(basis(2).len(), 15);
        assert_eq!(basis(3).len(), 63);
        let by_weight = |n: usize, q: usize| basis(n).iter().filter(|t| t.weight() == q).count();
        assert_eq!(by_weight(2, 1), 6);
        assert_eq!(by_weight(2, 2), 9);
    }

    #[test]
    fn basis_single_spin_is_xyz() {
        let b = basis(1);
        assert_eq!(b[0].factors, vec![Axis::X]);
        assert_eq!(b[1].factors, vec![Axis::Y]);
        assert_eq!(b[2].factors, vec![Axis::Z]);
    }

    #[test]
    fn basis_orthogonality() {
        // tr(B_r B_s) = delta_rs 2^(n-2) for n = 2 and n = 3.
        for n in [2usize, 3] {
            let expected = f64::powi(2.0, n as i32 - 2);
            let mats: Vec<_> = basis(n).iter().map(|t| realize(t).unwrap()).collect();
            for (r, br) in mats.iter().enumerate() {
                for (s, bs) in mats.iter().enumerate() {
                    let ip = inner_product(br, bs).unwrap();
                    let target = if r == s { expected } else { 0.0 };
                    assert!(
                        (ip.re - target).abs() <= ALGEBRA_TOL && ip.im.abs() <= ALGEBRA_TOL,
                        "n={n} r={r} s={s} got {ip}"
                    );
                }
            }
        }
    }

    #[test]
    fn all_z_terms_traceless_hermitian() {
        for n in [2usize, 3] {
            for axis in [Axis::Z, Axis::X] {
                let term = ProductOperatorTerm::new(n, vec![axis; n], 1.0).unwrap();
                let m = realize(&term).unwrap();
                assert!(m.trace().norm() <= ALGEBRA_TOL);
                assert!(m.is_hermitian(ALGEBRA_TOL));
            }
        }
    }

    #[test]
    fn three_spin_commutator_example() {
        // [2 I1z I2x, 2 I2y I3z] = i 4 I1z I2z I3z.
        let a = realize(
            &ProductOperatorTerm::from_axes(3, &[(1, Axis::Z), (2, Axis::X)], 1.0).unwrap(),
        )
        .unwrap();
        let b = realize(
            &ProductOperatorTerm::from_axes(3, &[(2, Axis::Y), (3, Axis::Z)], 1.0).unwrap(),
        )
        .unwrap();
        let zzz =
            realize(&ProductOperatorTerm::new(3, vec![Axis::Z, Axis::Z, Axis::Z], 1.0).unwrap())
                .unwrap();
        let lhs = commutator(&a, &b).unwrap();
        let rhs = zzz.scale(c(0.0, 1.0));
        assert!(lhs.max_abs_diff(&rhs).unwrap() <= ALGEBRA_TOL);
    }

    #[test]
    fn self_commutator_is_zero() {
        let a = embed(Axis::Y, 2, 3).unwrap();
        let z = commutator(&a, &a).unwrap();
        assert!(z.max_abs() == 0.0);
    }

    #[test]
    fn commutator_rejects_dim_mismatch() {
        let a = ComplexMatrix::identity(4);
        let b = ComplexMatrix::identity(8);
        assert!(commutator(&a, &b).is_err());
        assert!(inner_product(&a, &b).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let term = parse_term("1.0 I1z I2z", 3).unwrap();
        assert_eq!(term.factors, vec![Axis::Z, Axis::Z, Axis::Identity]);
        assert_eq!(term.coefficient, 1.0);
        let text = term.to_string();
        let back = parse_term(&text, 3).unwrap();
        assert_eq!(back, term);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_term("", 3).is_err());
        assert!(parse_term("1.0 I4z", 3).is_err());
        assert!(parse_term("1.0 I1w", 3).is_err());
        assert!(parse_term("1.0 I1x I1y", 3).is_err());
        assert!(matches!(parse_term("2.5", 3), Err(Error::IdentityTerm)));
    }

    #[test]
    fn basis_expansion_recovers_coefficients() {
        // 3.0 * 2 I1z I2z - 0.5 * I2x expanded over basis(2).
        let t1 = ProductOperatorTerm::new(2, vec![Axis::Z, Axis::Z], 3.0).unwrap();
        let t2 = ProductOperatorTerm::from_axes(2, &[(2, Axis::X)], -0.5).unwrap();
        let m = OperatorSum::new(2, vec![t1.clone(), t2.clone()])
            .unwrap()
            .realize()
            .unwrap();
        for (term, coeff) in basis_coefficients(&m, 2).unwrap() {
            let expected = if term.factors == t1.factors {
                3.0
            } else if term.factors == t2.factors {
                -0.5
            } else {
                0.0
            };
            assert!(
                (coeff.re - expected).abs() <= ALGEBRA_TOL && coeff.im.abs() <= ALGEBRA_TOL,
                "term {term}: got {coeff}"
            );
        }
    }
}
