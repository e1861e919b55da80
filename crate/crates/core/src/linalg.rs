//! Small dense complex linear algebra on top of nalgebra.
//!
//! Matrices here are at most 8×8, so everything is `DMatrix` and nothing is tuned for size.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::scalar::Real;

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn imag<T: Real>(im: T) -> Complex<T> {
    Complex::new(T::zero(), im)
}

/// The four 2×2 Pauli matrices (with the identity as `I`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

pub fn pauli<T: Real>(which: Pauli) -> CMat<T> {
    let (o, l) = (T::zero(), T::one());
    let z = real(o);
    match which {
        Pauli::I => CMat::from_row_slice(2, 2, &[real(l), z, z, real(l)]),
        Pauli::X => CMat::from_row_slice(2, 2, &[z, real(l), real(l), z]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[z, imag(-l), imag(l), z]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[real(l), z, z, real(-l)]),
    }
}

/// `a ⊗ b` with `a` as the outer (slow) index.
pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

pub fn zeros<T: Real>(n: usize) -> CMat<T> {
    CMat::zeros(n, n)
}

pub fn diag_real<T: Real>(values: &[T]) -> CMat<T> {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| real(v))))
}

pub fn block_diag<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn scale<T: Real>(m: &CMat<T>, s: T) -> CMat<T> {
    m.map(|z| z * s)
}

pub fn commutator<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a * b + b * a
}

/// `-i [a, b]`, the combination that appears in every covariant derivative here.
pub fn minus_i_commutator<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    commutator(a, b) * imag(-T::one())
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `max |m - m†|`.
pub fn hermiticity_defect<T: Real>(m: &CMat<T>) -> T {
    max_abs(&(m - m.adjoint()))
}

/// `max |m† m - 1|`.
pub fn unitarity_defect<T: Real>(m: &CMat<T>) -> T {
    let n = m.ncols();
    max_abs(&(m.adjoint() * m - identity::<T>(n)))
}

pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * real(T::of(0.5))
}

/// `max |m_ij|` over off-diagonal entries.
pub fn off_diagonal_max<T: Real>(m: &CMat<T>) -> T {
    let mut out = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                out = out.max(m[(i, j)].modulus());
            }
        }
    }
    out
}

pub fn trace<T: Real>(m: &CMat<T>) -> Complex<T> {
    m.trace()
}

/// Euclidean norm of a complex column.
pub fn vec_norm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.modulus_squared()).sqrt()
}

/// `⟨a|b⟩ = a† b`.
pub fn inner<T: Real>(a: &CVec<T>, b: &CVec<T>) -> Complex<T> {
    a.iter().zip(b.iter()).fold(real(T::zero()), |acc, (x, y)| acc + x.conjugate() * y)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
pub fn eigh<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let herm = hermitian_part(m);
    let eig = herm.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh<T: Real>(m: &CMat<T>) -> Vec<T> {
    let mut values: Vec<T> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    values
}

/// Unitary factor `m (m† m)^{-1/2}` of the polar decomposition.
///
/// Returns `None` when `m` is numerically singular.
pub fn polar_unitary<T: Real>(m: &CMat<T>) -> Option<CMat<T>> {
    if m.nrows() == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        let r = z.modulus();
        if r <= T::default_epsilon() {
            return None;
        }
        return Some(CMat::from_element(1, 1, z / real(r)));
    }
    let gram = m.adjoint() * m;
    let (values, vectors) = eigh(&gram);
    let floor = T::default_epsilon() * T::of(1e3);
    if values.iter().any(|&v| v <= floor) {
        return None;
    }
    let inv_sqrt: Vec<T> = values.iter().map(|&v| T::one() / v.sqrt()).collect();
    let root = &vectors * diag_real(&inv_sqrt) * vectors.adjoint();
    Some(m * root)
}

/// Principal logarithm of a matrix close to the identity, by the Mercator series.
///
/// Returns `None` if `‖w - 1‖_max ≥ 1/2`, where the truncated series is not trustworthy.
pub fn log_near_identity<T: Real>(w: &CMat<T>) -> Option<CMat<T>> {
    let n = w.nrows();
    let x = w - identity::<T>(n);
    let size = max_abs(&x) * T::of(n as f64);
    if size >= T::of(0.5) {
        return None;
    }
    let mut term = x.clone();
    let mut out = x.clone();
    let tiny = T::default_epsilon() * T::of(1e-3);
    for k in 2..200 {
        term = &term * &x;
        let coeff = if k % 2 == 0 { -T::one() } else { T::one() } / T::of(k as f64);
        let step = scale(&term, coeff);
        let step_size = max_abs(&step);
        out += step;
        if step_size <= tiny * (T::one() + max_abs(&out)) {
            break;
        }
    }
    Some(out)
}
