//! Dense complex operators, superoperators and their exponentials.
//!
//! Superoperators act on row-major vectorized matrices: entry `m * d + n` of
//! `vec(A)` holds `A[m, n]`, so `vec(X rho Y) = (X ⊗ Yᵀ) vec(rho)` and the
//! trace is the inner product with `vec(I)`.

use std::ops::{Add, Mul, Neg, Sub};

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default relative tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A dense square complex matrix acting on a Hilbert space.
#[derive(Clone, Debug)]
pub struct Operator {
    mat: Mat<C64>,
}

impl Operator {
    pub fn from_mat(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            mat: Mat::from_fn(dim, dim, f),
        }
    }

    /// Builds an operator from row slices; all rows must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::EmptyInput("operator rows"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(d, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Projector onto a normalized pure state.
    pub fn pure_state(psi: &[C64]) -> Self {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj() / (norm * norm))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.mat[(i, j)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose().to_owned(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            mat: self.mat.conjugate().to_owned(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_fn(self.dim(), |i, j| self.mat[(i, j)] * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.norm_max()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        match self.mat.singular_values() {
            Ok(s) => s.into_iter().fold(0.0, f64::max),
            Err(_) => self.frobenius_norm(),
        }
    }

    /// `max |M - M†| / max |M|` (zero for the zero matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::NonHermitianInput { defect });
        }
        Ok(())
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    /// `X rho X†`
    pub fn sandwich(&self, rho: &Operator) -> Self {
        &(self * rho) * &self.adjoint()
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.dim() == other.dim() && (self - other).max_abs() <= tol
    }

    /// Embeds `op` on tensor factor `site` of a register with the given local dimensions.
    pub fn embed(op: &Operator, site: usize, dims: &[usize]) -> Result<Self> {
        if site >= dims.len() || dims[site] != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.get(site).copied().unwrap_or(0),
                found: op.dim(),
            });
        }
        let mut out = Operator::identity(1);
        for (k, &dk) in dims.iter().enumerate() {
            let factor = if k == site {
                op.clone()
            } else {
                Operator::identity(dk)
            };
            out = kron(&out, &factor);
        }
        Ok(out)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

/// Kronecker product with `(a ⊗ b)[i*db + k, j*db + l] = a[i, j] * b[k, l]`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator {
        mat: kron_mat(a.mat(), b.mat()),
    }
}

pub(crate) fn kron_mat(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::<C64>::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: Operator,
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a complex-valued scalar function.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Operator {
        let d = self.values.len();
        let v = self.vectors.mat();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = Mat::from_fn(d, d, |i, j| v[(i, j)] * fv[j]);
        Operator {
            mat: &scaled * v.adjoint(),
        }
    }

    /// Rotates an operator into the eigenbasis: `V† X V`.
    pub fn to_eigenbasis(&self, x: &Operator) -> Operator {
        let v = self.vectors.mat();
        Operator {
            mat: v.adjoint() * x.mat() * v,
        }
    }
}

pub fn hermitian_eigen(h: &Operator) -> Result<HermitianEigen> {
    hermitian_eigen_with_tol(h, HERMITIAN_TOL)
}

pub fn hermitian_eigen_with_tol(h: &Operator, tol: f64) -> Result<HermitianEigen> {
    h.ensure_hermitian(tol)?;
    // Symmetrize so that roundoff in the input cannot bias the solver.
    let sym = Mat::from_fn(h.dim(), h.dim(), |i, j| {
        (h.mat[(i, j)] + h.mat[(j, i)].conj()) * 0.5
    });
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let values = (0..h.dim()).map(|i| evd.S()[i].re).collect();
    Ok(HermitianEigen {
        values,
        vectors: Operator {
            mat: evd.U().to_owned(),
        },
    })
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    expm_hermitian_with_tol(h, t, HERMITIAN_TOL)
}

pub fn expm_hermitian_with_tol(h: &Operator, t: f64, tol: f64) -> Result<Operator> {
    let eig = hermitian_eigen_with_tol(h, tol)?;
    Ok(eig.apply(|x| C64::from_polar(1.0, -x * t)))
}

/// Spectral norm of a Hermitian operator from its eigenvalues.
pub fn hermitian_norm(h: &Operator) -> Result<f64> {
    let eig = hermitian_eigen(h)?;
    Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Row-major vectorization of a square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedOperator {
    dim: usize,
    data: Vec<C64>,
}

impl VectorizedOperator {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `⟨⟨I|v⟩⟩`, i.e. the trace of the underlying matrix.
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|m| self.data[m * self.dim + m]).sum()
    }
}

pub fn vectorize(m: &Operator) -> VectorizedOperator {
    let d = m.dim();
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            data.push(m.mat[(i, j)]);
        }
    }
    VectorizedOperator { dim: d, data }
}

/// Inverse of [`vectorize`]; fails unless the length is a perfect square.
pub fn devectorize(v: &[C64]) -> Result<Operator> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(Operator::from_fn(d, |i, j| v[i * d + j]))
}

/// A linear map on `d x d` matrices stored as a `d² x d²` matrix.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    dim: usize,
    mat: Mat<C64>,
}

impl SuperOperator {
    pub fn from_mat(dim: usize, mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: mat.nrows(),
            });
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: Mat::identity(dim * dim, dim * dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            mat: Mat::zeros(dim * dim, dim * dim),
        }
    }

    /// `rho -> U rho U†`
    pub fn unitary(u: &Operator) -> Self {
        Self {
            dim: u.dim(),
            mat: kron_mat(u.mat(), u.conj().mat()),
        }
    }

    /// `rho -> Σ K rho K†`
    pub fn from_kraus(ops: &[Operator]) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyInput("Kraus operators"))?;
        let d = first.dim();
        let mut mat = Mat::<C64>::zeros(d * d, d * d);
        for k in ops {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.dim(),
                });
            }
            mat += kron_mat(k.mat(), k.conj().mat());
        }
        Ok(Self { dim: d, mat })
    }

    /// Hilbert-space dimension `d` (the matrix is `d² x d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn scale(&self, c: C64) -> Self {
        let n = self.mat.nrows();
        Self {
            dim: self.dim,
            mat: Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * c),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.norm_max()
    }

    pub fn apply(&self, v: &VectorizedOperator) -> Result<VectorizedOperator> {
        if v.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim,
            });
        }
        let n = self.dim * self.dim;
        let mut out = vec![ZERO; n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (c, x) in v.data.iter().enumerate() {
                acc += self.mat[(r, c)] * x;
            }
            *o = acc;
        }
        Ok(VectorizedOperator {
            dim: self.dim,
            data: out,
        })
    }

    pub fn apply_op(&self, rho: &Operator) -> Result<Operator> {
        let v = self.apply(&vectorize(rho))?;
        devectorize(&v.data)
    }

    /// `⟨⟨I| S` as a row vector.
    pub fn trace_row(&self) -> Vec<C64> {
        let d = self.dim;
        let n = d * d;
        (0..n)
            .map(|c| (0..d).map(|m| self.mat[(m * d + m, c)]).sum())
            .collect()
    }

    /// `max |⟨⟨I| S - ⟨⟨I||`; zero for trace-preserving maps.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        self.trace_row()
            .iter()
            .enumerate()
            .map(|(c, z)| {
                let target = if c / d == c % d { ONE } else { ZERO };
                (z - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Choi matrix `J[(m*d + i), (n*d + j)] = ⟨m| S(|i⟩⟨j|) |n⟩`.
    pub fn choi(&self) -> Operator {
        let d = self.dim;
        Operator::from_fn(d * d, |r, c| {
            let (m, i) = (r / d, r % d);
            let (n, j) = (c / d, c % d);
            self.mat[(m * d + n, i * d + j)]
        })
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        let j = self.choi();
        let herm = (&j + &j.adjoint()).scale_real(0.5);
        let eig = hermitian_eigen_with_tol(&herm, f64::INFINITY)?;
        Ok(eig.values.first().copied().unwrap_or(0.0))
    }

    /// `exp(t L)` for a generator `L`.
    pub fn exp_generator(generator: &SuperOperator, t: f64) -> SuperOperator {
        let scaled = generator.scale(C64::new(t, 0.0));
        SuperOperator {
            dim: generator.dim,
            mat: expm_general(scaled.mat()),
        }
    }

    pub fn approx_eq(&self, other: &SuperOperator, tol: f64) -> bool {
        self.dim == other.dim && (self - other).max_abs() <= tol
    }
}

impl Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Superoperator of `rho -> X rho Y`, i.e. `X ⊗ Yᵀ`.
pub fn sandwich_superop(x: &Operator, y: &Operator) -> Result<SuperOperator> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(SuperOperator {
        dim: x.dim(),
        mat: kron_mat(x.mat(), y.mat().transpose()),
    })
}

/// Commutator superoperator `rho -> [X, rho]`, i.e. `X ⊗ I - I ⊗ Xᵀ`.
pub fn commutator_superop(x: &Operator) -> SuperOperator {
    let d = x.dim();
    let id = Mat::<C64>::identity(d, d);
    SuperOperator {
        dim: d,
        mat: kron_mat(x.mat(), id.as_ref()) - kron_mat(id.as_ref(), x.mat().transpose()),
    }
}

// Scaling-and-squaring with diagonal Padé approximants of degree 3, 5, 7, 9
// or 13 (Higham's 2005 parameters). The degree is the smallest one whose
// backward-error threshold covers the 1-norm; beyond theta_13 the matrix is
// scaled by 2^-s and the approximant squared s times.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm_one(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn lin_comb(terms: &[(f64, MatRef<'_, C64>)], n: usize) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(n, n);
    for &(c, m) in terms {
        if c == 0.0 {
            continue;
        }
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += m[(i, j)] * c;
            }
        }
    }
    out
}

/// Matrix exponential of a general square complex matrix.
pub fn expm_general(a: MatRef<'_, C64>) -> Mat<C64> {
    let n = a.nrows();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = norm_one(a);
    let id = Mat::<C64>::identity(n, n);

    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = a * a;
            let mut powers = vec![id.clone(), a2.clone()];
            for _ in 2..=degree / 2 {
                let next = powers.last().unwrap() * &a2;
                powers.push(next);
            }
            let even: Vec<(f64, MatRef<'_, C64>)> = (0..=degree / 2)
                .map(|k| (coeffs[2 * k], powers[k].as_ref()))
                .collect();
            let odd: Vec<(f64, MatRef<'_, C64>)> = (0..=degree / 2)
                .map(|k| (coeffs[2 * k + 1], powers[k].as_ref()))
                .collect();
            let v = lin_comb(&even, n);
            let u = a * lin_comb(&odd, n);
            return pade_solve(&u, &v);
        }
    }

    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let factor = 0.5_f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * factor);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &PADE13;
    let inner_u = lin_comb(
        &[(b[13], a6.as_ref()), (b[11], a4.as_ref()), (b[9], a2.as_ref())],
        n,
    );
    let u_outer = &a6 * &inner_u
        + lin_comb(
            &[
                (b[7], a6.as_ref()),
                (b[5], a4.as_ref()),
                (b[3], a2.as_ref()),
                (b[1], id.as_ref()),
            ],
            n,
        );
    let u = &a * &u_outer;
    let inner_v = lin_comb(
        &[(b[12], a6.as_ref()), (b[10], a4.as_ref()), (b[8], a2.as_ref())],
        n,
    );
    let v = &a6 * &inner_v
        + lin_comb(
            &[
                (b[6], a6.as_ref()),
                (b[4], a4.as_ref()),
                (b[2], a2.as_ref()),
                (b[0], id.as_ref()),
            ],
            n,
        );
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

// r = (V - U)^{-1} (V + U)
fn pade_solve(u: &Mat<C64>, v: &Mat<C64>) -> Mat<C64> {
    let p = v + u;
    let q = v - u;
    q.partial_piv_lu().solve(&p)
}

/// Inverse through partial-pivot LU.
pub(crate) fn inverse(m: MatRef<'_, C64>) -> Mat<C64> {
    m.partial_piv_lu().inverse()
}


impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}
