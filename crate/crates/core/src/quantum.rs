//! Finite-dimensional quantum semantics.
//!
//! Gates are CPTP maps stored as Choi matrices with the input factor first:
//! `J = Σ_ij E_ij ⊗ G(E_ij)`, so the `(i, j)` block of `J` (of size
//! `d_out × d_out`) is the image of the matrix unit `E_ij`. States are
//! density matrices, equivalently channels out of the one-dimensional
//! system, and discard is the trace.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::diagram::{self, Diagram, Semantics};
use crate::error::{Error, Result};
use crate::types::Signature;

pub type CMatrix = DMatrix<Complex64>;

/// Relative spectral threshold: eigenvalues below `SPECTRAL_REL · λ_max`
/// count as zero.
pub const SPECTRAL_REL: f64 = 1e-9;
/// Absolute floor under the relative threshold.
pub const SPECTRAL_ABS: f64 = 1e-12;
/// Hermiticity and trace tolerance for states.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a positive semidefinite matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Trace-preservation tolerance for channels.
pub const TP_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues (ascending) and matching eigenvector columns of the
/// Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, k| eig.eigenvectors[(i, order[k])]);
    (values, vectors)
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

fn spectral_cutoff(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    (SPECTRAL_REL * top).max(SPECTRAL_ABS)
}

/// Number of eigenvalues above the spectral threshold.
pub fn rank(m: &CMatrix) -> usize {
    let values = eigenvalues(m);
    let cut = spectral_cutoff(&values);
    values.iter().filter(|&&v| v > cut).count()
}

/// Orthogonal projector onto the span of eigenvectors above threshold.
pub fn support_projector(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    let cut = spectral_cutoff(&values);
    let n = m.nrows();
    let mut p = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v > cut {
            let col = vectors.column(k);
            p += &col * col.adjoint();
        }
    }
    p
}

/// Mutually orthogonal projectors close to the given, nearly orthogonal,
/// projectors: the range vectors of all of them are orthonormalised
/// symmetrically (`V (V†V)^{-1/2}`), then regrouped.
pub fn orthonormalize_supports(projectors: &[CMatrix]) -> Vec<CMatrix> {
    let Some(first) = projectors.first() else { return Vec::new() };
    let d = first.nrows();
    let mut cols = Vec::new();
    let mut owner = Vec::new();
    for (x, p) in projectors.iter().enumerate() {
        let (values, vectors) = eigh(p);
        for (k, &v) in values.iter().enumerate() {
            if v > 0.5 {
                cols.push(vectors.column(k).into_owned());
                owner.push(x);
            }
        }
    }
    let mut out = vec![CMatrix::zeros(d, d); projectors.len()];
    if cols.is_empty() {
        return out;
    }
    let v = CMatrix::from_columns(&cols);
    let (values, vectors) = eigh(&(v.adjoint() * &v));
    let inv_sqrt = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| c(1.0 / l.max(SPECTRAL_ABS).sqrt(), 0.0)),
    ));
    let w = &v * (&vectors * inv_sqrt * vectors.adjoint());
    for (k, &x) in owner.iter().enumerate() {
        let col = w.column(k);
        out[x] += &col * col.adjoint();
    }
    out
}

/// `‖m‖₁` for Hermitian `m`: sum of absolute eigenvalues.
pub fn trace_norm(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// `½ ‖a − b‖₁`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// Partial trace of an operator on `A ⊗ B`, `dims = (dim A, dim B)`.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: crate::finstoch::Keep) -> CMatrix {
    use crate::finstoch::Keep;
    let (da, db) = dims;
    match keep {
        Keep::First => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Keep::Second => CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()),
    }
}

/// A density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QState(CMatrix);

impl QState {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!("{}x{} density matrix", m.nrows(), m.ncols())));
        }
        if max_abs(&(&m - m.adjoint())) > STATE_TOL {
            return Err(Error::CptpViolation("density matrix is not Hermitian".into()));
        }
        if (m.trace() - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::CptpViolation(format!("trace {} is not 1", m.trace())));
        }
        if eigenvalues(&m).first().copied().unwrap_or(0.0) < -PSD_TOL {
            return Err(Error::CptpViolation("density matrix is not positive semidefinite".into()));
        }
        Ok(Self(m))
    }

    /// Wraps an already-valid matrix produced by internal arithmetic.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for the normalized ket.
    pub fn from_ket(ket: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(ket);
        let norm = v.norm();
        if ket.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::CptpViolation("ket has zero or non-finite norm".into()));
        }
        let v = v / c(norm, 0.0);
        Ok(Self(&v * v.adjoint()))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0, 0.0);
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn tensor(&self, other: &QState) -> QState {
        QState(kron(&self.0, &other.0))
    }

    /// The state as a preparation channel `I -> A`.
    pub fn as_channel(&self) -> QChannel {
        QChannel { din: 1, dout: self.dim(), choi: self.0.clone() }
    }
}

/// A channel stored as its Choi matrix (input factor first).
#[derive(Debug, Clone, PartialEq)]
pub struct QChannel {
    din: usize,
    dout: usize,
    choi: CMatrix,
}

impl QChannel {
    pub fn new(din: usize, dout: usize, choi: CMatrix) -> Result<Self> {
        if choi.nrows() != din * dout || choi.ncols() != din * dout {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix {}x{} for a {din}->{dout} channel",
                choi.nrows(),
                choi.ncols()
            )));
        }
        if !check_cptp(&choi, din, dout) {
            return Err(Error::CptpViolation(format!("{din}->{dout} Choi matrix is not CPTP")));
        }
        Ok(Self { din, dout, choi })
    }

    /// Builds the Choi matrix from the images `f(i, j) = G(E_ij)` without
    /// validating complete positivity.
    pub fn from_map_unchecked(din: usize, dout: usize, f: impl Fn(usize, usize) -> CMatrix) -> Self {
        let mut choi = CMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let block = f(i, j);
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&block);
            }
        }
        Self { din, dout, choi }
    }

    /// Channel with Kraus operators `K_k` (each `dout × din`).
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::CptpViolation("no Kraus operators".into()))?;
        let (dout, din) = first.shape();
        if kraus.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::DimensionMismatch("Kraus operators of different shapes".into()));
        }
        let ch = Self::from_map_unchecked(din, dout, |i, j| {
            kraus.iter().map(|k| k.column(i) * k.column(j).adjoint()).sum()
        });
        Self::new(din, dout, ch.choi)
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_map_unchecked(d, d, |i, j| {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = c(1.0, 0.0);
            m
        })
    }

    /// The trace `d -> 1`.
    pub fn discard(d: usize) -> Self {
        Self { din: d, dout: 1, choi: CMatrix::identity(d, d) }
    }

    pub fn swap(left: usize, right: usize) -> Self {
        let n = left * right;
        let mut u = CMatrix::zeros(n, n);
        for a in 0..left {
            for b in 0..right {
                u[(b * left + a, a * right + b)] = c(1.0, 0.0);
            }
        }
        Self::from_kraus(std::slice::from_ref(&u)).expect("permutation is unitary")
    }

    /// `σ ↦ tr(σ)·ρ`.
    pub fn constant(din: usize, state: &QState) -> Self {
        QChannel::discard(din).then(&state.as_channel()).expect("unit boundary")
    }

    pub fn in_dim(&self) -> usize {
        self.din
    }

    pub fn out_dim(&self) -> usize {
        self.dout
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// `G(E_ij)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.choi.view((i * self.dout, j * self.dout), (self.dout, self.dout)).into_owned()
    }

    /// `G(ρ) = Σ ρ_ij G(E_ij)`.
    pub fn apply_matrix(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.din || rho.ncols() != self.din {
            return Err(Error::DimensionMismatch(format!("{}x{} input to a {}-dim channel", rho.nrows(), rho.ncols(), self.din)));
        }
        let mut out = CMatrix::zeros(self.dout, self.dout);
        for i in 0..self.din {
            for j in 0..self.din {
                let w = rho[(i, j)];
                if w != c(0.0, 0.0) {
                    out += self.block(i, j) * w;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &QState) -> Result<QState> {
        self.apply_matrix(rho.matrix()).map(QState::from_matrix_unchecked)
    }

    /// For a channel out of the trivial system, the prepared state.
    pub fn as_state(&self) -> Option<QState> {
        (self.din == 1).then(|| QState::from_matrix_unchecked(self.choi.clone()))
    }

    /// `self` then `next`.
    pub fn then(&self, next: &QChannel) -> Result<QChannel> {
        if self.dout != next.din {
            return Err(Error::DimensionMismatch(format!("{} outputs into {} inputs", self.dout, next.din)));
        }
        let mut blocks = Vec::with_capacity(self.din * self.din);
        for i in 0..self.din {
            for j in 0..self.din {
                blocks.push(next.apply_matrix(&self.block(i, j))?);
            }
        }
        let din = self.din;
        Ok(Self::from_map_unchecked(din, next.dout, |i, j| blocks[i * din + j].clone()))
    }

    pub fn tensor(&self, other: &QChannel) -> QChannel {
        let d2 = other.din;
        Self::from_map_unchecked(self.din * d2, self.dout * other.dout, |i, j| {
            kron(&self.block(i / d2, j / d2), &other.block(i % d2, j % d2))
        })
    }

    /// Max entrywise distance between Choi matrices.
    pub fn distance(&self, other: &QChannel) -> f64 {
        if (self.din, self.dout) != (other.din, other.dout) {
            return f64::INFINITY;
        }
        max_abs(&(&self.choi - &other.choi))
    }
}

/// Complete positivity (Choi PSD within [`PSD_TOL`]) and trace
/// preservation (`Tr_out J = I` within [`TP_TOL`]).
pub fn check_cptp(choi: &CMatrix, din: usize, dout: usize) -> bool {
    if choi.nrows() != din * dout || choi.ncols() != din * dout {
        return false;
    }
    if max_abs(&(choi - choi.adjoint())) > TP_TOL {
        return false;
    }
    let values = eigenvalues(choi);
    let scale = values.last().copied().unwrap_or(0.0).abs().max(1.0);
    if values.first().copied().unwrap_or(0.0) < -PSD_TOL * scale {
        return false;
    }
    let reduced = partial_trace(choi, (din, dout), crate::finstoch::Keep::First);
    max_abs(&(reduced - CMatrix::identity(din, din))) <= TP_TOL
}

/// The quantum meaning of a diagram under a generator environment.
pub struct QuantumSemantics<'a> {
    pub env: &'a BTreeMap<String, QChannel>,
}

impl Semantics for QuantumSemantics<'_> {
    type Map = QChannel;

    fn generator(&self, name: &str, dom_dim: usize, cod_dim: usize) -> Result<QChannel> {
        let g = self.env.get(name).ok_or_else(|| Error::UnboundGenerator(name.to_string()))?;
        if (g.din, g.dout) != (dom_dim, cod_dim) {
            return Err(Error::DimensionMismatch(format!(
                "`{name}` is {}->{} but declared {dom_dim}->{cod_dim}",
                g.din, g.dout
            )));
        }
        if !check_cptp(&g.choi, g.din, g.dout) {
            return Err(Error::CptpViolation(format!("generator `{name}`")));
        }
        Ok(g.clone())
    }

    fn identity(&self, dim: usize) -> QChannel {
        QChannel::identity(dim)
    }

    fn discard(&self, dim: usize) -> QChannel {
        QChannel::discard(dim)
    }

    fn swap(&self, left: usize, right: usize) -> QChannel {
        QChannel::swap(left, right)
    }

    fn compose(&self, first: &QChannel, second: &QChannel) -> Result<QChannel> {
        first.then(second)
    }

    fn tensor(&self, left: &QChannel, right: &QChannel) -> QChannel {
        left.tensor(right)
    }
}

pub fn eval_quantum(d: &Diagram, sig: &Signature, env: &BTreeMap<String, QChannel>) -> Result<QChannel> {
    diagram::evaluate(d, sig, &QuantumSemantics { env })
}

pub fn marginal_quantum(rho: &QState, dims: (usize, usize), keep: crate::finstoch::Keep) -> Result<QState> {
    let (da, db) = dims;
    if da.checked_mul(db) != Some(rho.dim()) {
        return Err(Error::NotAProductType(format!("state of dimension {} split as {da}x{db}", rho.dim())));
    }
    Ok(QState(partial_trace(&rho.0, dims, keep)))
}

/// Pure iff rank one: a rank-one state has only product extensions, while a
/// mixed state has a correlated purification.
pub fn is_pure_state_q(rho: &QState) -> bool {
    rank(&rho.0) == 1
}

/// Pure iff the Choi matrix has rank one, i.e. the channel is an isometry.
pub fn is_pure_gate_q(g: &QChannel) -> bool {
    rank(&g.choi) == 1
}
