use nalgebra::DVector;
use rand::Rng;

use crate::backend::{Channel, Distance, State};
use crate::error::{Error, Result};
use crate::finstoch::{self, Keep};
use crate::quantum::{self, c, CMatrix, QChannel};

use super::{decide_distinguishable, StateFamily};

/// How a channel `G: A -> A⊗E` treats two pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct NoInfoReport {
    /// Distance between `α_k` and the `A` marginal of `G(α_k)`.
    pub disturbance: [Distance; 2],
    /// Distance between the two `E` marginals.
    pub information: Distance,
    pub distinguishable: bool,
    /// `G(α_k)` equals the product of its marginals.
    pub factorizes: [bool; 2],
    /// Both states undisturbed yet information extracted from a
    /// non-distinguishable pair. Never expected.
    pub violation: bool,
}

impl NoInfoReport {
    pub fn undisturbed(&self, tol: f64) -> bool {
        self.disturbance.iter().all(|d| d.within(tol))
    }
}

fn is_pure(s: &State) -> bool {
    match s {
        State::Stoch(p) => finstoch::is_pure_state_stoch(p).pure,
        State::Quantum(q) => quantum::is_pure_state_q(q),
    }
}

/// Measures disturbance and extracted information for a pair of pure
/// states under `G: A -> A⊗E`.
pub fn verify_no_info(channel: &Channel, alpha0: &State, alpha1: &State, tol: f64) -> Result<NoInfoReport> {
    for (name, a) in [("alpha0", alpha0), ("alpha1", alpha1)] {
        if !is_pure(a) {
            return Err(Error::NotPure(name.into()));
        }
    }
    let family = StateFamily::from_states(vec![alpha0.clone(), alpha1.clone()])?;
    if channel.backend() != family.backend() {
        return Err(Error::MixedBackends);
    }
    let da = family.dim();
    if channel.in_dim() != da || channel.out_dim() % da != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}->{} channel is not A -> A*E for dim A = {da}",
            channel.in_dim(),
            channel.out_dim()
        )));
    }
    if !channel.is_causal() {
        return Err(Error::NotCausal("channel under test".into()));
    }
    let de = channel.out_dim() / da;
    let mut disturbance = Vec::with_capacity(2);
    let mut env = Vec::with_capacity(2);
    let mut factorizes = [false; 2];
    for (k, alpha) in [alpha0, alpha1].into_iter().enumerate() {
        let joint = channel.apply(alpha)?;
        let kept = joint.marginal((da, de), Keep::First)?;
        let side = joint.marginal((da, de), Keep::Second)?;
        factorizes[k] = joint.approx_eq(&kept.tensor(&side)?, tol)?;
        disturbance.push(kept.distance(alpha)?);
        env.push(side);
    }
    let information = env[0].distance(&env[1])?;
    let distinguishable = decide_distinguishable(&family, tol)?.is_yes();
    let undisturbed = disturbance.iter().all(|d| d.within(tol));
    let violation = !distinguishable && undisturbed && !information.within(tol);
    let [d0, d1]: [Distance; 2] = disturbance.try_into().expect("two states");
    Ok(NoInfoReport { disturbance: [d0, d1], information, distinguishable, factorizes, violation })
}

/// A random channel `A -> A⊗E` leaving two pure quantum states untouched.
///
/// Kraus operators `√p_k (P + U_k Q) ⊗ |e_k⟩`, with `P` the projector onto
/// the span of the two states, `Q = I − P`, and `U_k` a random unitary on
/// the range of `Q`. The environment record is independent of the input
/// on the span.
pub fn nodist_channel<R: Rng>(alpha0: &State, alpha1: &State, dim_e: usize, rng: &mut R) -> Result<Channel> {
    let (Some(a0), Some(a1)) = (alpha0.as_quantum(), alpha1.as_quantum()) else {
        return Err(Error::InvalidArgument("no-disturbance channels are built for quantum states".into()));
    };
    for (name, a) in [("alpha0", a0), ("alpha1", a1)] {
        if !quantum::is_pure_state_q(a) {
            return Err(Error::NotPure(name.into()));
        }
    }
    if a0.dim() != a1.dim() {
        return Err(Error::DimensionMismatch("states of different dimension".into()));
    }
    if dim_e == 0 {
        return Err(Error::InvalidArgument("environment dimension must be positive".into()));
    }
    let d = a0.dim();
    let span = quantum::support_projector(&(a0.matrix() + a1.matrix()));
    let q = CMatrix::identity(d, d) - &span;
    let (values, vectors) = quantum::eigh(&q);
    let basis: Vec<_> = values.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(k, _)| vectors.column(k).into_owned()).collect();
    let complement = (!basis.is_empty()).then(|| CMatrix::from_columns(&basis));

    let weights: Vec<f64> = (0..dim_e).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut kraus = Vec::with_capacity(dim_e);
    for (k, w) in weights.iter().enumerate() {
        let mut op = span.clone();
        if let Some(b) = &complement {
            op += b * random_unitary(b.ncols(), rng) * b.adjoint();
        }
        let mut e = DVector::<num_complex::Complex64>::zeros(dim_e);
        e[k] = c(1.0, 0.0);
        let column = CMatrix::from_columns(&[e]);
        kraus.push(quantum::kron(&op, &column) * c((w / total).sqrt(), 0.0));
    }
    Ok(Channel::Quantum(QChannel::from_kraus(&kraus)?))
}

fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    m.qr().q()
}

/// Measures in the computational basis, keeps the outcome on `A` and
/// copies it to `E`: `σ ↦ Σ_k σ_kk |k⟩⟨k| ⊗ |k⟩⟨k|`.
pub fn measure_and_resend(d: usize) -> Channel {
    let n = d * d;
    Channel::Quantum(QChannel::from_map_unchecked(d, n, |i, j| {
        let mut m = CMatrix::zeros(n, n);
        if i == j {
            m[(i * d + i, i * d + i)] = c(1.0, 0.0);
        }
        m
    }))
}
