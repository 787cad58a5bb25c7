//! Finite stochastic semantics over exact rationals.
//!
//! A gate `A -> B` is a column-stochastic matrix with one column per input
//! symbol and one row per output symbol. States are the one-column case,
//! discard is the all-ones row, `;` is matrix product and `*` is the
//! Kronecker product with the left factor most significant.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::diagram::{self, Diagram, Semantics};
use crate::error::{Error, Result};
use crate::rational::{RatMatrix, Rational};
use crate::types::Signature;

/// A causal (column-stochastic) rational matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StochChannel(RatMatrix);

impl StochChannel {
    pub fn new(m: RatMatrix) -> Result<Self> {
        if !check_causal_stoch(&m) {
            return Err(Error::NotCausal(format!("{}x{} matrix is not column-stochastic", m.rows(), m.cols())));
        }
        Ok(Self(m))
    }

    /// A probability vector as a one-column channel.
    pub fn state(probs: Vec<Rational>) -> Result<Self> {
        Self::new(RatMatrix::column(probs))
    }

    pub fn point_mass(dim: usize, at: usize) -> Self {
        let mut m = RatMatrix::zeros(dim, 1);
        m[(at, 0)] = Rational::one();
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(RatMatrix::identity(n))
    }

    pub fn discard(n: usize) -> Self {
        Self(RatMatrix::from_fn(1, n, |_, _| Rational::one()))
    }

    /// Exchanges the two tensor factors: input `(a, b)` goes to output `(b, a)`.
    pub fn swap(left: usize, right: usize) -> Self {
        let n = left * right;
        let mut m = RatMatrix::zeros(n, n);
        for a in 0..left {
            for b in 0..right {
                m[(b * left + a, a * right + b)] = Rational::one();
            }
        }
        Self(m)
    }

    /// Deterministic channel sending input `i` to output `f(i)`.
    pub fn from_function(in_dim: usize, out_dim: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut m = RatMatrix::zeros(out_dim, in_dim);
        for i in 0..in_dim {
            m[(f(i), i)] = Rational::one();
        }
        Self(m)
    }

    /// The copy map `n -> n*n`.
    pub fn copy(n: usize) -> Self {
        Self::from_function(n, n * n, |i| i * n + i)
    }

    /// `input ↦ η` for every input.
    pub fn constant(in_dim: usize, eta: &StochChannel) -> Self {
        StochChannel::discard(in_dim).then(eta).expect("unit boundary")
    }

    pub fn in_dim(&self) -> usize {
        self.0.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.0.rows()
    }

    pub fn is_state(&self) -> bool {
        self.0.cols() == 1
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RatMatrix {
        self.0
    }

    /// Entries of a state, or of the first column.
    pub fn probs(&self) -> Vec<Rational> {
        self.0.col(0)
    }

    /// Outcomes with nonzero probability, for a state.
    pub fn support(&self) -> Vec<usize> {
        (0..self.out_dim()).filter(|&i| !self.0[(i, 0)].is_zero()).collect()
    }

    /// `self` then `next`.
    pub fn then(&self, next: &StochChannel) -> Result<StochChannel> {
        next.0
            .mul(&self.0)
            .map(StochChannel)
            .ok_or_else(|| Error::DimensionMismatch(format!("{} outputs into {} inputs", self.out_dim(), next.in_dim())))
    }

    pub fn tensor(&self, other: &StochChannel) -> StochChannel {
        StochChannel(self.0.kron(&other.0))
    }

    /// Applies the channel to a state.
    pub fn apply(&self, state: &StochChannel) -> Result<StochChannel> {
        state.then(self)
    }
}

/// `true` iff every entry is non-negative and every column sums to one.
pub fn check_causal_stoch(m: &RatMatrix) -> bool {
    m.is_nonnegative() && (0..m.cols()).all(|j| m.col_sum(j).is_one())
}

/// The FinStoch meaning of a diagram under a generator environment.
pub struct StochSemantics<'a> {
    pub env: &'a BTreeMap<String, StochChannel>,
}

impl Semantics for StochSemantics<'_> {
    type Map = StochChannel;

    fn generator(&self, name: &str, dom_dim: usize, cod_dim: usize) -> Result<StochChannel> {
        let g = self.env.get(name).ok_or_else(|| Error::UnboundGenerator(name.to_string()))?;
        if (g.in_dim(), g.out_dim()) != (dom_dim, cod_dim) {
            return Err(Error::DimensionMismatch(format!(
                "`{name}` is {}->{} but declared {dom_dim}->{cod_dim}",
                g.in_dim(),
                g.out_dim()
            )));
        }
        Ok(g.clone())
    }

    fn identity(&self, dim: usize) -> StochChannel {
        StochChannel::identity(dim)
    }

    fn discard(&self, dim: usize) -> StochChannel {
        StochChannel::discard(dim)
    }

    fn swap(&self, left: usize, right: usize) -> StochChannel {
        StochChannel::swap(left, right)
    }

    fn compose(&self, first: &StochChannel, second: &StochChannel) -> Result<StochChannel> {
        first.then(second)
    }

    fn tensor(&self, left: &StochChannel, right: &StochChannel) -> StochChannel {
        left.tensor(right)
    }
}

pub fn eval_stoch(d: &Diagram, sig: &Signature, env: &BTreeMap<String, StochChannel>) -> Result<StochChannel> {
    diagram::evaluate(d, sig, &StochSemantics { env })
}

/// Which tensor factor a marginal keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Marginal of a state on `A ⊗ B` with `dims = (dim A, dim B)`.
pub fn marginal_stoch(sigma: &StochChannel, dims: (usize, usize), keep: Keep) -> Result<StochChannel> {
    let (da, db) = dims;
    if !sigma.is_state() || da.checked_mul(db) != Some(sigma.out_dim()) {
        return Err(Error::NotAProductType(format!("state of dimension {} split as {da}x{db}", sigma.out_dim())));
    }
    let m = sigma.matrix();
    let out = match keep {
        Keep::First => (0..da).map(|a| (0..db).fold(Rational::zero(), |s, b| s + &m[(a * db + b, 0)])).collect(),
        Keep::Second => (0..db).map(|b| (0..da).fold(Rational::zero(), |s, a| s + &m[(a * db + b, 0)])).collect(),
    };
    Ok(StochChannel(RatMatrix::column(out)))
}

/// Marginal of a channel `A -> A'⊗B` on its first or second output factor.
pub fn marginal_channel_stoch(h: &StochChannel, dims: (usize, usize), keep: Keep) -> Result<StochChannel> {
    let (da, db) = dims;
    let discard = match keep {
        Keep::First => StochChannel::identity(da).tensor(&StochChannel::discard(db)),
        Keep::Second => StochChannel::discard(da).tensor(&StochChannel::identity(db)),
    };
    h.then(&discard).map_err(|_| Error::NotAProductType(format!("output dimension {} split as {da}x{db}", h.out_dim())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurityReport {
    pub pure: bool,
    /// For impure states: the diagonal extension `σ_ii = ρ_i` on `A ⊗ A`,
    /// whose marginal is `ρ` and which is not of the form `ρ ⊗ β`.
    pub witness: Option<StochChannel>,
}

/// A state is pure iff it is a point mass.
///
/// A joint distribution with a deterministic marginal always factorizes, so
/// point masses have only trivial extensions. Any other state has the
/// correlated diagonal extension returned as the witness.
pub fn is_pure_state_stoch(rho: &StochChannel) -> PurityReport {
    if rho.support().len() == 1 {
        return PurityReport { pure: true, witness: None };
    }
    let n = rho.out_dim();
    let p = rho.probs();
    let mut m = RatMatrix::zeros(n * n, 1);
    for (i, pi) in p.into_iter().enumerate() {
        m[(i * n + i, 0)] = pi;
    }
    PurityReport { pure: false, witness: Some(StochChannel(m)) }
}

/// Purity of a gate in the sense of "only trivial extensions".
///
/// With two or more inputs, `H(a) = G(a) ⊗ δ_a` extends `G` while its
/// second output depends on the input, so it is never of the form `G ⊗ β`.
/// Hence only gates out of a one-dimensional input can be pure, and those
/// are exactly the point-mass states. Deterministic maps in general are
/// reported by [`is_deterministic_stoch`].
pub fn is_pure_gate_stoch(m: &StochChannel) -> Result<bool> {
    if !check_causal_stoch(m.matrix()) {
        return Err(Error::NotCausal("gate".into()));
    }
    Ok(m.in_dim() == 1 && is_deterministic_stoch(m))
}

/// `true` iff every column is a point mass, i.e. the channel is a function.
pub fn is_deterministic_stoch(m: &StochChannel) -> bool {
    let mat = m.matrix();
    (0..mat.cols()).all(|j| (0..mat.rows()).filter(|&i| !mat[(i, j)].is_zero()).count() == 1)
}

/// Total variation distance `½ Σ |p_i − q_i|`, exact.
pub fn total_variation(p: &StochChannel, q: &StochChannel) -> Result<Rational> {
    let diff = p
        .matrix()
        .sub(q.matrix())
        .ok_or_else(|| Error::DimensionMismatch("total variation of differently sized states".into()))?;
    let sum = diff.data().iter().fold(Rational::zero(), |s, x| s + x.abs());
    Ok(sum / Rational::from_integer(2.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::par_compose;
    use crate::rational::{int, rat};
    use crate::types::SystemType;

    fn state(v: &[(i64, i64)]) -> StochChannel {
        StochChannel::state(v.iter().map(|&(n, d)| rat(n, d)).collect()).unwrap()
    }

    #[test]
    fn discard_of_state_is_one() {
        let rho = state(&[(1, 3), (2, 3)]);
        let s = rho.then(&StochChannel::discard(2)).unwrap();
        assert_eq!(s.matrix().data(), &[int(1)]);
    }

    #[test]
    fn product_of_stochastic_is_stochastic() {
        let a = StochChannel::new(RatMatrix::from_rows(vec![vec![rat(1, 2), rat(1, 3)], vec![rat(1, 2), rat(2, 3)]]).unwrap()).unwrap();
        let b = StochChannel::swap(2, 1);
        let c = a.then(&a).unwrap().then(&b).unwrap();
        assert!(check_causal_stoch(c.matrix()));
        assert_eq!(c.matrix()[(0, 0)], rat(1, 2) * rat(1, 2) + rat(1, 3) * rat(1, 2));
    }

    #[test]
    fn par_of_states_by_hand() {
        let sig = Signature::new().with("A", 2).with("B", 2);
        let mut env = BTreeMap::new();
        env.insert("p".to_string(), state(&[(1, 1), (0, 1)]));
        env.insert("q".to_string(), state(&[(1, 2), (1, 2)]));
        let d = par_compose(Diagram::state("p", SystemType::atom("A")), Diagram::state("q", SystemType::atom("B")));
        let out = eval_stoch(&d, &sig, &env).unwrap();
        assert_eq!(out.probs(), vec![rat(1, 2), rat(1, 2), int(0), int(0)]);
    }

    #[test]
    fn par_of_discards_is_discard_of_product() {
        let sig = Signature::new().with("A", 2).with("B", 3);
        let env = BTreeMap::new();
        let (a, b) = (SystemType::atom("A"), SystemType::atom("B"));
        let lhs = eval_stoch(&par_compose(Diagram::discard(a.clone()), Diagram::discard(b.clone())), &sig, &env).unwrap();
        let rhs = eval_stoch(&Diagram::discard(a.tensor(&b)), &sig, &env).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn unbound_and_mismatched_generators() {
        let sig = Signature::new().with("A", 2);
        let mut env = BTreeMap::new();
        let d = Diagram::state("rho", SystemType::atom("A"));
        assert_eq!(eval_stoch(&d, &sig, &env), Err(Error::UnboundGenerator("rho".into())));
        env.insert("rho".to_string(), state(&[(1, 3), (1, 3), (1, 3)]));
        assert!(matches!(eval_stoch(&d, &sig, &env), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn causality_checks() {
        assert!(check_causal_stoch(&RatMatrix::identity(3)));
        let short = RatMatrix::column(vec![rat(1, 2), rat(1, 3)]);
        assert!(!check_causal_stoch(&short));
        let mut neg = RatMatrix::zeros(4, 3);
        for j in 0..3 {
            neg[(0, j)] = rat(1, 2);
            neg[(1, j)] = rat(1, 2);
        }
        neg[(2, 1)] = rat(-1, 7);
        neg[(3, 1)] = rat(1, 7);
        assert!(!check_causal_stoch(&neg));
    }

    #[test]
    fn marginals() {
        let corr = state(&[(1, 2), (0, 1), (0, 1), (1, 2)]);
        assert_eq!(marginal_stoch(&corr, (2, 2), Keep::First).unwrap(), state(&[(1, 2), (1, 2)]));
        let p = state(&[(1, 3), (2, 3)]);
        let q = state(&[(1, 4), (1, 4), (1, 2)]);
        let pq = p.tensor(&q);
        assert_eq!(marginal_stoch(&pq, (2, 3), Keep::First).unwrap(), p);
        assert_eq!(marginal_stoch(&pq, (2, 3), Keep::Second).unwrap(), q);
        assert!(matches!(marginal_stoch(&pq, (2, 2), Keep::First), Err(Error::NotAProductType(_))));
    }

    #[test]
    fn state_purity() {
        assert!(is_pure_state_stoch(&state(&[(0, 1), (1, 1), (0, 1)])).pure);
        let r = is_pure_state_stoch(&state(&[(1, 2), (1, 2)]));
        assert!(!r.pure);
        assert_eq!(r.witness.unwrap().probs(), vec![rat(1, 2), int(0), int(0), rat(1, 2)]);
        let prod = state(&[(1, 1), (0, 1)]).tensor(&state(&[(0, 1), (1, 1)]));
        assert!(is_pure_state_stoch(&prod).pure);
    }

    #[test]
    fn gate_purity() {
        assert!(!is_pure_gate_stoch(&StochChannel::swap(2, 2)).unwrap());
        assert!(is_deterministic_stoch(&StochChannel::swap(2, 2)));
        assert!(!is_pure_gate_stoch(&StochChannel::discard(2)).unwrap());
        assert!(is_pure_gate_stoch(&StochChannel::discard(1)).unwrap());
        assert!(is_pure_gate_stoch(&StochChannel::point_mass(3, 1)).unwrap());
        let half = state(&[(1, 2), (1, 2)]);
        assert!(!is_pure_gate_stoch(&half).unwrap());
        assert!(!is_deterministic_stoch(&half));
    }

    #[test]
    fn total_variation_exact() {
        let p = state(&[(1, 1), (0, 1)]);
        let q = state(&[(1, 2), (1, 2)]);
        assert_eq!(total_variation(&p, &q).unwrap(), rat(1, 2));
    }
}
