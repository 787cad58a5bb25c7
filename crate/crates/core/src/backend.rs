//! Backend-neutral states and channels.
//!
//! The decision procedures accept either semantics. FinStoch values compare
//! exactly; quantum values compare up to a caller-supplied tolerance on
//! trace distance (states) or Choi entries (channels).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{ToPrimitive, Zero};

use crate::diagram::{self, Diagram, Semantics};
use crate::error::{Error, Result};
use crate::finstoch::{self, Keep, StochChannel};
use crate::quantum::{self, CMatrix, QChannel, QState};
use crate::rational::{RatMatrix, Rational};
use crate::types::Signature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    FinStoch,
    Quantum,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::FinStoch => "finstoch",
            Backend::Quantum => "quantum",
        })
    }
}

/// A distance between two values of one backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Distance {
    Exact(Rational),
    Approx(f64),
}

impl Distance {
    /// Exact distances are within tolerance only when zero.
    pub fn within(&self, tol: f64) -> bool {
        match self {
            Distance::Exact(r) => r.is_zero(),
            Distance::Approx(v) => *v <= tol,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Distance::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Distance::Approx(v) => *v,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(r) => f.write_str(&crate::rational::format_rational(r)),
            Distance::Approx(v) => write!(f, "{v:.12e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Stoch(StochChannel),
    Quantum(QState),
}

impl State {
    pub fn backend(&self) -> Backend {
        match self {
            State::Stoch(_) => Backend::FinStoch,
            State::Quantum(_) => Backend::Quantum,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            State::Stoch(s) => s.out_dim(),
            State::Quantum(q) => q.dim(),
        }
    }

    pub fn as_stoch(&self) -> Option<&StochChannel> {
        match self {
            State::Stoch(s) => Some(s),
            State::Quantum(_) => None,
        }
    }

    pub fn as_quantum(&self) -> Option<&QState> {
        match self {
            State::Quantum(q) => Some(q),
            State::Stoch(_) => None,
        }
    }

    /// Point mass / basis projector `|k⟩⟨k|`.
    pub fn flag(backend: Backend, dim: usize, k: usize) -> State {
        match backend {
            Backend::FinStoch => State::Stoch(StochChannel::point_mass(dim, k)),
            Backend::Quantum => State::Quantum(QState::basis(dim, k)),
        }
    }

    pub fn tensor(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Stoch(a), State::Stoch(b)) => Ok(State::Stoch(a.tensor(b))),
            (State::Quantum(a), State::Quantum(b)) => Ok(State::Quantum(a.tensor(b))),
            _ => Err(Error::MixedBackends),
        }
    }

    pub fn power(&self, n: usize) -> Result<State> {
        let mut out = State::flag(self.backend(), 1, 0);
        for _ in 0..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    pub fn marginal(&self, dims: (usize, usize), keep: Keep) -> Result<State> {
        match self {
            State::Stoch(s) => finstoch::marginal_stoch(s, dims, keep).map(State::Stoch),
            State::Quantum(q) => quantum::marginal_quantum(q, dims, keep).map(State::Quantum),
        }
    }

    /// Total variation (exact) or trace distance.
    pub fn distance(&self, other: &State) -> Result<Distance> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", self.dim(), other.dim())));
        }
        match (self, other) {
            (State::Stoch(a), State::Stoch(b)) => finstoch::total_variation(a, b).map(Distance::Exact),
            (State::Quantum(a), State::Quantum(b)) => Ok(Distance::Approx(quantum::trace_distance(a.matrix(), b.matrix()))),
            _ => Err(Error::MixedBackends),
        }
    }

    pub fn approx_eq(&self, other: &State, tol: f64) -> Result<bool> {
        Ok(self.distance(other)?.within(tol))
    }

    pub fn as_channel(&self) -> Channel {
        match self {
            State::Stoch(s) => Channel::Stoch(s.clone()),
            State::Quantum(q) => Channel::Quantum(q.as_channel()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Stoch(StochChannel),
    Quantum(QChannel),
}

impl Channel {
    pub fn backend(&self) -> Backend {
        match self {
            Channel::Stoch(_) => Backend::FinStoch,
            Channel::Quantum(_) => Backend::Quantum,
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Channel::Stoch(s) => s.in_dim(),
            Channel::Quantum(q) => q.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Channel::Stoch(s) => s.out_dim(),
            Channel::Quantum(q) => q.out_dim(),
        }
    }

    pub fn as_stoch(&self) -> Option<&StochChannel> {
        match self {
            Channel::Stoch(s) => Some(s),
            Channel::Quantum(_) => None,
        }
    }

    pub fn as_quantum(&self) -> Option<&QChannel> {
        match self {
            Channel::Quantum(q) => Some(q),
            Channel::Stoch(_) => None,
        }
    }

    pub fn identity(backend: Backend, d: usize) -> Channel {
        match backend {
            Backend::FinStoch => Channel::Stoch(StochChannel::identity(d)),
            Backend::Quantum => Channel::Quantum(QChannel::identity(d)),
        }
    }

    pub fn discard(backend: Backend, d: usize) -> Channel {
        match backend {
            Backend::FinStoch => Channel::Stoch(StochChannel::discard(d)),
            Backend::Quantum => Channel::Quantum(QChannel::discard(d)),
        }
    }

    /// Classical-to-state preparation `X -> A`: label `k` prepares
    /// `states[k]`. In the quantum backend off-diagonal inputs are
    /// dephased away.
    pub fn prepare_by_label(states: &[State]) -> Result<Channel> {
        let first = states.first().ok_or_else(|| Error::InvalidArgument("no states to prepare".into()))?;
        let d = first.dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("prepared states differ in dimension".into()));
        }
        match first.backend() {
            Backend::FinStoch => {
                let cols: Option<Vec<&StochChannel>> = states.iter().map(State::as_stoch).collect();
                let cols = cols.ok_or(Error::MixedBackends)?;
                let m = RatMatrix::from_fn(d, cols.len(), |i, j| cols[j].matrix()[(i, 0)].clone());
                Ok(Channel::Stoch(StochChannel::new(m)?))
            }
            Backend::Quantum => {
                let qs: Option<Vec<&QState>> = states.iter().map(State::as_quantum).collect();
                let qs = qs.ok_or(Error::MixedBackends)?;
                let ch = QChannel::from_map_unchecked(qs.len(), d, |i, j| {
                    if i == j {
                        qs[i].matrix().clone()
                    } else {
                        CMatrix::zeros(d, d)
                    }
                });
                Ok(Channel::Quantum(ch))
            }
        }
    }

    /// `self` then `next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        match (self, next) {
            (Channel::Stoch(a), Channel::Stoch(b)) => a.then(b).map(Channel::Stoch),
            (Channel::Quantum(a), Channel::Quantum(b)) => a.then(b).map(Channel::Quantum),
            _ => Err(Error::MixedBackends),
        }
    }

    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        match (self, other) {
            (Channel::Stoch(a), Channel::Stoch(b)) => Ok(Channel::Stoch(a.tensor(b))),
            (Channel::Quantum(a), Channel::Quantum(b)) => Ok(Channel::Quantum(a.tensor(b))),
            _ => Err(Error::MixedBackends),
        }
    }

    pub fn apply(&self, state: &State) -> Result<State> {
        match (self, state) {
            (Channel::Stoch(g), State::Stoch(s)) => g.apply(s).map(State::Stoch),
            (Channel::Quantum(g), State::Quantum(s)) => g.apply(s).map(State::Quantum),
            _ => Err(Error::MixedBackends),
        }
    }

    /// For channels out of the trivial system.
    pub fn as_state(&self) -> Option<State> {
        match self {
            Channel::Stoch(s) if s.in_dim() == 1 => Some(State::Stoch(s.clone())),
            Channel::Quantum(q) => q.as_state().map(State::Quantum),
            _ => None,
        }
    }

    /// Exact equality (FinStoch) or max Choi-entry distance within `tol`.
    pub fn approx_eq(&self, other: &Channel, tol: f64) -> Result<bool> {
        match (self, other) {
            (Channel::Stoch(a), Channel::Stoch(b)) => Ok(a == b),
            (Channel::Quantum(a), Channel::Quantum(b)) => Ok(a.distance(b) <= tol),
            _ => Err(Error::MixedBackends),
        }
    }

    /// Column-stochastic, or CPTP within the backend tolerances.
    pub fn is_causal(&self) -> bool {
        match self {
            Channel::Stoch(s) => finstoch::check_causal_stoch(s.matrix()),
            Channel::Quantum(q) => quantum::check_cptp(q.choi(), q.in_dim(), q.out_dim()),
        }
    }
}


/// The meaning of a diagram in one backend, generators looked up in `env`.
pub struct ChannelSemantics<'a> {
    pub backend: Backend,
    pub env: &'a BTreeMap<String, Channel>,
}

impl Semantics for ChannelSemantics<'_> {
    type Map = Channel;

    fn generator(&self, name: &str, dom_dim: usize, cod_dim: usize) -> Result<Channel> {
        let g = self.env.get(name).ok_or_else(|| Error::UnboundGenerator(name.to_string()))?;
        if g.backend() != self.backend {
            return Err(Error::MixedBackends);
        }
        if (g.in_dim(), g.out_dim()) != (dom_dim, cod_dim) {
            return Err(Error::DimensionMismatch(format!(
                "`{name}` is {}->{} but declared {dom_dim}->{cod_dim}",
                g.in_dim(),
                g.out_dim()
            )));
        }
        if !g.is_causal() {
            return Err(match g {
                Channel::Stoch(_) => Error::NotCausal(format!("generator `{name}`")),
                Channel::Quantum(_) => Error::CptpViolation(format!("generator `{name}`")),
            });
        }
        Ok(g.clone())
    }

    fn identity(&self, dim: usize) -> Channel {
        Channel::identity(self.backend, dim)
    }

    fn discard(&self, dim: usize) -> Channel {
        Channel::discard(self.backend, dim)
    }

    fn swap(&self, left: usize, right: usize) -> Channel {
        match self.backend {
            Backend::FinStoch => Channel::Stoch(StochChannel::swap(left, right)),
            Backend::Quantum => Channel::Quantum(QChannel::swap(left, right)),
        }
    }

    fn compose(&self, first: &Channel, second: &Channel) -> Result<Channel> {
        first.then(second)
    }

    fn tensor(&self, left: &Channel, right: &Channel) -> Channel {
        left.tensor(right).expect("one backend throughout")
    }
}

pub fn eval(d: &Diagram, sig: &Signature, backend: Backend, env: &BTreeMap<String, Channel>) -> Result<Channel> {
    diagram::evaluate(d, sig, &ChannelSemantics { backend, env })
}
