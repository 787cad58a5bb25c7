//! Operational tasks as decision procedures with certificates.
//!
//! Distinguishability is decided by the existence of a *flag channel*
//! `D: A -> X` with `D(ρ_x) = δ_x`. This is equivalent to the ability to
//! program every gate family: given `D`, the programmer `(D ⊗ id) ; ctrl`
//! applies `G_x` on label `x` for any finite family (see
//! [`build_programmer`]); conversely a programmer for the flag
//! preparations `I -> X` is itself a flag channel. Both directions are
//! constructed, not assumed, and every YES certificate is verified by
//! substitution before it is returned.

mod distinguish;
mod no_info;
mod side_info;

pub use distinguish::{
    build_programmer, decide_copiable, decide_distinguishable, pullback_distinguishability, pullback_programmer,
    verify_cloner, verify_flag, verify_programmer,
};
pub use no_info::{measure_and_resend, nodist_channel, verify_no_info, NoInfoReport};
pub use side_info::{
    check_component_constancy, check_side_info, component_side_info, confusability, find_faithful_side_info,
    iterate_side_info, verify_faithful_side_info, ConfusabilityGraph, ConstancyReport, SideInfoReport,
};

use std::fmt;

use crate::backend::{Backend, Channel, State};
use crate::error::{Error, Result};
use crate::types::SystemType;

/// Default absolute tolerance for quantum verdicts.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An indexed set of states of one system, in one backend.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFamily {
    system: SystemType,
    labels: Vec<String>,
    states: Vec<State>,
}

impl StateFamily {
    pub fn new(system: SystemType, members: Vec<(String, State)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidFamily("family is empty".into()));
        };
        let (backend, dim) = (first.backend(), first.dim());
        if members.iter().any(|(_, s)| s.backend() != backend) {
            return Err(Error::MixedBackends);
        }
        if let Some((label, s)) = members.iter().find(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidFamily(format!("`{label}` has dimension {} not {dim}", s.dim())));
        }
        for (i, (a, _)) in members.iter().enumerate() {
            if members[..i].iter().any(|(b, _)| a == b) {
                return Err(Error::InvalidFamily(format!("label `{a}` repeated")));
            }
        }
        let (labels, states) = members.into_iter().unzip();
        Ok(Self { system, labels, states })
    }

    /// Labels `x0, x1, …` on an anonymous system.
    pub fn from_states(states: Vec<State>) -> Result<Self> {
        let members = states.into_iter().enumerate().map(|(i, s)| (format!("x{i}"), s)).collect();
        Self::new(SystemType::atom("A"), members)
    }

    pub fn system(&self) -> &SystemType {
        &self.system
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn backend(&self) -> Backend {
        self.states[0].backend()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &State)> {
        self.labels.iter().map(String::as_str).zip(&self.states)
    }

    /// Sub-family on the given positions, in that order.
    pub fn subfamily(&self, positions: &[usize]) -> StateFamily {
        StateFamily {
            system: self.system.clone(),
            labels: positions.iter().map(|&i| self.labels[i].clone()).collect(),
            states: positions.iter().map(|&i| self.states[i].clone()).collect(),
        }
    }

    /// Position of the lexicographically smallest label; ambiguous and
    /// off-support outcomes are sent there.
    pub fn default_label(&self) -> usize {
        (0..self.labels.len()).min_by(|&a, &b| self.labels[a].cmp(&self.labels[b])).unwrap_or(0)
    }

    /// Flag states `δ_x` on a system with one level per label.
    pub fn flags(&self) -> Vec<State> {
        (0..self.len()).map(|k| State::flag(self.backend(), self.len(), k)).collect()
    }

    /// Positions of the first occurrence of each distinct state.
    pub fn distinct_positions(&self, tol: f64) -> Result<Vec<usize>> {
        let mut keep: Vec<usize> = Vec::with_capacity(self.len());
        for y in 0..self.len() {
            let mut seen = false;
            for &x in &keep {
                if self.states[x].approx_eq(&self.states[y], tol)? {
                    seen = true;
                    break;
                }
            }
            if !seen {
                keep.push(y);
            }
        }
        Ok(keep)
    }

    /// First pair of equal states (exact / within `tol`).
    pub fn duplicate_pair(&self, tol: f64) -> Result<Option<(usize, usize)>> {
        for y in 0..self.len() {
            for x in 0..y {
                if self.states[x].approx_eq(&self.states[y], tol)? {
                    return Ok(Some((x, y)));
                }
            }
        }
        Ok(None)
    }
}

/// An indexed set of causal gates `B -> B'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateFamily {
    dom: SystemType,
    cod: SystemType,
    labels: Vec<String>,
    gates: Vec<Channel>,
}

impl GateFamily {
    pub fn new(dom: SystemType, cod: SystemType, members: Vec<(String, Channel)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidFamily("gate family is empty".into()));
        };
        let (backend, din, dout) = (first.backend(), first.in_dim(), first.out_dim());
        if members.iter().any(|(_, g)| g.backend() != backend) {
            return Err(Error::MixedBackends);
        }
        if let Some((label, _)) = members.iter().find(|(_, g)| (g.in_dim(), g.out_dim()) != (din, dout)) {
            return Err(Error::InvalidFamily(format!("gate `{label}` has a different shape")));
        }
        if let Some((label, _)) = members.iter().find(|(_, g)| !g.is_causal()) {
            return Err(Error::NotCausal(format!("gate `{label}`")));
        }
        let (labels, gates) = members.into_iter().unzip();
        Ok(Self { dom, cod, labels, gates })
    }

    /// The preparations `I -> X'` of the given states, one per label.
    pub fn preparations(labels: &[String], states: &[State]) -> Result<Self> {
        let members = labels.iter().cloned().zip(states.iter().map(State::as_channel)).collect();
        Self::new(SystemType::unit(), SystemType::atom("E"), members)
    }

    pub fn dom(&self) -> &SystemType {
        &self.dom
    }

    pub fn cod(&self) -> &SystemType {
        &self.cod
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn gates(&self) -> &[Channel] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn backend(&self) -> Backend {
        self.gates[0].backend()
    }

    pub fn in_dim(&self) -> usize {
        self.gates[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.gates[0].out_dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::NotApplicable => "N/A",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// `D: A -> X` with `D(ρ_x) = δ_x`.
    Flag,
    /// `W: A⊗B -> B'` with `W(ρ_x ⊗ ·) = G_x`.
    Programmer,
    /// `C: A -> A⊗A` with `C(ρ_x) = ρ_x ⊗ ρ_x`.
    Cloner,
    /// `C: A -> A⊗E` with `C(ρ_x) = ρ_x ⊗ η_x`, all `η_x` distinct.
    SideInfo,
}

impl CertificateKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CertificateKind::Flag => "flag",
            CertificateKind::Programmer => "programmer",
            CertificateKind::Cloner => "cloner",
            CertificateKind::SideInfo => "sideinfo",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "flag" => CertificateKind::Flag,
            "programmer" => CertificateKind::Programmer,
            "cloner" => CertificateKind::Cloner,
            "sideinfo" => CertificateKind::SideInfo,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub channel: Channel,
}

/// Why a verdict is NO (or not applicable).
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    None,
    Duplicate { first: String, second: String },
    /// FinStoch: an outcome in the support of both states.
    SharedOutcome { first: String, second: String, outcome: usize },
    /// Quantum: the largest squared overlap `‖P_x P_y‖²` of support projectors.
    Overlap { first: String, second: String, value: f64 },
    /// The defining linear conditions have no stochastic solution (exact
    /// phase-1 optimum is positive).
    LpInfeasible,
    NotApplicable(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::None => f.write_str("-"),
            Diagnostic::Duplicate { first, second } => write!(f, "duplicate states {first} = {second}"),
            Diagnostic::SharedOutcome { first, second, outcome } => {
                write!(f, "{first} and {second} share outcome {outcome}")
            }
            Diagnostic::Overlap { first, second, value } => write!(f, "support overlap {first}/{second} = {value:.12}"),
            Diagnostic::LpInfeasible => f.write_str("defining conditions are infeasible (exact LP)"),
            Diagnostic::NotApplicable(why) => f.write_str(why),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    pub diagnostic: Diagnostic,
}

impl Decision {
    pub fn yes(kind: CertificateKind, channel: Channel) -> Self {
        Self { verdict: Verdict::Yes, certificate: Some(Certificate { kind, channel }), diagnostic: Diagnostic::None }
    }

    pub fn no(diagnostic: Diagnostic) -> Self {
        Self { verdict: Verdict::No, certificate: None, diagnostic }
    }

    pub fn not_applicable(why: impl Into<String>) -> Self {
        Self { verdict: Verdict::NotApplicable, certificate: None, diagnostic: Diagnostic::NotApplicable(why.into()) }
    }

    pub fn is_yes(&self) -> bool {
        self.verdict == Verdict::Yes
    }

    pub fn channel(&self) -> Option<&Channel> {
        self.certificate.as_ref().map(|c| &c.channel)
    }
}
