use crate::backend::{Backend, Channel, State};
use crate::error::{Error, Result};
use crate::finstoch::StochChannel;
use crate::lp::ChannelProgram;
use crate::quantum::{self, c, CMatrix, QChannel};

use super::{CertificateKind, Decision, Diagnostic, GateFamily, StateFamily};

/// Decides perfect distinguishability by constructing a flag channel.
///
/// FinStoch: supports must be pairwise disjoint; each outcome goes to the
/// label owning it. Quantum: supports must be pairwise orthogonal (squared
/// overlap at most `tol`); the flag channel measures the support
/// projectors. Unclaimed outcomes go to the lexicographically first label.
pub fn decide_distinguishable(family: &StateFamily, tol: f64) -> Result<Decision> {
    if let Some((x, y)) = family.duplicate_pair(tol)? {
        return Ok(Decision::no(Diagnostic::Duplicate {
            first: family.labels()[x].clone(),
            second: family.labels()[y].clone(),
        }));
    }
    let flag = match family.backend() {
        Backend::FinStoch => match stoch_flag(family)? {
            Ok(d) => d,
            Err(diag) => return Ok(Decision::no(diag)),
        },
        Backend::Quantum => match quantum_flag(family, tol)? {
            Ok(d) => d,
            Err(diag) => return Ok(Decision::no(diag)),
        },
    };
    if !verify_flag(&flag, family, tol)? {
        return Err(Error::InvariantViolation("constructed flag channel fails substitution".into()));
    }
    Ok(Decision::yes(CertificateKind::Flag, flag))
}

fn stoch_flag(family: &StateFamily) -> Result<Result<Channel, Diagnostic>> {
    let n = family.dim();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (x, state) in family.states().iter().enumerate() {
        let s = state.as_stoch().ok_or(Error::MixedBackends)?;
        for i in s.support() {
            if let Some(y) = owner[i] {
                return Ok(Err(Diagnostic::SharedOutcome {
                    first: family.labels()[y].clone(),
                    second: family.labels()[x].clone(),
                    outcome: i,
                }));
            }
            owner[i] = Some(x);
        }
    }
    let default = family.default_label();
    let d = StochChannel::from_function(n, family.len(), |i| owner[i].unwrap_or(default));
    Ok(Ok(Channel::Stoch(d)))
}

fn quantum_flag(family: &StateFamily, tol: f64) -> Result<Result<Channel, Diagnostic>> {
    let mut supports = Vec::with_capacity(family.len());
    for s in family.states() {
        supports.push(quantum::support_projector(s.as_quantum().ok_or(Error::MixedBackends)?.matrix()));
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for y in 0..supports.len() {
        for x in 0..y {
            let overlap = quantum::spectral_norm(&(&supports[x] * &supports[y])).powi(2);
            if worst.is_none_or(|(_, _, w)| overlap > w) {
                worst = Some((x, y, overlap));
            }
        }
    }
    if let Some((x, y, value)) = worst.filter(|w| w.2 > tol) {
        return Ok(Err(Diagnostic::Overlap {
            first: family.labels()[x].clone(),
            second: family.labels()[y].clone(),
            value,
        }));
    }
    let projectors = quantum::orthonormalize_supports(&supports);
    let flags: Vec<CMatrix> = family.flags().iter().map(|f| f.as_quantum().expect("quantum").matrix().clone()).collect();
    Ok(Ok(Channel::Quantum(measure_prepare(&projectors, family.default_label(), &flags))))
}

/// `σ ↦ Σ_x tr(P_x σ)·out_x + tr(R σ)·out_default` with `R = I − Σ P_x`.
/// The projectors must be mutually orthogonal.
pub(crate) fn measure_prepare(projectors: &[CMatrix], default: usize, outputs: &[CMatrix]) -> QChannel {
    let d = projectors[0].nrows();
    let dout = outputs[0].nrows();
    let mut rest = CMatrix::identity(d, d);
    for p in projectors {
        rest -= p;
    }
    QChannel::from_map_unchecked(d, dout, |i, j| {
        // tr(P E_ij) = P_ji
        let mut out = &outputs[default] * rest[(j, i)];
        for (p, o) in projectors.iter().zip(outputs) {
            if p[(j, i)] != c(0.0, 0.0) {
                out += o * p[(j, i)];
            }
        }
        out
    })
}

/// `D(ρ_x) = δ_x` for every label.
pub fn verify_flag(flag: &Channel, family: &StateFamily, tol: f64) -> Result<bool> {
    if flag.in_dim() != family.dim() || flag.out_dim() != family.len() {
        return Ok(false);
    }
    for (k, state) in family.states().iter().enumerate() {
        let target = State::flag(family.backend(), family.len(), k);
        if !flag.apply(state)?.approx_eq(&target, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds `W: A⊗B -> B'` with `(ρ_x ⊗ id_B) ; W = G_x` for every `x`:
/// first the flag channel on `A`, then the gate selected by the flag.
pub fn build_programmer(family: &StateFamily, gates: &GateFamily, tol: f64) -> Result<Channel> {
    if family.len() != gates.len() {
        return Err(Error::IndexMismatch(format!("{} states, {} gates", family.len(), gates.len())));
    }
    if family.backend() != gates.backend() {
        return Err(Error::MixedBackends);
    }
    let decision = decide_distinguishable(family, tol)?;
    let Some(flag) = decision.channel() else {
        return Err(Error::NotDistinguishable(decision.diagnostic.to_string()));
    };
    let w = flag.tensor(&Channel::identity(family.backend(), gates.in_dim()))?.then(&controlled(gates)?)?;
    if !verify_programmer(&w, family, gates, tol)? {
        return Err(Error::InvariantViolation("constructed programmer fails substitution".into()));
    }
    Ok(w)
}

/// `X⊗B -> B'` applying `G_x` when the control reads `x`.
fn controlled(gates: &GateFamily) -> Result<Channel> {
    let (n, din, dout) = (gates.len(), gates.in_dim(), gates.out_dim());
    match gates.backend() {
        Backend::FinStoch => {
            let mut cols = Vec::with_capacity(n);
            for g in gates.gates() {
                cols.push(g.as_stoch().ok_or(Error::MixedBackends)?.matrix().clone());
            }
            let m = crate::rational::RatMatrix::from_fn(dout, n * din, |r, col| cols[col / din][(r, col % din)].clone());
            Ok(Channel::Stoch(StochChannel::new(m)?))
        }
        Backend::Quantum => {
            let mut qs = Vec::with_capacity(n);
            for g in gates.gates() {
                qs.push(g.as_quantum().ok_or(Error::MixedBackends)?);
            }
            Ok(Channel::Quantum(QChannel::from_map_unchecked(n * din, dout, |i, j| {
                if i / din == j / din {
                    qs[i / din].block(i % din, j % din)
                } else {
                    CMatrix::zeros(dout, dout)
                }
            })))
        }
    }
}

/// `(ρ_x ⊗ id_B) ; W = G_x` for every `x`, matching positions.
pub fn verify_programmer(w: &Channel, family: &StateFamily, gates: &GateFamily, tol: f64) -> Result<bool> {
    if family.len() != gates.len() {
        return Err(Error::IndexMismatch(format!("{} states, {} gates", family.len(), gates.len())));
    }
    let id_b = Channel::identity(family.backend(), gates.in_dim());
    for (state, g) in family.states().iter().zip(gates.gates()) {
        let fed = state.as_channel().tensor(&id_b)?;
        let Ok(out) = fed.then(w) else { return Ok(false) };
        if !out.approx_eq(g, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Distinguishability of `family` inherited from a distinguishable image.
///
/// Requires `channel(ρ_x) = ρ'_x` for every position. A YES certificate is
/// the composed flag channel `channel ; D'`. NO reports why the image
/// family is not distinguishable; the pullback then proves nothing about
/// `family` itself.
pub fn pullback_distinguishability(
    family: &StateFamily,
    channel: &Channel,
    image: &StateFamily,
    tol: f64,
) -> Result<Decision> {
    if family.len() != image.len() {
        return Err(Error::IndexMismatch(format!("{} states, {} images", family.len(), image.len())));
    }
    if family.backend() != channel.backend() || image.backend() != channel.backend() {
        return Err(Error::MixedBackends);
    }
    if channel.in_dim() != family.dim() || channel.out_dim() != image.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel {}->{} between families of dimension {} and {}",
            channel.in_dim(),
            channel.out_dim(),
            family.dim(),
            image.dim()
        )));
    }
    for ((label, state), target) in family.iter().zip(image.states()) {
        if !channel.apply(state)?.approx_eq(target, tol)? {
            return Err(Error::MappingMismatch(label.to_string()));
        }
    }
    let image_decision = decide_distinguishable(image, tol)?;
    let Some(image_flag) = image_decision.channel() else {
        return Ok(Decision::no(image_decision.diagnostic));
    };
    let flag = channel.then(image_flag)?;
    if !verify_flag(&flag, family, tol)? {
        return Err(Error::InvariantViolation("pulled-back flag channel fails substitution".into()));
    }
    Ok(Decision::yes(CertificateKind::Flag, flag))
}

/// `(A ⊗ id_B) ; W'`: a programmer for the preimage family.
pub fn pullback_programmer(channel: &Channel, image_programmer: &Channel, b_dim: usize) -> Result<Channel> {
    channel.tensor(&Channel::identity(channel.backend(), b_dim))?.then(image_programmer)
}

/// Decides copiability: is there `C: A -> A⊗A` with `C(ρ_x) = ρ_x ⊗ ρ_x`?
///
/// FinStoch answers by exact LP over all stochastic `C`, independently of
/// the support test; quantum measures with the flag channel of the
/// distinct states and prepares `ρ_x ⊗ ρ_x`. Copying only concerns the
/// set of states, so repeated states are compared once: the verdict must
/// coincide with [`decide_distinguishable`] on the distinct states, and a
/// disagreement is reported as an invariant violation.
pub fn decide_copiable(family: &StateFamily, tol: f64) -> Result<Decision> {
    let distinct = family.subfamily(&family.distinct_positions(tol)?);
    let dist = decide_distinguishable(&distinct, tol)?;
    let decision = match family.backend() {
        Backend::FinStoch => {
            let n = family.dim();
            let mut program = ChannelProgram::new(n, n * n);
            for s in family.states() {
                let m = s.as_stoch().ok_or(Error::MixedBackends)?.matrix();
                program.require_maps(m, &m.kron(m))?;
            }
            let solution = program.solve()?;
            match solution.channel {
                Some(cloner) => Decision::yes(CertificateKind::Cloner, Channel::Stoch(cloner)),
                None => Decision::no(Diagnostic::LpInfeasible),
            }
        }
        Backend::Quantum => match dist.channel() {
            Some(flag) => {
                let copies: Vec<State> = distinct.states().iter().map(|s| s.tensor(s)).collect::<Result<_>>()?;
                Decision::yes(CertificateKind::Cloner, flag.then(&Channel::prepare_by_label(&copies)?)?)
            }
            None => Decision::no(dist.diagnostic.clone()),
        },
    };
    if decision.verdict != dist.verdict {
        return Err(Error::InvariantViolation(format!(
            "copiable = {} but distinguishable = {}",
            decision.verdict, dist.verdict
        )));
    }
    if let Some(cloner) = decision.channel() {
        if !verify_cloner(cloner, family, tol)? {
            return Err(Error::InvariantViolation("cloner fails substitution".into()));
        }
    }
    Ok(decision)
}

/// `C(ρ_x) = ρ_x ⊗ ρ_x` for every label.
pub fn verify_cloner(cloner: &Channel, family: &StateFamily, tol: f64) -> Result<bool> {
    for s in family.states() {
        let Ok(out) = cloner.apply(s) else { return Ok(false) };
        if out.dim() != s.dim() * s.dim() || !out.approx_eq(&s.tensor(s)?, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}
