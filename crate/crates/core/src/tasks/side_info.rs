use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::backend::{Backend, Channel, State};
use crate::error::{Error, Result};
use crate::finstoch::{Keep, StochChannel};
use crate::lp::ChannelProgram;
use crate::quantum::{self, CMatrix, QChannel};
use crate::types::MAX_DIMENSION;

use super::{decide_distinguishable, CertificateKind, Decision, StateFamily};

/// What a candidate `C: A -> A⊗E` does to a family.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoReport {
    /// `η_x`, the `E` marginal of `C(ρ_x)`.
    pub etas: Vec<State>,
    /// First pair of labels with equal `η`, if any.
    pub repeated: Option<(String, String)>,
    /// At least two labels get different `η`.
    pub generated: bool,
}

impl SideInfoReport {
    /// Every label gets its own `η_x`.
    pub fn faithful(&self) -> bool {
        self.repeated.is_none()
    }
}

/// Checks that `C(ρ_x) = ρ_x ⊗ η_x` for every label and reports the `η_x`.
pub fn check_side_info(channel: &Channel, family: &StateFamily, tol: f64) -> Result<SideInfoReport> {
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
        return Err(Error::NotCausal("side-information channel".into()));
    }
    let de = channel.out_dim() / da;
    let mut etas = Vec::with_capacity(family.len());
    for (label, rho) in family.iter() {
        let joint = channel.apply(rho)?;
        let eta = joint.marginal((da, de), Keep::Second)?;
        if !joint.approx_eq(&rho.tensor(&eta)?, tol)? {
            return Err(Error::FactorizationFailure(label.to_string()));
        }
        etas.push(eta);
    }
    let mut repeated = None;
    'outer: for y in 0..etas.len() {
        for x in 0..y {
            if etas[x].approx_eq(&etas[y], tol)? {
                repeated = Some((family.labels()[x].clone(), family.labels()[y].clone()));
                break 'outer;
            }
        }
    }
    let mut generated = false;
    for eta in &etas[1..] {
        generated |= !eta.approx_eq(&etas[0], tol)?;
    }
    Ok(SideInfoReport { etas, repeated, generated })
}

/// Searches for faithful side information `C(ρ_x) = ρ_x ⊗ δ_x`.
///
/// FinStoch solves the defining conditions as an exact LP; quantum builds
/// `D ; prepare(ρ_x ⊗ δ_x)` from a flag channel. The verdict must agree
/// with [`decide_distinguishable`]. Families with fewer than two states
/// are not applicable.
pub fn find_faithful_side_info(family: &StateFamily, tol: f64) -> Result<Decision> {
    if family.len() < 2 {
        return Ok(Decision::not_applicable("faithful side information needs at least two states"));
    }
    let dist = decide_distinguishable(family, tol)?;
    let flags = family.flags();
    let decision = match family.backend() {
        Backend::FinStoch => {
            let (n, k) = (family.dim(), family.len());
            let mut program = ChannelProgram::new(n, n * k);
            for (rho, flag) in family.states().iter().zip(&flags) {
                let m = rho.as_stoch().ok_or(Error::MixedBackends)?.matrix();
                program.require_maps(m, &m.kron(flag.as_stoch().expect("same backend").matrix()))?;
            }
            match program.solve()?.channel {
                Some(c) => Decision::yes(CertificateKind::SideInfo, Channel::Stoch(c)),
                None => Decision::no(super::Diagnostic::LpInfeasible),
            }
        }
        Backend::Quantum => match dist.channel() {
            Some(flag) => {
                let tagged: Vec<State> =
                    family.states().iter().zip(&flags).map(|(r, f)| r.tensor(f)).collect::<Result<_>>()?;
                Decision::yes(CertificateKind::SideInfo, flag.then(&Channel::prepare_by_label(&tagged)?)?)
            }
            None => Decision::no(dist.diagnostic.clone()),
        },
    };
    if decision.verdict != dist.verdict {
        return Err(Error::InvariantViolation(format!(
            "faithful side information = {} but distinguishable = {}",
            decision.verdict, dist.verdict
        )));
    }
    if let Some(c) = decision.channel() {
        if !verify_faithful_side_info(c, family, tol)? {
            return Err(Error::InvariantViolation("side-information channel fails substitution".into()));
        }
    }
    Ok(decision)
}

/// The channel factorizes on the family and all `η_x` differ.
pub fn verify_faithful_side_info(channel: &Channel, family: &StateFamily, tol: f64) -> Result<bool> {
    match check_side_info(channel, family, tol) {
        Ok(report) => Ok(report.faithful()),
        Err(Error::FactorizationFailure(_) | Error::NotCausal(_) | Error::DimensionMismatch(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// `C_1 = C`, `C_{k+1} = C_k ; (C ⊗ id_{E^k})`, so that
/// `C_n(ρ_x) = ρ_x ⊗ η_x^{⊗n}`; the result is verified on the family.
pub fn iterate_side_info(channel: &Channel, family: &StateFamily, n: usize, tol: f64) -> Result<Channel> {
    if n == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    let report = check_side_info(channel, family, tol)?;
    let da = family.dim();
    let de = channel.out_dim() / da;
    u32::try_from(n)
        .ok()
        .and_then(|n| de.checked_pow(n))
        .and_then(|e| e.checked_mul(da))
        .filter(|&d| d <= MAX_DIMENSION)
        .ok_or_else(|| Error::DimensionOverflow(format!("{n} iterations of a {da}->{} channel", channel.out_dim())))?;
    let mut current = channel.clone();
    let mut e_power = de;
    for _ in 1..n {
        let step = channel.tensor(&Channel::identity(channel.backend(), e_power))?;
        current = current.then(&step)?;
        e_power *= de;
    }
    for ((label, rho), eta) in family.iter().zip(&report.etas) {
        let target = rho.tensor(&eta.power(n)?)?;
        if !current.apply(rho)?.approx_eq(&target, tol)? {
            return Err(Error::InvariantViolation(format!("iterated side information fails on `{label}`")));
        }
    }
    Ok(current)
}

/// Labels joined by an edge when the pair is not distinguishable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusabilityGraph {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Connected components as sorted position lists, ordered by first member.
    pub components: Vec<Vec<usize>>,
}

impl ConfusabilityGraph {
    /// Index of the component containing position `x`.
    pub fn component_of(&self, x: usize) -> usize {
        self.components.iter().position(|c| c.contains(&x)).expect("every vertex has a component")
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph confusability {\n");
        for (k, comp) in self.components.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{k} {{");
            for &x in comp {
                let _ = writeln!(out, "    \"{}\";", self.labels[x]);
            }
            out.push_str("  }\n");
        }
        for &(x, y) in &self.edges {
            let _ = writeln!(out, "  \"{}\" -- \"{}\";", self.labels[x], self.labels[y]);
        }
        out.push_str("}\n");
        out
    }
}

pub fn confusability(family: &StateFamily, tol: f64) -> Result<ConfusabilityGraph> {
    let n = family.len();
    let mut edges = Vec::new();
    let mut adjacent = vec![Vec::new(); n];
    for x in 0..n {
        for y in x + 1..n {
            if !decide_distinguishable(&family.subfamily(&[x, y]), tol)?.is_yes() {
                edges.push((x, y));
                adjacent[x].push(y);
                adjacent[y].push(x);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacent[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    Ok(ConfusabilityGraph { labels: family.labels().to_vec(), edges, components })
}

/// Whether side information is constant on confusability components.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyReport {
    /// A confusable pair with different `η`.
    pub violation: Option<(String, String)>,
}

impl ConstancyReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Compares `η` across every edge, which covers each component by
/// connectivity.
pub fn check_component_constancy(graph: &ConfusabilityGraph, etas: &[State], tol: f64) -> Result<ConstancyReport> {
    if etas.len() != graph.labels.len() {
        return Err(Error::IndexMismatch(format!("{} side states for {} labels", etas.len(), graph.labels.len())));
    }
    for &(x, y) in &graph.edges {
        if !etas[x].approx_eq(&etas[y], tol)? {
            return Ok(ConstancyReport { violation: Some((graph.labels[x].clone(), graph.labels[y].clone())) });
        }
    }
    Ok(ConstancyReport { violation: None })
}

/// A channel with `C(ρ_x) = ρ_x ⊗ η_k` for `x` in component `k`.
///
/// Distinct components have orthogonal supports, so the channel can read
/// off the component without disturbing the state: FinStoch tags each
/// outcome, quantum applies the pinching onto the component supports.
/// Outcomes outside every support are tagged with the component of the
/// default label.
pub fn component_side_info(family: &StateFamily, etas: &[State], tol: f64) -> Result<Channel> {
    let graph = confusability(family, tol)?;
    if etas.len() != graph.components.len() {
        return Err(Error::InvalidArgument(format!(
            "{} side states for {} components",
            etas.len(),
            graph.components.len()
        )));
    }
    if etas.iter().any(|e| e.backend() != family.backend()) {
        return Err(Error::MixedBackends);
    }
    let de = etas[0].dim();
    if etas.iter().any(|e| e.dim() != de) {
        return Err(Error::DimensionMismatch("side states differ in dimension".into()));
    }
    let da = family.dim();
    let fallback = graph.component_of(family.default_label());
    let channel = match family.backend() {
        Backend::FinStoch => {
            let mut tag = vec![fallback; da];
            for (k, comp) in graph.components.iter().enumerate() {
                for &x in comp {
                    for i in family.states()[x].as_stoch().expect("finstoch").support() {
                        tag[i] = k;
                    }
                }
            }
            let cols: Vec<StochChannel> = (0..da)
                .map(|i| StochChannel::point_mass(da, i).tensor(etas[tag[i]].as_stoch().expect("finstoch")))
                .collect();
            let m = crate::rational::RatMatrix::from_fn(da * de, da, |r, i| cols[i].matrix()[(r, 0)].clone());
            Channel::Stoch(StochChannel::new(m)?)
        }
        Backend::Quantum => {
            let supports: Vec<CMatrix> = graph
                .components
                .iter()
                .map(|comp| {
                    let sum: CMatrix = comp.iter().map(|&x| family.states()[x].as_quantum().expect("quantum").matrix()).sum();
                    quantum::support_projector(&sum)
                })
                .collect();
            let mut pins = quantum::orthonormalize_supports(&supports);
            let mut rest = CMatrix::identity(da, da);
            for p in &pins {
                rest -= p;
            }
            pins[fallback] += rest;
            let eta_ms: Vec<&CMatrix> = etas.iter().map(|e| e.as_quantum().expect("quantum").matrix()).collect();
            Channel::Quantum(QChannel::from_map_unchecked(da, da * de, |i, j| {
                let mut block = CMatrix::zeros(da * de, da * de);
                for (p, eta) in pins.iter().zip(&eta_ms) {
                    let pinched = p.column(i) * p.row(j);
                    block += quantum::kron(&pinched, eta);
                }
                block
            }))
        }
    };
    if !channel.is_causal() {
        return Err(Error::InvariantViolation("component side-information channel is not causal".into()));
    }
    let report = check_side_info(&channel, family, tol)?;
    for (x, eta) in report.etas.iter().enumerate() {
        if !eta.approx_eq(&etas[graph.component_of(x)], tol)? {
            return Err(Error::InvariantViolation("component side information lands on the wrong state".into()));
        }
    }
    Ok(channel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{c, QState};
    use crate::rational::rat;
    use crate::tasks::{Verdict, DEFAULT_TOL};

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn stoch(v: &[(i64, i64)]) -> State {
        State::Stoch(StochChannel::state(v.iter().map(|&(n, d)| rat(n, d)).collect()).unwrap())
    }

    fn ket(v: &[f64]) -> State {
        State::Quantum(QState::from_ket(&v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>()).unwrap())
    }

    fn fam(states: Vec<State>) -> StateFamily {
        StateFamily::from_states(states).unwrap()
    }

    #[test]
    fn copy_map_is_faithful_side_info_for_point_masses() {
        let s = fam(vec![stoch(&[(1, 1), (0, 1)]), stoch(&[(0, 1), (1, 1)])]);
        let copy = Channel::Stoch(StochChannel::copy(2));
        assert!(check_side_info(&copy, &s, DEFAULT_TOL).unwrap().faithful());
        let fixed = Channel::Stoch(StochChannel::identity(2).tensor(&StochChannel::point_mass(3, 1)));
        let r = check_side_info(&fixed, &s, DEFAULT_TOL).unwrap();
        assert!(!r.generated && !r.faithful());
        let d = find_faithful_side_info(&s, DEFAULT_TOL).unwrap();
        assert!(d.is_yes());
    }

    #[test]
    fn copy_map_correlates_a_mixed_state() {
        let s = fam(vec![stoch(&[(1, 2), (1, 2)])]);
        let copy = Channel::Stoch(StochChannel::copy(2));
        assert_eq!(check_side_info(&copy, &s, DEFAULT_TOL), Err(Error::FactorizationFailure("x0".into())));
    }

    #[test]
    fn singleton_is_not_applicable() {
        let s = fam(vec![stoch(&[(1, 2), (1, 2)])]);
        assert_eq!(find_faithful_side_info(&s, DEFAULT_TOL).unwrap().verdict, Verdict::NotApplicable);
    }

    #[test]
    fn no_side_info_for_overlapping_states() {
        let s = fam(vec![stoch(&[(1, 2), (1, 2), (0, 1)]), stoch(&[(0, 1), (1, 2), (1, 2)])]);
        assert_eq!(find_faithful_side_info(&s, DEFAULT_TOL).unwrap().verdict, Verdict::No);
        let q = fam(vec![ket(&[1.0, 0.0]), ket(&[S, S])]);
        assert_eq!(find_faithful_side_info(&q, DEFAULT_TOL).unwrap().verdict, Verdict::No);
    }

    #[test]
    fn quantum_side_info_iterates() {
        let q = fam(vec![ket(&[S, S]), ket(&[S, -S])]);
        let d = find_faithful_side_info(&q, DEFAULT_TOL).unwrap();
        let c1 = d.channel().unwrap();
        let c3 = iterate_side_info(c1, &q, 3, 1e-9).unwrap();
        assert_eq!(c3.out_dim(), 16);
        assert!(c3.is_causal());
    }

    #[test]
    fn iteration_bounds() {
        let s = fam(vec![stoch(&[(1, 1), (0, 1)]), stoch(&[(0, 1), (1, 1)])]);
        let copy = Channel::Stoch(StochChannel::copy(2));
        assert!(matches!(iterate_side_info(&copy, &s, 0, DEFAULT_TOL), Err(Error::InvalidArgument(_))));
        assert!(matches!(iterate_side_info(&copy, &s, 40, DEFAULT_TOL), Err(Error::DimensionOverflow(_))));
        let c4 = iterate_side_info(&copy, &s, 4, DEFAULT_TOL).unwrap();
        assert_eq!(c4.as_stoch().unwrap(), &StochChannel::copy(2).then(&StochChannel::copy(2).tensor(&StochChannel::identity(2))).unwrap().then(&StochChannel::copy(2).tensor(&StochChannel::identity(4))).unwrap().then(&StochChannel::copy(2).tensor(&StochChannel::identity(8))).unwrap());
    }

    #[test]
    fn components_of_a_chain() {
        // x0 ~ x1 ~ x2 overlap in a chain; x3 is separate.
        let s = fam(vec![
            stoch(&[(1, 2), (1, 2), (0, 1), (0, 1), (0, 1)]),
            stoch(&[(0, 1), (1, 2), (1, 2), (0, 1), (0, 1)]),
            stoch(&[(0, 1), (0, 1), (1, 2), (1, 2), (0, 1)]),
            stoch(&[(0, 1), (0, 1), (0, 1), (0, 1), (1, 1)]),
        ]);
        let g = confusability(&s, DEFAULT_TOL).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(g.components, vec![vec![0, 1, 2], vec![3]]);
        assert!(g.to_dot().contains("\"x0\" -- \"x1\""));

        let etas = [stoch(&[(1, 3), (2, 3)]), stoch(&[(1, 1), (0, 1)])];
        let ch = component_side_info(&s, &etas, DEFAULT_TOL).unwrap();
        let report = check_side_info(&ch, &s, DEFAULT_TOL).unwrap();
        assert!(check_component_constancy(&g, &report.etas, DEFAULT_TOL).unwrap().holds());
        assert_eq!(report.repeated, Some(("x0".into(), "x1".into())));
        assert!(report.generated);

        let varying = vec![etas[0].clone(), etas[1].clone(), etas[0].clone(), etas[1].clone()];
        let r = check_component_constancy(&g, &varying, DEFAULT_TOL).unwrap();
        assert_eq!(r.violation, Some(("x0".into(), "x1".into())));
    }

    #[test]
    fn quantum_component_side_info() {
        let s = fam(vec![ket(&[1.0, 0.0, 0.0]), ket(&[S, S, 0.0]), ket(&[0.0, 0.0, 1.0])]);
        let g = confusability(&s, DEFAULT_TOL).unwrap();
        assert_eq!(g.components, vec![vec![0, 1], vec![2]]);
        let etas = [ket(&[1.0, 0.0]), ket(&[S, -S])];
        let ch = component_side_info(&s, &etas, 1e-9).unwrap();
        assert!(ch.is_causal());
        assert!(matches!(component_side_info(&s, &etas[..1], 1e-9), Err(Error::InvalidArgument(_))));
    }
}
