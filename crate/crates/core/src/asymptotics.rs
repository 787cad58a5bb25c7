//! Many-copy discrimination: i.i.d. powers, maximum-likelihood decoders
//! with exact worst-case error, pure-state Helstrom error, and the
//! minimum-defect programmer LP.

use num_bigint::BigInt;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::backend::{Backend, Channel, State};
use crate::error::{Error, Result};
use crate::finstoch::StochChannel;
use crate::lp::{ChannelProgram, Constraint};
use crate::quantum::{self, QState};
use crate::rational::{int, RatMatrix, Rational};
use crate::tasks::{decide_copiable, decide_distinguishable, GateFamily, StateFamily, Verdict};

/// Default cap on the dimension of an i.i.d. power.
pub const DEFAULT_IID_CAP: usize = 4096;

/// `{ρ_x^{⊗n}}` on `A^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IidFamily {
    pub base: StateFamily,
    pub n: usize,
    pub family: StateFamily,
}

pub fn iid_power(family: &StateFamily, n: usize, cap: usize) -> Result<IidFamily> {
    if n == 0 {
        return Err(Error::InvalidArgument("copy count must be at least 1".into()));
    }
    let dim = u32::try_from(n).ok().and_then(|e| family.dim().checked_pow(e)).filter(|&d| d <= cap);
    if dim.is_none() {
        return Err(Error::DimensionOverflow(format!("{}^{n} exceeds the cap {cap}", family.dim())));
    }
    let members = family
        .iter()
        .map(|(label, s)| Ok((label.to_string(), s.power(n)?)))
        .collect::<Result<Vec<_>>>()?;
    let power = StateFamily::new(family.system().power(n), members)?;
    Ok(IidFamily { base: family.clone(), n, family: power })
}

/// A maximum-likelihood decoder on `n` copies and its exact error.
#[derive(Debug, Clone, PartialEq)]
pub struct MlDiscriminator {
    pub n: usize,
    /// Misidentification probability of each label.
    pub per_label: Vec<Rational>,
    /// `max_x` of `per_label`.
    pub epsilon: Rational,
    /// The decoder `A^{⊗n} -> X`, when `dim^n` is within [`DEFAULT_IID_CAP`].
    pub flag: Option<StochChannel>,
    /// Grid Chernoff coefficient, for two-state families.
    pub chernoff: Option<f64>,
}

/// All count vectors of length `d` summing to `n`.
fn count_vectors(d: usize, n: usize) -> Vec<Vec<usize>> {
    fn go(d: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            go(d, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn multinomial(counts: &[usize]) -> BigInt {
    let n: usize = counts.iter().sum();
    counts.iter().fold(factorial(n), |acc, &k| acc / factorial(k))
}

/// Probability of one specific outcome sequence with the given counts.
fn sequence_prob(p: &[Rational], counts: &[usize]) -> Rational {
    p.iter().zip(counts).filter(|(_, &k)| k > 0).map(|(q, &k)| Pow::pow(q, k)).product()
}

/// `min_{s ∈ {0, 1/16, …, 1}} Σ p_i^s q_i^{1−s}` in floating point.
pub fn chernoff_grid(p: &[Rational], q: &[Rational]) -> f64 {
    let pf: Vec<f64> = p.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();
    let qf: Vec<f64> = q.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();
    (0..=16)
        .map(|k| {
            let s = f64::from(k) / 16.0;
            pf.iter().zip(&qf).map(|(a, b)| a.powf(s) * b.powf(1.0 - s)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn stoch_probs(family: &StateFamily) -> Result<Vec<Vec<Rational>>> {
    family
        .states()
        .iter()
        .map(|s| {
            s.as_stoch()
                .map(StochChannel::probs)
                .ok_or_else(|| Error::InvalidArgument("maximum-likelihood decoding is built for finstoch families".into()))
        })
        .collect()
}

/// Decodes `n` copies by maximum likelihood; ties go to the
/// lexicographically first label. All outcome sequences with the same
/// counts have equal likelihood under every `ρ_x`, so the decoder is a
/// function of the counts and the error is summed over count vectors.
pub fn build_ml_discriminator(family: &StateFamily, n: usize) -> Result<MlDiscriminator> {
    if n == 0 {
        return Err(Error::InvalidArgument("copy count must be at least 1".into()));
    }
    let probs = stoch_probs(family)?;
    if let Some((x, y)) = family.duplicate_pair(0.0)? {
        return Err(Error::DuplicateStates(family.labels()[x].clone(), family.labels()[y].clone()));
    }
    let d = family.dim();
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family.labels()[a].cmp(&family.labels()[b]));

    let types = count_vectors(d, n);
    let mut per_label = vec![Rational::zero(); family.len()];
    let mut decision_of = Vec::with_capacity(types.len());
    for counts in &types {
        let likelihood: Vec<Rational> = probs.iter().map(|p| sequence_prob(p, counts)).collect();
        let mut best = order[0];
        for &x in &order[1..] {
            if likelihood[x] > likelihood[best] {
                best = x;
            }
        }
        let mass = Rational::from_integer(multinomial(counts));
        for (x, l) in likelihood.iter().enumerate() {
            if x != best && !l.is_zero() {
                per_label[x] += &mass * l;
            }
        }
        decision_of.push(best);
    }
    let epsilon = per_label.iter().max().cloned().unwrap_or_else(Rational::zero);

    let flag = u32::try_from(n).ok().and_then(|e| d.checked_pow(e)).filter(|&size| size <= DEFAULT_IID_CAP).map(|size| {
        let index: std::collections::HashMap<&[usize], usize> =
            types.iter().enumerate().map(|(k, t)| (t.as_slice(), k)).collect();
        StochChannel::from_function(size, family.len(), |mut outcome| {
            let mut counts = vec![0; d];
            for _ in 0..n {
                counts[outcome % d] += 1;
                outcome /= d;
            }
            decision_of[index[counts.as_slice()]]
        })
    });
    let chernoff = (family.len() == 2).then(|| chernoff_grid(&probs[0], &probs[1]));
    Ok(MlDiscriminator { n, per_label, epsilon, flag, chernoff })
}

/// `(n, ε_n)` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub points: Vec<(usize, Rational)>,
    pub chernoff: Option<f64>,
}

impl ErrorCurve {
    /// `c^n` for each point, when a coefficient is known.
    pub fn bounds(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|&(n, _)| self.chernoff.map(|c| c.powi(n as i32))).collect()
    }

    /// `ε_n ≤ c^n` at every point, with a relative slack of `1e-12` for
    /// the floating-point coefficient.
    pub fn bound_holds(&self) -> bool {
        self.points.iter().zip(self.bounds()).all(|((_, eps), bound)| match bound {
            Some(b) => eps.to_f64().unwrap_or(f64::INFINITY) <= b * (1.0 + 1e-12),
            None => true,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,eps,bound\n");
        for ((n, eps), bound) in self.points.iter().zip(self.bounds()) {
            let b = bound.map(|b| format!("{b:.12e}")).unwrap_or_default();
            out.push_str(&format!("{n},{},{b}\n", crate::rational::format_rational(eps)));
        }
        out
    }
}

pub fn error_curve(family: &StateFamily, n_max: usize) -> Result<ErrorCurve> {
    let mut points = Vec::with_capacity(n_max);
    let mut chernoff = None;
    for n in 1..=n_max {
        let ml = build_ml_discriminator(family, n)?;
        chernoff = ml.chernoff;
        points.push((n, ml.epsilon));
    }
    Ok(ErrorCurve { points, chernoff })
}

fn pure_q(s: &State, name: &str) -> Result<QState> {
    let q = s.as_quantum().ok_or_else(|| Error::InvalidArgument("Helstrom error is defined for quantum states".into()))?;
    if !quantum::is_pure_state_q(q) {
        return Err(Error::NotPure(name.into()));
    }
    Ok(q.clone())
}

/// Equal-prior minimum error for `n` copies of two pure states:
/// `(1 − √(1 − c^{2n}))/2`, `c = |⟨α0|α1⟩|`.
pub fn helstrom_error(alpha0: &State, alpha1: &State, n: usize) -> Result<f64> {
    let (a0, a1) = (pure_q(alpha0, "alpha0")?, pure_q(alpha1, "alpha1")?);
    if a0.dim() != a1.dim() {
        return Err(Error::DimensionMismatch("states of different dimension".into()));
    }
    // tr(ρ0 ρ1) = c² for rank-one states
    let c2 = (a0.matrix() * a1.matrix()).trace().re.clamp(0.0, 1.0);
    let c2n = c2.powi(i32::try_from(n).unwrap_or(i32::MAX));
    Ok((1.0 - (1.0 - c2n).sqrt()) / 2.0)
}

/// `(1 − ½‖ρ0^{⊗n} − ρ1^{⊗n}‖₁)/2` by eigendecomposition.
pub fn helstrom_trace_norm(rho0: &QState, rho1: &QState, n: usize) -> f64 {
    let (mut a, mut b) = (rho0.clone(), rho1.clone());
    for _ in 1..n {
        a = a.tensor(rho0);
        b = b.tensor(rho1);
    }
    (1.0 - quantum::trace_distance(a.matrix(), b.matrix())) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DefectNorm {
    /// Largest entrywise deviation over all labels.
    #[default]
    LInf,
    /// Sum of entrywise absolute deviations over all labels.
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinDefect {
    pub programmer: StochChannel,
    pub defect: Rational,
}

/// The stochastic `W: A⊗B -> B'` minimising the deviation of
/// `(ρ_x ⊗ id_B) ; W` from `G_x`. The channel polytope is compact, so the
/// optimum is attained and returned exactly.
pub fn min_defect_programmer(family: &StateFamily, gates: &GateFamily, norm: DefectNorm) -> Result<MinDefect> {
    if family.backend() != Backend::FinStoch || gates.backend() != Backend::FinStoch {
        return Err(Error::MixedBackends);
    }
    if family.len() != gates.len() {
        return Err(Error::IndexMismatch(format!("{} states, {} gates", family.len(), gates.len())));
    }
    let (da, db, dout) = (family.dim(), gates.in_dim(), gates.out_dim());
    let mut program = ChannelProgram::new(da * db, dout);
    let t = program.add_aux_var();
    let mut total = Vec::new();
    for (rho, g) in family.states().iter().zip(gates.gates()) {
        let rho = rho.as_stoch().expect("finstoch").matrix();
        let fed = rho.kron(&RatMatrix::identity(db));
        let target = g.as_stoch().expect("finstoch").matrix();
        let exprs = program.image_exprs(&fed)?;
        for (r, row) in exprs.into_iter().enumerate() {
            for (j, expr) in row.into_iter().enumerate() {
                let goal = target[(r, j)].clone();
                let slack = match norm {
                    DefectNorm::LInf => t,
                    DefectNorm::L1 => {
                        let e = program.add_aux_var();
                        total.push((e, int(1)));
                        e
                    }
                };
                let mut upper = expr.clone();
                upper.push((slack, int(-1)));
                program.constrain(Constraint::le(upper, goal.clone()));
                let mut lower = expr;
                lower.push((slack, int(1)));
                program.constrain(Constraint::ge(lower, goal));
            }
        }
    }
    if norm == DefectNorm::L1 {
        let mut coeffs = total;
        coeffs.push((t, int(-1)));
        program.constrain(Constraint::eq(coeffs, Rational::zero()));
    }
    program.maximize(vec![(t, int(-1))]);
    let solution = program.solve()?;
    let (Some(w), Some(x)) = (solution.channel, solution.result.solution) else {
        return Err(Error::InvariantViolation("minimum-defect program has no optimum".into()));
    };
    Ok(MinDefect { programmer: w, defect: x[t].clone() })
}

/// What many-copy discrimination does and does not imply for a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub curve: Option<ErrorCurve>,
    /// Set when the family repeats a state; no decoder separates it.
    pub duplicate: Option<(String, String)>,
    /// `ε_{n_max} < ε_1`, or every `ε_n` is zero.
    pub vanishing: bool,
    pub bound_holds: bool,
    pub copiable: Verdict,
    pub distinguishable: Verdict,
}

impl ConsistencyReport {
    /// Exact distinguishability is concluded only together with a
    /// copying channel, never from vanishing error alone. Families with a
    /// repeated state are reported, not judged.
    pub fn consistent(&self) -> bool {
        self.duplicate.is_some() || (self.copiable == self.distinguishable && self.vanishing && self.bound_holds)
    }
}

pub fn asymptotic_consistency_check(family: &StateFamily, n_max: usize) -> Result<ConsistencyReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let copiable = decide_copiable(family, 0.0)?.verdict;
    let distinguishable = decide_distinguishable(family, 0.0)?.verdict;
    match error_curve(family, n_max) {
        Ok(curve) => {
            let first = &curve.points[0].1;
            let last = &curve.points[n_max - 1].1;
            let vanishing = curve.points.iter().all(|(_, e)| e.is_zero()) || last < first;
            let bound_holds = curve.bound_holds();
            Ok(ConsistencyReport { curve: Some(curve), duplicate: None, vanishing, bound_holds, copiable, distinguishable })
        }
        Err(Error::DuplicateStates(a, b)) => Ok(ConsistencyReport {
            curve: None,
            duplicate: Some((a, b)),
            vanishing: false,
            bound_holds: true,
            copiable,
            distinguishable,
        }),
        Err(e) => Err(e),
    }
}

/// The decoder as a backend-neutral channel.
pub fn discriminator_channel(ml: &MlDiscriminator) -> Option<Channel> {
    ml.flag.clone().map(Channel::Stoch)
}
