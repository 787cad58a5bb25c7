//! Seeded random instances: families, channels, pure pairs and well-typed
//! diagrams.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::backend::{Backend, Channel, State};
use crate::diagram::Diagram;
use crate::error::Result;
use crate::finstoch::StochChannel;
use crate::quantum::{c, CMatrix, QChannel, QState};
use crate::rational::{rat, RatMatrix, Rational};
use crate::tasks::StateFamily;
use crate::types::{Signature, SystemType};

/// A probability vector with entries `k / D` for a random `D ≤ max_denom`,
/// supported on a random subset of outcomes.
pub fn rational_state<R: Rng>(rng: &mut R, dim: usize, max_denom: i64) -> StochChannel {
    let denom = rng.random_range(1..=max_denom);
    let support_size = rng.random_range(1..=dim);
    let mut outcomes: Vec<usize> = (0..dim).collect();
    outcomes.sort_by_key(|_| rng.random::<u32>());
    let support = &outcomes[..support_size];
    let mut counts = vec![0i64; dim];
    for _ in 0..denom {
        counts[*support.choose(rng).expect("nonempty")] += 1;
    }
    StochChannel::state(counts.into_iter().map(|k| rat(k, denom)).collect()).expect("counts sum to the denominator")
}

/// Families of 2–`max_states` distinct states on dimension 2–`max_dim`.
pub fn stoch_family<R: Rng>(rng: &mut R, max_dim: usize, max_states: usize, max_denom: i64) -> StateFamily {
    let dim = rng.random_range(2..=max_dim);
    let count = rng.random_range(2..=max_states);
    let mut states: Vec<StochChannel> = Vec::with_capacity(count);
    while states.len() < count {
        let s = rational_state(rng, dim, max_denom);
        if !states.contains(&s) {
            states.push(s);
        }
    }
    StateFamily::from_states(states.into_iter().map(State::Stoch).collect()).expect("valid family")
}

/// A family with pairwise disjoint supports (needs `count ≤ dim`).
pub fn distinguishable_stoch_family<R: Rng>(rng: &mut R, dim: usize, count: usize, max_denom: i64) -> StateFamily {
    assert!(count >= 1 && count <= dim, "need at least one outcome per state");
    let mut owner: Vec<usize> = (0..dim).map(|i| if i < count { i } else { rng.random_range(0..count) }).collect();
    owner.sort_by_key(|_| rng.random::<u32>());
    let states = (0..count)
        .map(|x| {
            let mine: Vec<usize> = (0..dim).filter(|&i| owner[i] == x).collect();
            let local = rational_state(rng, mine.len(), max_denom).probs();
            let mut p = vec![Rational::from_integer(0.into()); dim];
            for (i, v) in mine.iter().zip(local) {
                p[*i] = v;
            }
            State::Stoch(StochChannel::state(p).expect("probability vector"))
        })
        .collect();
    StateFamily::from_states(states).expect("valid family")
}

pub fn stoch_channel<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize, max_denom: i64) -> StochChannel {
    let cols: Vec<StochChannel> = (0..in_dim).map(|_| rational_state(rng, out_dim, max_denom)).collect();
    StochChannel::new(RatMatrix::from_fn(out_dim, in_dim, |r, j| cols[j].matrix()[(r, 0)].clone())).expect("stochastic")
}

fn gaussianish<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

pub fn random_ket<R: Rng>(rng: &mut R, dim: usize) -> Vec<num_complex::Complex64> {
    loop {
        let v: Vec<_> = (0..dim).map(|_| c(gaussianish(rng), gaussianish(rng))).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `n × k` matrix with orthonormal columns (`k ≤ n`).
pub fn random_isometry<R: Rng>(rng: &mut R, n: usize, k: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(gaussianish(rng), gaussianish(rng)));
    m.qr().q().columns(0, k).into_owned()
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    random_isometry(rng, n, n)
}

/// A mixture of `rank` random pure states.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> QState {
    let weights: Vec<f64> = (0..rank).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(dim, dim);
    for w in weights {
        let v = nalgebra::DVector::from_vec(random_ket(rng, dim));
        m += &v * v.adjoint() * c(w / total, 0.0);
    }
    QState::new(m).expect("mixture of pure states")
}

/// A channel with `kraus_count` Kraus operators cut from a random isometry,
/// raised to `⌈din/dout⌉` when fewer cannot form one.
pub fn random_qchannel<R: Rng>(rng: &mut R, din: usize, dout: usize, kraus_count: usize) -> QChannel {
    let kraus_count = kraus_count.max(din.div_ceil(dout));
    let v = random_isometry(rng, dout * kraus_count, din);
    let kraus: Vec<CMatrix> = (0..kraus_count).map(|k| v.rows(k * dout, dout).into_owned()).collect();
    QChannel::from_kraus(&kraus).expect("isometry gives a channel")
}

/// Two pure states with `|⟨α0|α1⟩| = overlap`.
pub fn pure_pair<R: Rng>(rng: &mut R, dim: usize, overlap: f64) -> (QState, QState) {
    let basis = random_isometry(rng, dim, 2);
    let a = basis.column(0);
    let b = basis.column(1);
    let phase = c(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp();
    let second = a * c(overlap, 0.0) * phase + b * c((1.0 - overlap * overlap).max(0.0).sqrt(), 0.0);
    let k0: Vec<_> = a.iter().copied().collect();
    let k1: Vec<_> = second.iter().copied().collect();
    (QState::from_ket(&k0).expect("unit vector"), QState::from_ket(&k1).expect("unit vector"))
}

/// Declared generators of a random model.
#[derive(Debug, Clone)]
pub struct GeneratorPool {
    pub backend: Backend,
    pub sig: Signature,
    pub gens: Vec<(String, SystemType, SystemType)>,
    pub env: BTreeMap<String, Channel>,
}

/// Atoms `A`, `B`, `C` (dimensions 2, 3, 2 in finstoch, all 2 in quantum)
/// with random gates and states between them.
pub fn generator_pool<R: Rng>(rng: &mut R, backend: Backend) -> GeneratorPool {
    let sig = match backend {
        Backend::FinStoch => Signature::new().with("A", 2).with("B", 3).with("C", 2),
        Backend::Quantum => Signature::new().with("A", 2).with("B", 2).with("C", 2),
    };
    let a = SystemType::atom("A");
    let b = SystemType::atom("B");
    let cc = SystemType::atom("C");
    let shapes = vec![
        ("f", a.clone(), b.clone()),
        ("g", b.clone(), a.clone()),
        ("h", b.clone(), cc.clone()),
        ("k", a.tensor(&cc), b.clone()),
        ("m", cc.clone(), a.tensor(&a)),
        ("u", a.clone(), a.clone()),
        ("rho", SystemType::unit(), a.clone()),
        ("sigma", SystemType::unit(), b.clone()),
        ("tau", SystemType::unit(), cc.clone()),
    ];
    let mut env = BTreeMap::new();
    let mut gens = Vec::new();
    for (name, dom, cod) in shapes {
        let (din, dout) = (sig.dim(&dom).expect("declared"), sig.dim(&cod).expect("declared"));
        let ch = match backend {
            Backend::FinStoch => Channel::Stoch(stoch_channel(rng, din, dout, 6)),
            Backend::Quantum => {
                let kraus_count = rng.random_range(1..=2);
                Channel::Quantum(random_qchannel(rng, din, dout, kraus_count))
            }
        };
        env.insert(name.to_string(), ch);
        gens.push((name.to_string(), dom, cod));
    }
    GeneratorPool { backend, sig, gens, env }
}

impl GeneratorPool {
    /// A random diagram out of `dom` with at most `max_dim` on any wire
    /// bundle and nesting at most `depth`.
    pub fn diagram_from<R: Rng>(&self, rng: &mut R, dom: &SystemType, depth: usize, max_dim: usize) -> Diagram {
        let dim_ok = |t: &SystemType| self.sig.dim(t).is_ok_and(|d| d <= max_dim);
        let choice = if depth == 0 { rng.random_range(0..3) } else { rng.random_range(0..7) };
        match choice {
            0 => Diagram::identity(dom.clone()),
            1 => {
                let fitting: Vec<_> = self.gens.iter().filter(|(_, d, c)| d == dom && dim_ok(c)).collect();
                match fitting.choose(rng) {
                    Some((name, d, c)) => Diagram::generator(name.clone(), d.clone(), c.clone()),
                    None => Diagram::discard(dom.clone()),
                }
            }
            2 => {
                if dom.factors().len() >= 2 && rng.random_bool(0.5) {
                    let k = rng.random_range(1..dom.factors().len());
                    let (l, r) = dom.factors().split_at(k);
                    Diagram::swap(SystemType::from_factors(l.to_vec()), SystemType::from_factors(r.to_vec()))
                } else {
                    Diagram::discard(dom.clone())
                }
            }
            3 | 4 => {
                let first = self.diagram_from(rng, dom, depth - 1, max_dim);
                let second = self.diagram_from(rng, &first.cod(), depth - 1, max_dim);
                Diagram::seq_unchecked(first, second)
            }
            _ => {
                if dom.factors().len() >= 2 {
                    let k = rng.random_range(1..dom.factors().len());
                    let (l, r) = dom.factors().split_at(k);
                    let left = self.diagram_from(rng, &SystemType::from_factors(l.to_vec()), depth - 1, max_dim);
                    let right = self.diagram_from(rng, &SystemType::from_factors(r.to_vec()), depth - 1, max_dim);
                    let par = Diagram::Par(Box::new(left), Box::new(right));
                    if dim_ok(&par.cod()) {
                        return par;
                    }
                    Diagram::identity(dom.clone())
                } else {
                    // grow the input side with a state in parallel
                    let states: Vec<_> = self.gens.iter().filter(|(_, d, c)| d.is_unit() && dim_ok(&c.tensor(dom))).collect();
                    match states.choose(rng) {
                        Some((name, d, c)) => {
                            let prep = Diagram::generator(name.clone(), d.clone(), c.clone());
                            Diagram::Par(Box::new(Diagram::identity(dom.clone())), Box::new(prep))
                        }
                        None => Diagram::identity(dom.clone()),
                    }
                }
            }
        }
    }

    /// A random input type: one or two atoms.
    pub fn random_type<R: Rng>(&self, rng: &mut R) -> SystemType {
        let atoms = ["A", "B", "C"];
        let n = rng.random_range(1..=2);
        SystemType::from_factors((0..n).map(|_| atoms.choose(rng).expect("nonempty").to_string()))
    }

    pub fn eval(&self, d: &Diagram) -> Result<Channel> {
        crate::backend::eval(d, &self.sig, self.backend, &self.env)
    }
}
