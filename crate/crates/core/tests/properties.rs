use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distinguish_core::backend::{Backend, Channel, State};
use distinguish_core::diagram::{typecheck, Diagram};
use distinguish_core::finstoch::{is_pure_state_stoch, StochChannel};
use distinguish_core::gen;
use distinguish_core::lp::{solve, Constraint, LinearProgram, LpStatus};
use distinguish_core::model::{parse, print, Model};
use distinguish_core::quantum::{is_pure_state_q, QChannel, QState};
use distinguish_core::rational::{int, rat, Rational};
use distinguish_core::tasks::{decide_distinguishable, StateFamily};
use distinguish_core::types::SystemType;

const QTOL: f64 = 1e-10;

fn same(a: &Channel, b: &Channel) -> bool {
    a.approx_eq(b, QTOL).unwrap()
}

fn backend_of(quantum: bool) -> Backend {
    if quantum {
        Backend::Quantum
    } else {
        Backend::FinStoch
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn identity_law(seed in any::<u64>(), quantum in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = gen::generator_pool(&mut rng, backend_of(quantum));
        let dom = pool.random_type(&mut rng);
        let d = pool.diagram_from(&mut rng, &dom, 3, 16);
        prop_assume!(typecheck(&d).is_ok());
        let plain = pool.eval(&d).unwrap();
        let left = Diagram::seq_unchecked(Diagram::identity(d.dom()), d.clone());
        let right = Diagram::seq_unchecked(d.clone(), Diagram::identity(d.cod()));
        prop_assert!(same(&pool.eval(&left).unwrap(), &plain));
        prop_assert!(same(&pool.eval(&right).unwrap(), &plain));
    }

    #[test]
    fn discard_naturality(seed in any::<u64>(), quantum in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = gen::generator_pool(&mut rng, backend_of(quantum));
        let dom = pool.random_type(&mut rng);
        let d = pool.diagram_from(&mut rng, &dom, 3, 16);
        let lhs = pool.eval(&Diagram::seq_unchecked(d.clone(), Diagram::discard(d.cod()))).unwrap();
        let rhs = pool.eval(&Diagram::discard(d.dom())).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn interchange_law(seed in any::<u64>(), quantum in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = gen::generator_pool(&mut rng, backend_of(quantum));
        let (a1, a2) = (SystemType::atom("A"), SystemType::atom(if rng.random_bool(0.5) { "B" } else { "C" }));
        let f1 = pool.diagram_from(&mut rng, &a1, 2, 4);
        let g1 = pool.diagram_from(&mut rng, &f1.cod(), 2, 4);
        let f2 = pool.diagram_from(&mut rng, &a2, 2, 4);
        let g2 = pool.diagram_from(&mut rng, &f2.cod(), 2, 4);
        let par = |x: &Diagram, y: &Diagram| Diagram::Par(Box::new(x.clone()), Box::new(y.clone()));
        let lhs = Diagram::seq_unchecked(par(&f1, &f2), par(&g1, &g2));
        let rhs = par(&Diagram::seq_unchecked(f1, g1), &Diagram::seq_unchecked(f2, g2));
        prop_assert!(same(&pool.eval(&lhs).unwrap(), &pool.eval(&rhs).unwrap()));
    }

    #[test]
    fn evaluation_preserves_causality(seed in any::<u64>(), quantum in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = gen::generator_pool(&mut rng, backend_of(quantum));
        let dom = pool.random_type(&mut rng);
        let d = pool.diagram_from(&mut rng, &dom, 4, 16);
        prop_assert!(pool.eval(&d).unwrap().is_causal());
    }

    #[test]
    fn stoch_purity_multiplicative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = |rng: &mut ChaCha8Rng| {
            let dim = rng.random_range(1..=3);
            if rng.random_bool(0.5) {
                StochChannel::point_mass(dim, rng.random_range(0..dim))
            } else {
                gen::rational_state(rng, dim, 4)
            }
        };
        let (p, q) = (pick(&mut rng), pick(&mut rng));
        let joint = is_pure_state_stoch(&p.tensor(&q)).pure;
        prop_assert_eq!(joint, is_pure_state_stoch(&p).pure && is_pure_state_stoch(&q).pure);
    }

    #[test]
    fn quantum_purity_multiplicative(seed in any::<u64>(), r1 in 1usize..=2, r2 in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (gen::random_density(&mut rng, 2, r1), gen::random_density(&mut rng, 2, r2));
        prop_assert_eq!(is_pure_state_q(&a.tensor(&b)), is_pure_state_q(&a) && is_pure_state_q(&b));
    }

    #[test]
    fn purity_unitarily_invariant(seed in any::<u64>(), dim in 2usize..=4, rank in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = gen::random_density(&mut rng, dim, rank.min(dim));
        let u = QChannel::unitary(&gen::random_unitary(&mut rng, dim)).unwrap();
        let moved = u.apply(&rho).unwrap();
        prop_assert_eq!(is_pure_state_q(&moved), is_pure_state_q(&rho));
    }

    /// Post-processing cannot create distinguishability.
    #[test]
    fn distinguishability_monotone_under_channels(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = gen::stoch_family(&mut rng, 4, 3, 6);
        let out = rng.random_range(1..=4);
        let ch = gen::stoch_channel(&mut rng, fam.dim(), out, 4);
        let mapped: Vec<(String, State)> = fam
            .iter()
            .map(|(l, s)| (l.to_string(), State::Stoch(ch.apply(s.as_stoch().unwrap()).unwrap())))
            .collect();
        let Ok(image) = StateFamily::new(SystemType::atom("B"), mapped) else { return Ok(()) };
        if decide_distinguishable(&image, 0.0).unwrap().is_yes() {
            prop_assert!(decide_distinguishable(&fam, 0.0).unwrap().is_yes());
        }
    }

    #[test]
    fn subfamilies_of_distinguishable_are_distinguishable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(2..=4);
        let fam = gen::distinguishable_stoch_family(&mut rng, 5, count, 6);
        let keep: Vec<usize> = (0..fam.len()).filter(|_| rng.random_bool(0.6)).collect();
        prop_assume!(!keep.is_empty());
        prop_assert!(decide_distinguishable(&fam.subfamily(&keep), 0.0).unwrap().is_yes());
    }

    /// Weak and strong duality on `max c·x, Ax ≤ b, x ≥ 0` with positive
    /// data, checked against the separately solved dual.
    #[test]
    fn lp_duality(seed in any::<u64>(), m in 1usize..=4, n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = |lo: i64| rat(rng.random_range(lo..=6), rng.random_range(1..=4));
        let a: Vec<Vec<Rational>> = (0..m).map(|_| (0..n).map(|_| r(0)).collect()).collect();
        let b: Vec<Rational> = (0..m).map(|_| r(1)).collect();
        let c: Vec<Rational> = (0..n).map(|_| r(0)).collect();
        // every variable bounded by some row
        let a: Vec<Vec<Rational>> = a.into_iter().enumerate().map(|(i, mut row)| {
            if i == 0 { for v in &mut row { *v += int(1); } }
            row
        }).collect();

        let mut primal = LinearProgram::new(n);
        for (row, rhs) in a.iter().zip(&b) {
            primal.constrain(Constraint::le(row.iter().cloned().enumerate().collect(), rhs.clone()));
        }
        primal.maximize(c.iter().cloned().enumerate().collect());
        let p = solve(&primal).unwrap();
        prop_assert_eq!(p.status, LpStatus::Optimal);

        let mut dual = LinearProgram::new(m);
        for j in 0..n {
            dual.constrain(Constraint::ge((0..m).map(|i| (i, a[i][j].clone())).collect(), c[j].clone()));
        }
        dual.maximize(b.iter().map(|v| -v.clone()).enumerate().collect());
        let d = solve(&dual).unwrap();
        prop_assert_eq!(d.status, LpStatus::Optimal);

        let x = p.solution.unwrap();
        let y = d.solution.unwrap();
        let cx: Rational = c.iter().zip(&x).map(|(u, v)| u * v).sum();
        let by: Rational = b.iter().zip(&y).map(|(u, v)| u * v).sum();
        for j in 0..n {
            let col: Rational = (0..m).map(|i| &a[i][j] * &y[i]).sum();
            prop_assert!(col >= c[j]);
        }
        prop_assert!(y.iter().all(|v| *v >= int(0)));
        prop_assert_eq!(cx, by);
    }

    /// Highly degenerate programs (many tight, duplicated rows) terminate
    /// with a verified optimum.
    #[test]
    fn lp_degenerate_terminates(seed in any::<u64>(), n in 2usize..=5, dup in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lp = LinearProgram::new(n);
        for _ in 0..dup {
            for i in 0..n {
                for j in (i + 1)..n {
                    lp.constrain(Constraint::le(vec![(i, int(1)), (j, int(1))], int(1)));
                }
                lp.constrain(Constraint::le(vec![(i, int(1))], int(1)));
            }
            lp.constrain(Constraint::le((0..n).map(|i| (i, int(rng.random_range(0..=1)))).collect(), int(0)));
        }
        lp.maximize((0..n).map(|i| (i, int(1))).collect());
        let res = solve(&lp).unwrap();
        prop_assert_eq!(res.status, LpStatus::Optimal);
        let x = res.solution.unwrap();
        prop_assert!(lp.constraints.iter().all(|c| c.is_satisfied(&x)));
    }

    #[test]
    fn print_parse_idempotent(seed in any::<u64>(), quantum in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Model { backend: Some(backend_of(quantum)), ..Model::default() };
        m.ensure_system("A", 2).unwrap();
        m.ensure_system("B", 3).unwrap();
        let a = SystemType::atom("A");
        let b = SystemType::atom("B");
        for k in 0..rng.random_range(1..=4) {
            let (dom, cod) = if rng.random_bool(0.5) { (SystemType::unit(), a.tensor(&b)) } else { (a.clone(), b.clone()) };
            let (din, dout) = (if dom.is_unit() { 1 } else { 2 }, if dom.is_unit() { 6 } else { 3 });
            let ch = if quantum {
                Channel::Quantum(gen::random_qchannel(&mut rng, din, dout, 2))
            } else {
                Channel::Stoch(gen::stoch_channel(&mut rng, din, dout, 7))
            };
            m.add_channel(&format!("g{k}"), dom, cod, &ch).unwrap();
        }
        let first = print(&m);
        let parsed = parse(&first).unwrap();
        let second = print(&parsed);
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(print(&parse(&second).unwrap()), second);
        if !quantum {
            prop_assert_eq!(parsed, m);
        }
    }

    #[test]
    fn parser_never_panics(text in "[ -~\n]{0,200}") {
        let _ = parse(&text);
    }

    #[test]
    fn parser_survives_mutations(seed in any::<u64>()) {
        let base = "backend finstoch\nsystem A dim 2\nstate p : A = [1/2, 1/2]\ngate g : A -> A = [[1, 0], [0, 1]]\nfamily S = {p}\ncircuit c = p ; g ; discard(A)\n";
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bytes = base.as_bytes().to_vec();
        for _ in 0..rng.random_range(1..=4) {
            let at = rng.random_range(0..bytes.len());
            match rng.random_range(0..3) {
                0 => { bytes.remove(at); }
                1 => bytes.insert(at, b"[]{}();:*,=-/.ie9#\n "[rng.random_range(0..20)]),
                _ => bytes[at] = rng.random_range(32..127),
            }
        }
        let text = String::from_utf8(bytes).unwrap();
        if let Err(e) = parse(&text) {
            prop_assert!(e.loc.line >= 1 && e.loc.col >= 1);
        }
    }
}

#[test]
fn quantum_state_round_trip_through_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rho: QState = gen::random_density(&mut rng, 3, 2);
    let mut m = Model { backend: Some(Backend::Quantum), ..Model::default() };
    m.ensure_system("T", 3).unwrap();
    m.add_channel("rho", SystemType::unit(), SystemType::atom("T"), &Channel::Quantum(rho.as_channel())).unwrap();
    let back = parse(&print(&m)).unwrap().state("rho").unwrap();
    let diff = back.distance(&State::Quantum(rho)).unwrap();
    assert!(diff.within(1e-15));
}
