//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distinguish_core::asymptotics::{error_curve, helstrom_error, helstrom_trace_norm, min_defect_programmer, DefectNorm};
use distinguish_core::backend::{Backend, Channel, State};
use distinguish_core::diagram::{typecheck, Diagram};
use distinguish_core::finstoch::StochChannel;
use distinguish_core::gen;
use distinguish_core::model::{parse, print};
use distinguish_core::quantum::QState;
use distinguish_core::rational::{int, rat, RatMatrix, Rational};
use distinguish_core::tasks::{
    build_programmer, check_component_constancy, check_side_info, component_side_info, confusability,
    decide_copiable, decide_distinguishable, find_faithful_side_info, measure_and_resend, nodist_channel,
    pullback_distinguishability, pullback_programmer, verify_no_info, GateFamily, StateFamily, Verdict,
};
use distinguish_core::types::SystemType;

const SEED: u64 = 0x5eed;
/// Quantum tolerances.
const NODIST_TOL: f64 = 1e-9;
const MEASURE_TOL: f64 = 1e-9;
const HELSTROM_TOL: f64 = 1e-10;
const LAW_TOL: f64 = 1e-12;
const CORPUS_SIZE: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn stoch(s: &State) -> &StochChannel {
    s.as_stoch().expect("finstoch state")
}

fn corpus() -> Vec<StateFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..CORPUS_SIZE).map(|_| gen::stoch_family(&mut rng, 5, 4, 8)).collect()
}

/// `C(ρ) = ρ ⊗ η` checked entrywise, with `η` read off as the `E`
/// marginal of the output.
fn side_info_oracle(c: &StochChannel, rho: &StochChannel) -> Option<StochChannel> {
    let da = rho.out_dim();
    let out = c.matrix().mul(rho.matrix())?;
    let de = out.rows() / da;
    let eta: Vec<Rational> = (0..de).map(|e| (0..da).map(|a| out[(a * de + e, 0)].clone()).sum()).collect();
    let expect = rho.matrix().kron(&RatMatrix::column(eta.clone()));
    (expect == out).then(|| StochChannel::state(eta).expect("marginal of a state"))
}

fn criterion_1(corpus: &[StateFamily]) -> Outcome {
    let start = Instant::now();
    let mut disagree = 0;
    let mut yes = 0;
    for fam in corpus {
        let d = decide_distinguishable(fam, 0.0).unwrap().verdict;
        let c = decide_copiable(fam, 0.0).unwrap().verdict;
        disagree += (d != c) as usize;
        yes += (d == Verdict::Yes) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        corpus.len() >= 200 && disagree == 0 && secs < 60.0,
        format!("{} families ({yes} distinguishable), {disagree} disagreements, {secs:.1}s (limit 60s)", corpus.len()),
    )
}

fn criterion_2(corpus: &[StateFamily]) -> Outcome {
    let (mut checked, mut mismatched, mut bad_certs) = (0, 0, 0);
    for fam in corpus {
        if fam.distinct_positions(0.0).unwrap().len() < 2 {
            continue;
        }
        checked += 1;
        let side = find_faithful_side_info(fam, 0.0).unwrap();
        let dist = decide_distinguishable(fam, 0.0).unwrap();
        mismatched += (side.verdict != dist.verdict) as usize;
        if let Some(ch) = side.channel() {
            let c = ch.as_stoch().unwrap();
            let etas: Option<Vec<StochChannel>> = fam.states().iter().map(|s| side_info_oracle(c, stoch(s))).collect();
            let faithful = etas.is_some_and(|e| (0..e.len()).all(|i| (0..i).all(|j| e[i] != e[j])));
            bad_certs += (!faithful) as usize;
        }
    }
    outcome(
        checked > 0 && mismatched == 0 && bad_certs == 0,
        format!("{checked} families, {mismatched} verdict mismatches, {bad_certs} certificates failing exact substitution"),
    )
}

/// A family whose confusability components are the given groups: each
/// group owns a block of outcomes and consecutive members share one.
fn component_family<R: Rng>(rng: &mut R, sizes: &[usize]) -> StateFamily {
    let dim: usize = sizes.iter().map(|s| s + 1).sum();
    let mut states = Vec::new();
    let mut offset = 0;
    for &size in sizes {
        for m in 0..size {
            // member m sits on outcomes m and m+1 of the block
            let mut p = vec![int(0); dim];
            let w = rat(rng.random_range(1..=7), 8);
            p[offset + m] = w.clone();
            p[offset + m + 1] = int(1) - w;
            states.push(State::Stoch(StochChannel::state(p).unwrap()));
        }
        offset += size + 1;
    }
    StateFamily::from_states(states).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let (mut fixtures, mut failures, mut wrong_components) = (0, 0, 0);
    let mut negative_ok = true;
    let mut negatives = 0;
    while fixtures < 60 {
        let k = rng.random_range(1..=3);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3)).collect();
        let fam = component_family(&mut rng, &sizes);
        let graph = confusability(&fam, 0.0).unwrap();
        let mut expected = Vec::new();
        let mut at = 0;
        for &s in &sizes {
            expected.push((at..at + s).collect::<Vec<_>>());
            at += s;
        }
        wrong_components += (graph.components != expected) as usize;
        let de = rng.random_range(1..=3);
        let etas: Vec<State> = (0..k).map(|_| State::Stoch(gen::rational_state(&mut rng, de, 6))).collect();
        let ch = component_side_info(&fam, &etas, 0.0).unwrap();
        let report = check_side_info(&ch, &fam, 0.0).unwrap();
        let holds = check_component_constancy(&graph, &report.etas, 0.0).unwrap().holds();
        failures += (!holds) as usize;
        fixtures += 1;

        // corrupt η on one member of a component with at least two members
        if let Some(comp) = graph.components.iter().find(|c| c.len() >= 2).filter(|_| de > 1) {
            let victim = comp[1];
            let eta = stoch(&report.etas[victim]).probs();
            let at = if eta[0] == int(1) { de - 1 } else { 0 };
            let mut corrupted = report.etas.clone();
            corrupted[victim] = State::Stoch(StochChannel::point_mass(de, at));
            negatives += 1;
            negative_ok &= !check_component_constancy(&graph, &corrupted, 0.0).unwrap().holds();
        }
    }
    outcome(
        failures == 0 && wrong_components == 0 && negatives > 0 && negative_ok,
        format!(
            "{fixtures} channels, {failures} constancy failures, {wrong_components} wrong components, \
             {negatives} corrupted fixtures all rejected: {negative_ok}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let (mut fixtures, mut bad) = (0, 0);
    while fixtures < 120 {
        let count = rng.random_range(2..=3);
        let d_out = rng.random_range(count..=5);
        let d_in = rng.random_range(count..=5);
        // outputs and inputs are split into `count` blocks; the channel
        // keeps block x inside block x
        let block = |rng: &mut ChaCha8Rng, d: usize| -> Vec<usize> {
            let mut owner: Vec<usize> = (0..d).map(|i| if i < count { i } else { rng.random_range(0..count) }).collect();
            owner.sort_by_key(|_| rng.random::<u32>());
            owner
        };
        let (own_in, own_out) = (block(&mut rng, d_in), block(&mut rng, d_out));
        let cols: Vec<Vec<Rational>> = (0..d_in)
            .map(|i| {
                let targets: Vec<usize> = (0..d_out).filter(|&o| own_out[o] == own_in[i]).collect();
                let local = gen::rational_state(&mut rng, targets.len(), 6).probs();
                let mut col = vec![int(0); d_out];
                for (o, v) in targets.iter().zip(local) {
                    col[*o] = v;
                }
                col
            })
            .collect();
        let a = StochChannel::new(RatMatrix::from_fn(d_out, d_in, |r, c| cols[c][r].clone())).unwrap();
        let pre: Vec<State> = (0..count)
            .map(|x| {
                let mine: Vec<usize> = (0..d_in).filter(|&i| own_in[i] == x).collect();
                let local = gen::rational_state(&mut rng, mine.len(), 6).probs();
                let mut p = vec![int(0); d_in];
                for (i, v) in mine.iter().zip(local) {
                    p[*i] = v;
                }
                State::Stoch(StochChannel::state(p).unwrap())
            })
            .collect();
        let images: Vec<State> = pre.iter().map(|s| State::Stoch(a.apply(stoch(s)).unwrap())).collect();
        let (Ok(family), Ok(image)) = (StateFamily::from_states(pre), StateFamily::from_states(images)) else {
            continue;
        };
        fixtures += 1;
        let channel = Channel::Stoch(a.clone());
        let decision = pullback_distinguishability(&family, &channel, &image, 0.0).unwrap();
        let Some(flag) = decision.channel() else {
            bad += 1;
            continue;
        };
        // flag equations: D(ρ_x) = δ_x
        let flag = flag.as_stoch().unwrap();
        let flags_ok = family
            .states()
            .iter()
            .enumerate()
            .all(|(x, s)| flag.apply(stoch(s)).unwrap() == StochChannel::point_mass(count, x));

        // programmer equations: W(ρ_x ⊗ δ_b) = G_x δ_b for every input b
        let db = rng.random_range(1..=3);
        let dc = rng.random_range(1..=3);
        let gates: Vec<(String, Channel)> =
            (0..count).map(|x| (format!("g{x}"), Channel::Stoch(gen::stoch_channel(&mut rng, db, dc, 4)))).collect();
        let gf = GateFamily::new(SystemType::atom("B"), SystemType::atom("C"), gates.clone()).unwrap();
        let w_image = build_programmer(&image, &gf, 0.0).unwrap();
        let w = pullback_programmer(&channel, &w_image, db).unwrap();
        let w = w.as_stoch().unwrap();
        let prog_ok = family.states().iter().zip(&gates).all(|(s, (_, g))| {
            (0..db).all(|b| {
                let input = stoch(s).tensor(&StochChannel::point_mass(db, b));
                w.apply(&input).unwrap() == g.as_stoch().unwrap().apply(&StochChannel::point_mass(db, b)).unwrap()
            })
        });
        bad += (!(flags_ok && prog_ok)) as usize;
    }
    outcome(bad == 0, format!("{fixtures} fixtures, {bad} failing exact flag or programmer substitution"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut worst = 0.0f64;
    let mut channels = 0;
    let mut undisturbed = true;
    for &c in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        for _ in 0..20 {
            let dim = rng.random_range(2..=3);
            let (a0, a1) = gen::pure_pair(&mut rng, dim, c);
            let (a0, a1) = (State::Quantum(a0), State::Quantum(a1));
            let dim_e = rng.random_range(1..=3);
            let ch = nodist_channel(&a0, &a1, dim_e, &mut rng).unwrap();
            let r = verify_no_info(&ch, &a0, &a1, NODIST_TOL).unwrap();
            worst = worst.max(r.information.to_f64());
            undisturbed &= r.undisturbed(NODIST_TOL);
            channels += 1;
        }
    }
    let zero = State::Quantum(QState::from_ket(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = State::Quantum(QState::from_ket(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap());
    let mr = verify_no_info(&measure_and_resend(2), &zero, &plus, MEASURE_TOL).unwrap();
    let dist = mr.disturbance[1].to_f64();
    let info = mr.information.to_f64();
    let mr_ok = (dist - 0.5).abs() <= MEASURE_TOL && (info - 0.5).abs() <= MEASURE_TOL;
    outcome(
        worst <= NODIST_TOL && undisturbed && mr_ok,
        format!(
            "{channels} channels, max E-marginal distance {worst:.2e} (tol {NODIST_TOL:e}); \
             measure-and-resend disturbance {dist:.12} information {info:.12} (tol {MEASURE_TOL:e})"
        ),
    )
}

/// Worst-label ML error for `n` copies of (3/4,1/4) vs (1/4,3/4) by
/// binomial enumeration; ties decide for the first state.
fn binomial_error(n: u32) -> Rational {
    let (mut err_p, mut err_q) = (int(0), int(0));
    let mut choose = int(1);
    for k in 0..=n {
        if k > 0 {
            choose = choose * int((n - k + 1) as i64) / int(k as i64);
        }
        let pk = &choose * rat(3i64.pow(k), 4i64.pow(k)) * rat(1, 4i64.pow(n - k));
        let qk = &choose * rat(1, 4i64.pow(k)) * rat(3i64.pow(n - k), 4i64.pow(n - k));
        if pk >= qk {
            err_q += qk;
        } else {
            err_p += pk;
        }
    }
    err_p.max(err_q)
}

fn criterion_6() -> Outcome {
    let p = State::Stoch(StochChannel::state(vec![rat(3, 4), rat(1, 4)]).unwrap());
    let q = State::Stoch(StochChannel::state(vec![rat(1, 4), rat(3, 4)]).unwrap());
    let fam = StateFamily::from_states(vec![p, q]).unwrap();
    let curve = error_curve(&fam, 15).unwrap();
    let eps = |n: usize| curve.points[n - 1].1.clone();
    let goldens = eps(1) == rat(1, 4) && eps(3) == rat(5, 32);
    let oracle = (1..=15).all(|n| eps(n) == binomial_error(n as u32));
    // ε_n ≤ (√3/2)^n  ⇔  ε_n² ≤ (3/4)^n, exactly
    let bound = (1..=15).all(|n| {
        let e = eps(n);
        &e * &e <= rat(3i64.pow(n as u32), 4i64.pow(n as u32))
    });

    let zero = State::Quantum(QState::from_ket(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = State::Quantum(QState::from_ket(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap());
    let h1 = helstrom_error(&zero, &plus, 1).unwrap();
    let trace_norm = helstrom_trace_norm(zero.as_quantum().unwrap(), plus.as_quantum().unwrap(), 1);
    let closed = (1.0 - (1.0 - 0.5f64).sqrt()) / 2.0;
    let helstrom_ok = (h1 - trace_norm).abs() <= HELSTROM_TOL && (h1 - closed).abs() <= HELSTROM_TOL;
    let h12 = helstrom_error(&zero, &plus, 12).unwrap();
    outcome(
        goldens && oracle && bound && helstrom_ok && h12 < 1e-3,
        format!(
            "eps_1 = {}, eps_3 = {}, binomial oracle n<=15: {oracle}, eps_n^2 <= (3/4)^n: {bound}; \
             Helstrom n=1 {h1:.12} vs trace norm {trace_norm:.12} (tol {HELSTROM_TOL:e}), n=12 {h12:.3e} < 1e-3",
            eps(1),
            eps(3)
        ),
    )
}

fn criterion_7(corpus: &[StateFamily]) -> Outcome {
    let mut bad = 0;
    for fam in corpus {
        let gates = GateFamily::preparations(fam.labels(), &fam.flags()).unwrap();
        let defect = min_defect_programmer(fam, &gates, DefectNorm::LInf).unwrap().defect;
        let yes = decide_distinguishable(fam, 0.0).unwrap().is_yes();
        bad += ((defect == int(0)) != yes) as usize;
    }
    outcome(bad == 0, format!("{} families, {bad} where zero defect and distinguishability disagree", corpus.len()))
}

fn criterion_8() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for backend in [Backend::FinStoch, Backend::Quantum] {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
        let (mut n, mut bad, mut worst) = (0, 0, 0.0f64);
        let mut same = |x: &Channel, y: &Channel| match (x, y) {
            (Channel::Stoch(a), Channel::Stoch(b)) => a == b,
            (Channel::Quantum(a), Channel::Quantum(b)) => {
                let d = a.distance(b);
                worst = worst.max(d);
                d <= LAW_TOL
            }
            _ => false,
        };
        while n < 500 {
            let pool = gen::generator_pool(&mut rng, backend);
            for _ in 0..25 {
                let dom = pool.random_type(&mut rng);
                let d = pool.diagram_from(&mut rng, &dom, 3, 16);
                assert!(typecheck(&d).is_ok());
                let plain = pool.eval(&d).unwrap();
                let idl = pool.eval(&Diagram::seq_unchecked(Diagram::identity(d.dom()), d.clone())).unwrap();
                let idr = pool.eval(&Diagram::seq_unchecked(d.clone(), Diagram::identity(d.cod()))).unwrap();
                let disc = pool.eval(&Diagram::seq_unchecked(d.clone(), Diagram::discard(d.cod()))).unwrap();
                let disc_dom = pool.eval(&Diagram::discard(d.dom())).unwrap();

                let e_dom = pool.random_type(&mut rng);
                let e = pool.diagram_from(&mut rng, &e_dom, 2, 4);
                let g = pool.diagram_from(&mut rng, &d.cod(), 2, 4);
                let f2 = pool.diagram_from(&mut rng, &e.cod(), 2, 4);
                let par = |x: &Diagram, y: &Diagram| Diagram::Par(Box::new(x.clone()), Box::new(y.clone()));
                let lhs = Diagram::seq_unchecked(par(&d, &e), par(&g, &f2));
                let rhs = par(&Diagram::seq_unchecked(d.clone(), g), &Diagram::seq_unchecked(e, f2));
                let ok = same(&idl, &plain)
                    && same(&idr, &plain)
                    && same(&disc, &disc_dom)
                    && same(&pool.eval(&lhs).unwrap(), &pool.eval(&rhs).unwrap());
                bad += (!ok) as usize;
                n += 1;
            }
        }
        pass &= bad == 0;
        let tol = if backend == Backend::FinStoch { "exact".to_string() } else { format!("max deviation {worst:.1e}, tol {LAW_TOL:e}") };
        details.push(format!("{backend}: {n} diagrams, {bad} violations ({tol})"));
    }
    outcome(pass, details.join("; "))
}

fn criterion_9() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pt"))
        .collect();
    files.sort();
    let mut texts = Vec::new();
    let mut round_trip_failures = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let ok = parse(&text).is_ok_and(|m| {
            let first = print(&m);
            let again = parse(&first).unwrap();
            print(&again) == first && again == m
        });
        if !ok {
            round_trip_failures.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
        texts.push(text);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let alphabet = b"[]{}();:*,=-+/.ie0123456789#\n abcdefghijklmnopqrstuvwxyzABQ'>_";
    let (mut crashes, mut unlocated, mut errors) = (0, 0, 0);
    let fuzz = 10_000;
    for k in 0..fuzz {
        let input: Vec<u8> = if k % 4 == 0 {
            (0..rng.random_range(0..300)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        } else {
            let mut bytes = texts[rng.random_range(0..texts.len())].clone().into_bytes();
            for _ in 0..rng.random_range(1..=6) {
                if bytes.is_empty() {
                    bytes.push(b'x');
                }
                let at = rng.random_range(0..bytes.len());
                match rng.random_range(0..4) {
                    0 => {
                        bytes.remove(at);
                    }
                    1 => bytes.insert(at, alphabet[rng.random_range(0..alphabet.len())]),
                    2 => bytes[at] = alphabet[rng.random_range(0..alphabet.len())],
                    _ => {
                        let end = (at + rng.random_range(1..40)).min(bytes.len());
                        let chunk = bytes[at..end].to_vec();
                        bytes.splice(at..at, chunk);
                    }
                }
            }
            bytes
        };
        let text = String::from_utf8_lossy(&input).into_owned();
        match catch_unwind(AssertUnwindSafe(|| parse(&text))) {
            Err(_) => crashes += 1,
            Ok(Err(e)) => {
                errors += 1;
                unlocated += (e.loc.line == 0 || e.loc.col == 0) as usize;
            }
            Ok(Ok(_)) => {}
        }
    }
    outcome(
        files.len() >= 20 && round_trip_failures.is_empty() && crashes == 0 && unlocated == 0,
        format!(
            "{} files, round-trip failures {:?}; {fuzz} fuzzed inputs, {errors} errors, {unlocated} unlocated, {crashes} crashes",
            files.len(),
            round_trip_failures
        ),
    )
}

fn main() {
    // the fuzz criterion counts panics itself
    std::panic::set_hook(Box::new(|_| {}));
    let corpus = corpus();
    let results: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("copiable iff distinguishable", Box::new(|| criterion_1(&corpus))),
        ("faithful side information iff distinguishable", Box::new(|| criterion_2(&corpus))),
        ("side information constant on confusability components", Box::new(criterion_3)),
        ("pullback certificates", Box::new(criterion_4)),
        ("no information without disturbance", Box::new(criterion_5)),
        ("many-copy error goldens and bounds", Box::new(criterion_6)),
        ("zero programming defect iff distinguishable", Box::new(|| criterion_7(&corpus))),
        ("framework laws on random diagrams", Box::new(criterion_8)),
        ("parser round trip and fuzzing", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in results.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| outcome(false, "panicked"));
        println!("criterion {} {}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
