//! `distinguish`: command-line driver for model files.
//!
//! Exit codes: 0 YES or pass, 1 NO or fail, 2 input error, 3 invariant
//! violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use distinguish_core::asymptotics::error_curve;
use distinguish_core::diagram::{typecheck, TypeReport};
use distinguish_core::finstoch::{is_pure_gate_stoch, is_pure_state_stoch};
use distinguish_core::quantum::{is_pure_gate_q, is_pure_state_q};
use distinguish_core::tasks::{
    confusability, decide_copiable, decide_distinguishable, find_faithful_side_info, verify_cloner,
    verify_faithful_side_info, verify_flag, verify_no_info, verify_programmer,
};
use distinguish_core::{
    format_channel, gen, parse, print, CertificateKind, Channel, Decision, Error, Model, State, SystemType, Verdict,
};

#[derive(Parser)]
#[command(name = "distinguish", version, about = "Decide distinguishability, copiability and side information for model files")]
struct Cli {
    /// Absolute tolerance for quantum verdicts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck circuits and report causality and purity of generators.
    Check { file: PathBuf },
    /// Evaluate a circuit and print its matrix.
    Eval { file: PathBuf, circuit: String },
    /// Decide a task for a state family.
    Decide {
        task: Task,
        file: PathBuf,
        family: String,
        /// Write the certificate as a model file.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a certificate.
    Synth {
        #[command(subcommand)]
        what: Synth,
    },
    /// Emit a graph in DOT format.
    Graph {
        #[command(subcommand)]
        what: Graph,
    },
    /// Print the ML error curve of a FinStoch family as CSV.
    Iid {
        file: PathBuf,
        family: String,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Check a claim by substitution.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Run the decision procedures on generated FinStoch families and
    /// cross-check their verdicts.
    Suite {
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Dist,
    Clone,
    Sideinfo,
}

#[derive(Subcommand)]
enum Synth {
    /// Programmer `W: A*B -> B'` running gate `G_x` on state `ρ_x`.
    Programmer {
        file: PathBuf,
        family: String,
        gates: String,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Graph {
    /// Edges join states that are not distinguishable.
    Confusability { file: PathBuf, family: String },
}

#[derive(Subcommand)]
enum Verify {
    /// Disturbance and extracted information of `channel: A -> A*E` on two pure states.
    Noinfo { file: PathBuf, channel: String, state0: String, state1: String },
    /// Every certificate in `cert` holds for the families of `file`.
    Cert { file: PathBuf, cert: PathBuf },
}

enum Fail {
    Input(String),
    Invariant(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(_) => Fail::Invariant(e.to_string()),
            _ => Fail::Input(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Check { file } => check(file),
        Cmd::Eval { file, circuit } => eval(file, circuit),
        Cmd::Decide { task, file, family, output } => decide(*task, file, family, output.as_deref(), cli.tol),
        Cmd::Synth { what: Synth::Programmer { file, family, gates, output } } => {
            synth_programmer(file, family, gates, output.as_deref(), cli.tol)
        }
        Cmd::Graph { what: Graph::Confusability { file, family } } => graph(file, family, cli.tol),
        Cmd::Iid { file, family, n_max } => iid(file, family, *n_max),
        Cmd::Verify { what: Verify::Noinfo { file, channel, state0, state1 } } => noinfo(file, channel, state0, state1, cli.tol),
        Cmd::Verify { what: Verify::Cert { file, cert } } => verify_cert(file, cert, cli.tol),
        Cmd::Suite { count } => suite(*count, cli.seed, cli.tol),
    };
    match result {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Fail::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &Path) -> Result<Model, Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Fail::Input(format!("{}:{e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn check(file: &Path) -> Outcome {
    let model = load(file)?;
    let Some(backend) = model.backend else {
        println!("empty model");
        return Ok(true);
    };
    println!("backend {backend}");
    let mut ok = true;
    for g in &model.generators {
        let line = match model.channel(&g.name) {
            Err(e) => {
                ok = false;
                format!("invalid: {e}")
            }
            Ok(ch) => {
                let pure = match (&ch, g.is_state) {
                    (Channel::Stoch(s), true) => is_pure_state_stoch(s).pure,
                    (Channel::Stoch(s), false) => is_pure_gate_stoch(s)?,
                    (Channel::Quantum(_), true) => match model.state(&g.name)? {
                        State::Quantum(q) => is_pure_state_q(&q),
                        State::Stoch(_) => unreachable!("quantum channel yields a quantum state"),
                    },
                    (Channel::Quantum(q), false) => is_pure_gate_q(q),
                };
                format!("causal {}", if pure { "pure" } else { "impure" })
            }
        };
        println!("{} {} : {} -> {}  {line}", if g.is_state { "state" } else { "gate" }, g.name, g.dom, g.cod);
    }
    for c in &model.circuits {
        let line = match typecheck(&c.diagram) {
            TypeReport::Mismatch { node, expected, actual, .. } => {
                ok = false;
                format!("ill-typed at `{node}`: {expected} does not match {actual}")
            }
            TypeReport::Ok { dom, cod } => match model.eval(&c.name) {
                Ok(_) => format!("{dom} -> {cod}  ok"),
                Err(e) => {
                    ok = false;
                    format!("{dom} -> {cod}  {e}")
                }
            },
        };
        println!("circuit {}  {line}", c.name);
    }
    if ok {
        Ok(true)
    } else {
        Err(Fail::Input("check failed".into()))
    }
}

fn eval(file: &Path, circuit: &str) -> Outcome {
    let model = load(file)?;
    let d = model.circuit(circuit)?;
    if let TypeReport::Mismatch { node, expected, actual, .. } = typecheck(d) {
        return Err(Fail::Input(format!("ill-typed at `{node}`: {expected} does not match {actual}")));
    }
    let ch = model.eval(circuit)?;
    let (dom, cod) = (d.dom(), d.cod());
    if dom.is_unit() {
        println!("state {circuit} : {cod} = {}", format_channel(&ch));
    } else {
        println!("gate {circuit} : {dom} -> {cod} = {}", format_channel(&ch));
    }
    Ok(true)
}

fn fresh_system(model: &Model, base: &str) -> String {
    let taken = |n: &str| model.systems.iter().any(|(s, _)| s == n);
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|k| format!("{base}{k}")).find(|n| !taken(n)).expect("unbounded")
}

/// Writes `model` plus the certificate channel and its `certificate` line.
fn emit_certificate(
    mut model: Model,
    kind: CertificateKind,
    channel: &Channel,
    family: &str,
    gates: Option<&str>,
    path: &Path,
) -> Result<(), Fail> {
    let fam = model.family(family)?;
    let a = fam.system().clone();
    let (dom, cod) = match kind {
        CertificateKind::Flag => {
            let x = fresh_system(&model, "X");
            model.ensure_system(&x, channel.out_dim())?;
            (a, SystemType::atom(x))
        }
        CertificateKind::SideInfo => {
            let e = fresh_system(&model, "E");
            model.ensure_system(&e, channel.out_dim() / channel.in_dim())?;
            (a.clone(), a.tensor(&SystemType::atom(e)))
        }
        CertificateKind::Cloner => (a.clone(), a.tensor(&a)),
        CertificateKind::Programmer => {
            let g = model.gate_family(gates.expect("programmer names its gates"))?;
            (a.tensor(g.dom()), g.cod().clone())
        }
    };
    let name = model.fresh_name(&format!("{}_{family}", kind.keyword()));
    model.add_channel(&name, dom, cod, channel)?;
    model.certificates.push(distinguish_core::model::CertificateDecl {
        kind,
        gate: name,
        family: family.to_string(),
        gates: gates.map(str::to_string),
    });
    write(path, &print(&model))
}

fn report(d: &Decision) -> bool {
    match d.verdict {
        Verdict::Yes => println!("YES"),
        v => println!("{v}: {}", d.diagnostic),
    }
    d.is_yes()
}

fn decide(task: Task, file: &Path, family: &str, output: Option<&Path>, tol: f64) -> Outcome {
    let model = load(file)?;
    let fam = model.family(family)?;
    let decision = match task {
        Task::Dist => decide_distinguishable(&fam, tol)?,
        Task::Clone => decide_copiable(&fam, tol)?,
        Task::Sideinfo => find_faithful_side_info(&fam, tol)?,
    };
    let yes = report(&decision);
    if let (Some(path), Some(cert)) = (output, &decision.certificate) {
        emit_certificate(model, cert.kind, &cert.channel, family, None, path)?;
    }
    Ok(yes)
}

fn synth_programmer(file: &Path, family: &str, gates: &str, output: Option<&Path>, tol: f64) -> Outcome {
    let model = load(file)?;
    let fam = model.family(family)?;
    let gf = model.gate_family(gates)?;
    let w = match distinguish_core::tasks::build_programmer(&fam, &gf, tol) {
        Ok(w) => w,
        Err(Error::NotDistinguishable(why)) => {
            println!("NO: {why}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    println!("YES");
    match output {
        Some(path) => emit_certificate(model, CertificateKind::Programmer, &w, family, Some(gates), path)?,
        None => println!("{}", format_channel(&w)),
    }
    Ok(true)
}

fn graph(file: &Path, family: &str, tol: f64) -> Outcome {
    let model = load(file)?;
    let g = confusability(&model.family(family)?, tol)?;
    print!("{}", g.to_dot());
    Ok(true)
}

fn iid(file: &Path, family: &str, n_max: usize) -> Outcome {
    let model = load(file)?;
    let curve = error_curve(&model.family(family)?, n_max)?;
    print!("{}", curve.to_csv());
    Ok(true)
}

fn noinfo(file: &Path, channel: &str, s0: &str, s1: &str, tol: f64) -> Outcome {
    let model = load(file)?;
    let ch = model.channel(channel)?;
    let r = verify_no_info(&ch, &model.state(s0)?, &model.state(s1)?, tol)?;
    println!("disturbance {s0} {:.12}", r.disturbance[0].to_f64());
    println!("disturbance {s1} {:.12}", r.disturbance[1].to_f64());
    println!("information {:.12}", r.information.to_f64());
    println!("distinguishable {}", r.distinguishable);
    println!("undisturbed {}", r.undisturbed(tol));
    if r.violation {
        return Err(Fail::Invariant("information extracted without disturbance".into()));
    }
    Ok(true)
}

fn verify_cert(file: &Path, cert: &Path, tol: f64) -> Outcome {
    let model = load(file)?;
    let certs = load(cert)?;
    if certs.certificates.is_empty() {
        return Err(Fail::Input(format!("{}: no certificate declarations", cert.display())));
    }
    if certs.backend != model.backend {
        return Err(Fail::Input("certificate and model use different backends".into()));
    }
    let mut all = true;
    for c in &certs.certificates {
        let fam = certs.family(&c.family)?;
        let theirs = model.family(&c.family)?;
        let same = fam.labels() == theirs.labels()
            && fam
                .states()
                .iter()
                .zip(theirs.states())
                .map(|(a, b)| a.approx_eq(b, tol))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|e| e);
        let ch = certs.channel(&c.gate)?;
        let ok = same
            && match c.kind {
                CertificateKind::Flag => verify_flag(&ch, &fam, tol)?,
                CertificateKind::Cloner => verify_cloner(&ch, &fam, tol)?,
                CertificateKind::SideInfo => verify_faithful_side_info(&ch, &fam, tol)?,
                CertificateKind::Programmer => {
                    let gates = certs.gate_family(c.gates.as_deref().expect("resolved programmer names its gates"))?;
                    verify_programmer(&ch, &fam, &gates, tol)?
                }
            };
        let note = if same { "" } else { " (family differs from the model)" };
        println!("{} {} {} for {}{note}", if ok { "PASS" } else { "FAIL" }, c.kind.keyword(), c.gate, c.family);
        all &= ok;
    }
    Ok(all)
}

fn suite(count: usize, seed: u64, tol: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut yes, mut checked) = (0, 0);
    for k in 0..count {
        let fam = gen::stoch_family(&mut rng, 5, 4, 8);
        let dist = decide_distinguishable(&fam, tol)?;
        let copy = decide_copiable(&fam, tol)?;
        let side = find_faithful_side_info(&fam, tol)?;
        if copy.verdict != dist.verdict {
            return Err(Fail::Invariant(format!("instance {k}: copiable {} but distinguishable {}", copy.verdict, dist.verdict)));
        }
        if side.verdict != Verdict::NotApplicable {
            checked += 1;
            if side.verdict != dist.verdict {
                return Err(Fail::Invariant(format!(
                    "instance {k}: faithful side info {} but distinguishable {}",
                    side.verdict, dist.verdict
                )));
            }
        }
        yes += dist.is_yes() as usize;
    }
    println!("families {count}");
    println!("distinguishable {yes}");
    println!("copiable agrees {count}/{count}");
    println!("side info agrees {checked}/{checked}");
    Ok(true)
}
