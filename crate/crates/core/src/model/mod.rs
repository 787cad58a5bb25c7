//! Textual model files: systems, generators with inline matrices, families,
//! circuits and certificates.
//!
//! ```text
//! backend finstoch
//! system A dim 3
//! state rho0 : A = [1/2, 1/2, 0]
//! gate G : A -> A = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
//! family S = {rho0}
//! circuit c = rho0 ; G ; discard(A)
//! ```
//!
//! FinStoch matrices have one column per input symbol. Quantum gates are
//! Choi matrices `Σ E_ij ⊗ G(E_ij)` with the input factor first; quantum
//! states are density matrices or `ket [...]`. [`print`] emits a canonical
//! form that parses back to the same model.

mod lexer;
mod parser;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;

use crate::backend::{Backend, Channel, State};
use crate::diagram::Diagram;
use crate::error::Error;
use crate::finstoch::StochChannel;
use crate::quantum::{CMatrix, QChannel, QState};
use crate::rational::{format_rational, RatMatrix, Rational};
use crate::tasks::{CertificateKind, GateFamily, StateFamily};
use crate::types::{Signature, SystemType, MAX_DIMENSION};

use lexer::tokenize;
use parser::{Decl, Entry, Parser, RawExpr, RawPayload, RawType, Spanned};

/// Largest decimal exponent accepted in a literal.
const MAX_EXPONENT: i64 = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Resolution,
    Dimension,
}

/// A located parse failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{loc}: {} error: {message}{}", kind_name(*.kind), expected_suffix(.expected))]
pub struct ParseError {
    pub kind: ErrorKind,
    pub loc: Loc,
    pub message: String,
    /// Tokens that would have been accepted, for syntax errors.
    pub expected: Vec<String>,
}

fn kind_name(k: ErrorKind) -> &'static str {
    match k {
        ErrorKind::Syntax => "syntax",
        ErrorKind::Resolution => "resolution",
        ErrorKind::Dimension => "dimension",
    }
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

impl ParseError {
    pub(crate) fn new(kind: ErrorKind, loc: Loc, message: impl Into<String>) -> Self {
        Self { kind, loc, message: message.into(), expected: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// FinStoch matrix, `cod × dom`.
    Stoch(RatMatrix),
    Density(CMatrix),
    Ket(Vec<Complex64>),
    Choi(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorDecl {
    pub name: String,
    /// Declared with `state` (domain `I`).
    pub is_state: bool,
    pub dom: SystemType,
    pub cod: SystemType,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyDecl {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateFamilyDecl {
    pub name: String,
    pub dom: SystemType,
    pub cod: SystemType,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitDecl {
    pub name: String,
    pub diagram: Diagram,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateDecl {
    pub kind: CertificateKind,
    pub gate: String,
    pub family: String,
    pub gates: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub backend: Option<Backend>,
    pub systems: Vec<(String, usize)>,
    pub generators: Vec<GeneratorDecl>,
    pub families: Vec<FamilyDecl>,
    pub gate_families: Vec<GateFamilyDecl>,
    pub circuits: Vec<CircuitDecl>,
    pub certificates: Vec<CertificateDecl>,
}

pub fn parse(text: &str) -> Result<Model, ParseError> {
    let toks = tokenize(text)?;
    let decls = Parser::new(toks).parse_file()?;
    Resolver::default().run(decls)
}

#[derive(Default)]
struct Resolver {
    model: Model,
    sig: Signature,
    names: HashMap<String, Loc>,
}

fn resolution(loc: Loc, msg: impl Into<String>) -> ParseError {
    ParseError::new(ErrorKind::Resolution, loc, msg)
}

fn dimension(loc: Loc, msg: impl Into<String>) -> ParseError {
    ParseError::new(ErrorKind::Dimension, loc, msg)
}

impl Resolver {
    fn run(mut self, decls: Vec<Decl>) -> Result<Model, ParseError> {
        for decl in decls {
            self.decl(decl)?;
        }
        Ok(self.model)
    }

    fn backend(&self, loc: Loc) -> Result<Backend, ParseError> {
        self.model.backend.ok_or_else(|| resolution(loc, "declarations must follow a `backend` line"))
    }

    fn claim(&mut self, name: &Spanned<String>) -> Result<(), ParseError> {
        if let Some(prev) = self.names.get(&name.value) {
            return Err(resolution(name.loc, format!("`{}` already declared at {prev}", name.value)));
        }
        self.names.insert(name.value.clone(), name.loc);
        Ok(())
    }

    fn ty(&self, raw: &RawType) -> Result<SystemType, ParseError> {
        for atom in raw {
            if !self.sig.contains(&atom.value) {
                return Err(resolution(atom.loc, format!("unknown system `{}`", atom.value)));
            }
        }
        Ok(SystemType::from_factors(raw.iter().map(|a| a.value.clone())))
    }

    fn dim(&self, ty: &SystemType, loc: Loc) -> Result<usize, ParseError> {
        self.sig.dim(ty).map_err(|e| dimension(loc, e.to_string()))
    }

    fn decl(&mut self, decl: Decl) -> Result<(), ParseError> {
        match decl {
            Decl::Backend(name) => {
                if self.model.backend.is_some() {
                    return Err(resolution(name.loc, "backend declared twice"));
                }
                self.model.backend = Some(match name.value.as_str() {
                    "finstoch" => Backend::FinStoch,
                    "quantum" => Backend::Quantum,
                    other => return Err(resolution(name.loc, format!("unknown backend `{other}` (finstoch or quantum)"))),
                });
            }
            Decl::System { name, dim } => {
                self.backend(name.loc)?;
                if self.sig.contains(&name.value) {
                    return Err(resolution(name.loc, format!("system `{}` declared twice", name.value)));
                }
                let d: usize = dim.value.parse().map_err(|_| dimension(dim.loc, "dimension too large"))?;
                if d == 0 || d > MAX_DIMENSION {
                    return Err(dimension(dim.loc, format!("dimension must be between 1 and {MAX_DIMENSION}")));
                }
                self.sig.declare(name.value.clone(), d);
                self.model.systems.push((name.value, d));
            }
            Decl::State { name, ty, payload } => {
                let backend = self.backend(name.loc)?;
                self.claim(&name)?;
                let cod = self.ty(&ty)?;
                let d = self.dim(&cod, name.loc)?;
                let payload = self.payload(backend, payload, 1, d, true)?;
                self.model.generators.push(GeneratorDecl { name: name.value, is_state: true, dom: SystemType::unit(), cod, payload });
            }
            Decl::Gate { name, dom, cod, payload } => {
                let backend = self.backend(name.loc)?;
                self.claim(&name)?;
                let (dom, cod) = (self.ty(&dom)?, self.ty(&cod)?);
                let (din, dout) = (self.dim(&dom, name.loc)?, self.dim(&cod, name.loc)?);
                let payload = self.payload(backend, payload, din, dout, false)?;
                self.model.generators.push(GeneratorDecl { name: name.value, is_state: false, dom, cod, payload });
            }
            Decl::Family { name, members } => {
                self.backend(name.loc)?;
                self.claim(&name)?;
                let mut ty: Option<&SystemType> = None;
                for m in &members {
                    let Some(g) = self.model.generators.iter().find(|g| g.name == m.value) else {
                        return Err(resolution(m.loc, format!("unknown state `{}`", m.value)));
                    };
                    if !g.dom.is_unit() {
                        return Err(resolution(m.loc, format!("`{}` is not a state", m.value)));
                    }
                    if ty.is_some_and(|t| *t != g.cod) {
                        return Err(resolution(m.loc, format!("`{}` has type {} unlike earlier members", m.value, g.cod)));
                    }
                    ty = Some(&g.cod);
                }
                check_unique(&members)?;
                let members = members.into_iter().map(|m| m.value).collect();
                self.model.families.push(FamilyDecl { name: name.value, members });
            }
            Decl::Gates { name, dom, cod, members } => {
                self.backend(name.loc)?;
                self.claim(&name)?;
                let (dom, cod) = (self.ty(&dom)?, self.ty(&cod)?);
                for m in &members {
                    let Some(g) = self.model.generators.iter().find(|g| g.name == m.value) else {
                        return Err(resolution(m.loc, format!("unknown gate `{}`", m.value)));
                    };
                    if g.dom != dom || g.cod != cod {
                        return Err(resolution(m.loc, format!("`{}` is {} -> {}, not {dom} -> {cod}", m.value, g.dom, g.cod)));
                    }
                }
                check_unique(&members)?;
                let members = members.into_iter().map(|m| m.value).collect();
                self.model.gate_families.push(GateFamilyDecl { name: name.value, dom, cod, members });
            }
            Decl::Circuit { name, expr } => {
                self.backend(name.loc)?;
                self.claim(&name)?;
                let diagram = self.expr(&expr)?;
                self.model.circuits.push(CircuitDecl { name: name.value, diagram });
            }
            Decl::Certificate { kind, gate, family, gates } => {
                self.backend(kind.loc)?;
                let k = CertificateKind::from_keyword(&kind.value).ok_or_else(|| {
                    resolution(kind.loc, format!("unknown certificate kind `{}` (flag, programmer, cloner, sideinfo)", kind.value))
                })?;
                if !self.model.generators.iter().any(|g| g.name == gate.value) {
                    return Err(resolution(gate.loc, format!("unknown gate `{}`", gate.value)));
                }
                if !self.model.families.iter().any(|f| f.name == family.value) {
                    return Err(resolution(family.loc, format!("unknown family `{}`", family.value)));
                }
                match (&gates, k) {
                    (None, CertificateKind::Programmer) => {
                        return Err(resolution(family.loc, "a programmer certificate names its gate family"));
                    }
                    (Some(g), CertificateKind::Programmer) => {
                        if !self.model.gate_families.iter().any(|f| f.name == g.value) {
                            return Err(resolution(g.loc, format!("unknown gate family `{}`", g.value)));
                        }
                    }
                    (Some(g), _) => return Err(resolution(g.loc, "only programmer certificates name a gate family")),
                    (None, _) => {}
                }
                self.model.certificates.push(CertificateDecl {
                    kind: k,
                    gate: gate.value,
                    family: family.value,
                    gates: gates.map(|g| g.value),
                });
            }
        }
        Ok(())
    }

    fn expr(&self, e: &RawExpr) -> Result<Diagram, ParseError> {
        Ok(match e {
            RawExpr::Ref(name) => {
                let Some(g) = self.model.generators.iter().find(|g| g.name == name.value) else {
                    return Err(resolution(name.loc, format!("unknown generator `{}`", name.value)));
                };
                Diagram::generator(g.name.clone(), g.dom.clone(), g.cod.clone())
            }
            RawExpr::Id(t) => Diagram::identity(self.ty(t)?),
            RawExpr::Discard(t) => Diagram::discard(self.ty(t)?),
            RawExpr::Swap(a, b) => Diagram::swap(self.ty(a)?, self.ty(b)?),
            RawExpr::Seq(a, b) => Diagram::Seq(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            RawExpr::Par(a, b) => Diagram::Par(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
        })
    }

    fn payload(&self, backend: Backend, p: Spanned<RawPayload>, din: usize, dout: usize, is_state: bool) -> Result<Payload, ParseError> {
        let loc = p.loc;
        match backend {
            Backend::FinStoch => {
                let rows: Vec<Vec<Entry>> = match p.value {
                    RawPayload::Ket(_) => return Err(resolution(loc, "`ket` is only meaningful in quantum models")),
                    RawPayload::Vector(v) if is_state => v.into_iter().map(|e| vec![e]).collect(),
                    RawPayload::Vector(_) => return Err(dimension(loc, "a gate needs a matrix `[[...], ...]`")),
                    RawPayload::Matrix(rows) => rows,
                };
                check_shape(&rows, dout, din, loc)?;
                let mut data = Vec::with_capacity(din * dout);
                for e in rows.iter().flatten() {
                    data.push(exact_entry(e)?);
                }
                Ok(Payload::Stoch(RatMatrix::from_vec(dout, din, data)))
            }
            Backend::Quantum => match p.value {
                RawPayload::Ket(v) => {
                    if !is_state {
                        return Err(resolution(loc, "`ket` declares a state, not a gate"));
                    }
                    if v.len() != dout {
                        return Err(dimension(loc, format!("ket has {} entries, system has dimension {dout}", v.len())));
                    }
                    Ok(Payload::Ket(v.iter().map(float_entry).collect::<Result<_, _>>()?))
                }
                RawPayload::Vector(_) => Err(dimension(loc, "quantum payloads are matrices or `ket [...]`")),
                RawPayload::Matrix(rows) => {
                    let n = din.checked_mul(dout).filter(|&n| n <= 4096).ok_or_else(|| dimension(loc, "Choi matrix too large"))?;
                    check_shape(&rows, n, n, loc)?;
                    let mut data = Vec::with_capacity(n * n);
                    for e in rows.iter().flatten() {
                        data.push(float_entry(e)?);
                    }
                    let m = CMatrix::from_row_slice(n, n, &data);
                    Ok(if is_state { Payload::Density(m) } else { Payload::Choi(m) })
                }
            },
        }
    }
}

fn check_unique(members: &[Spanned<String>]) -> Result<(), ParseError> {
    for (i, m) in members.iter().enumerate() {
        if members[..i].iter().any(|o| o.value == m.value) {
            return Err(resolution(m.loc, format!("`{}` listed twice", m.value)));
        }
    }
    Ok(())
}

fn check_shape(rows: &[Vec<Entry>], nrows: usize, ncols: usize, loc: Loc) -> Result<(), ParseError> {
    if rows.len() != nrows {
        return Err(dimension(loc, format!("expected {nrows} rows, found {}", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(dimension(r[0].loc, format!("expected {ncols} columns, found {}", r.len())));
    }
    Ok(())
}

/// Exact value of a real literal: `int[.frac][e±exp][/den]`.
fn exact_real(text: &str, loc: Loc) -> Result<Rational, ParseError> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let (mantissa, exp) = match num.find(['e', 'E']) {
        Some(k) => {
            let e: i64 = num[k + 1..].parse().map_err(|_| ParseError::new(ErrorKind::Syntax, loc, "bad exponent"))?;
            (&num[..k], e)
        }
        None => (num, 0),
    };
    if exp.abs() > MAX_EXPONENT {
        return Err(ParseError::new(ErrorKind::Syntax, loc, format!("exponent beyond ±{MAX_EXPONENT}")));
    }
    let (int_part, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac}");
    let m: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| ParseError::new(ErrorKind::Syntax, loc, "bad number"))? };
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if shift >= 0 {
        Rational::from_integer(m * num_traits::pow(ten, shift as usize))
    } else {
        if -shift > 2 * MAX_EXPONENT {
            return Err(ParseError::new(ErrorKind::Syntax, loc, "too many digits"));
        }
        Rational::new(m, num_traits::pow(ten, (-shift) as usize))
    };
    if let Some(d) = den {
        let d: BigInt = d.parse().map_err(|_| ParseError::new(ErrorKind::Syntax, loc, "bad denominator"))?;
        if d.is_zero() {
            return Err(dimension(loc, "zero denominator"));
        }
        value /= Rational::from_integer(d);
    }
    Ok(value)
}

fn float_real(text: &str, loc: Loc) -> Result<f64, ParseError> {
    let bad = || ParseError::new(ErrorKind::Syntax, loc, format!("bad number `{text}`"));
    let value = match text.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
            if d == 0.0 {
                return Err(dimension(loc, "zero denominator"));
            }
            n / d
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(ParseError::new(ErrorKind::Syntax, loc, format!("`{text}` is not a finite number")));
    }
    Ok(value)
}

fn exact_entry(e: &Entry) -> Result<Rational, ParseError> {
    if e.im.is_some() {
        return Err(resolution(e.loc, "complex entries are only allowed in quantum models"));
    }
    let (neg, text) = e.re.as_ref().expect("entry has a real or imaginary part");
    let v = exact_real(text, e.loc)?;
    Ok(if *neg { -v } else { v })
}

fn float_entry(e: &Entry) -> Result<Complex64, ParseError> {
    let part = |p: &Option<(bool, String)>| -> Result<f64, ParseError> {
        match p {
            None => Ok(0.0),
            Some((neg, text)) => {
                let v = float_real(text, e.loc)?;
                Ok(if *neg { -v } else { v })
            }
        }
    };
    Ok(Complex64::new(part(&e.re)?, part(&e.im)?))
}

// ---------------------------------------------------------------- printing

fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}i", z.re, z.im.abs())
}

fn format_rows<T>(rows: usize, cols: usize, at: impl Fn(usize, usize) -> T, show: impl Fn(&T) -> String) -> String {
    let body: Vec<String> = (0..rows)
        .map(|i| format!("[{}]", (0..cols).map(|j| show(&at(i, j))).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", body.join(", "))
}

fn format_payload(p: &Payload, is_state: bool) -> String {
    match p {
        Payload::Stoch(m) if is_state => {
            format!("[{}]", (0..m.rows()).map(|i| format_rational(&m[(i, 0)])).collect::<Vec<_>>().join(", "))
        }
        Payload::Stoch(m) => format_rows(m.rows(), m.cols(), |i, j| m[(i, j)].clone(), format_rational),
        Payload::Ket(v) => format!("ket [{}]", v.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(", ")),
        Payload::Density(m) | Payload::Choi(m) => format_rows(m.nrows(), m.ncols(), |i, j| m[(i, j)], |z| format_complex(*z)),
    }
}

/// The payload text of a channel, as it appears after `=` in a
/// declaration.
pub fn format_channel(channel: &Channel) -> String {
    let is_state = channel.in_dim() == 1;
    match channel {
        Channel::Stoch(s) => format_payload(&Payload::Stoch(s.matrix().clone()), is_state),
        Channel::Quantum(q) => format_payload(&Payload::Choi(q.choi().clone()), is_state),
    }
}

/// Canonical text: header, backend, then systems, generators, state
/// families, gate families, circuits and certificates, each group in
/// declaration order.
pub fn print(m: &Model) -> String {
    let mut out = String::from("# distinguish model\n");
    if m.backend == Some(Backend::Quantum) {
        out.push_str("# choi: input-factor-first, row-major\n");
    }
    let mut sections: Vec<Vec<String>> = Vec::new();
    if let Some(b) = m.backend {
        sections.push(vec![format!("backend {b}")]);
    }
    sections.push(m.systems.iter().map(|(n, d)| format!("system {n} dim {d}")).collect());
    sections.push(
        m.generators
            .iter()
            .map(|g| {
                let p = format_payload(&g.payload, g.is_state);
                if g.is_state {
                    format!("state {} : {} = {p}", g.name, g.cod)
                } else {
                    format!("gate {} : {} -> {} = {p}", g.name, g.dom, g.cod)
                }
            })
            .collect(),
    );
    sections.push(m.families.iter().map(|f| format!("family {} = {{{}}}", f.name, f.members.join(", "))).collect());
    sections.push(
        m.gate_families
            .iter()
            .map(|f| format!("gates {} : {} -> {} = {{{}}}", f.name, f.dom, f.cod, f.members.join(", ")))
            .collect(),
    );
    sections.push(m.circuits.iter().map(|c| format!("circuit {} = {}", c.name, c.diagram)).collect());
    sections.push(
        m.certificates
            .iter()
            .map(|c| {
                let tail = c.gates.as_ref().map(|g| format!(" {g}")).unwrap_or_default();
                format!("certificate {} {} for {}{tail}", c.kind.keyword(), c.gate, c.family)
            })
            .collect(),
    );
    for section in sections.into_iter().filter(|s| !s.is_empty()) {
        out.push('\n');
        for line in section {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

// ------------------------------------------------------------- model access

impl Model {
    pub fn backend(&self) -> Result<Backend, Error> {
        self.backend.ok_or_else(|| Error::InvalidArgument("model declares no backend".into()))
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for (n, d) in &self.systems {
            sig.declare(n.clone(), *d);
        }
        sig
    }

    pub fn generator(&self, name: &str) -> Result<&GeneratorDecl, Error> {
        self.generators.iter().find(|g| g.name == name).ok_or_else(|| Error::UnboundGenerator(name.to_string()))
    }

    /// The generator as a validated channel.
    pub fn channel(&self, name: &str) -> Result<Channel, Error> {
        let g = self.generator(name)?;
        let sig = self.signature();
        let (din, dout) = (sig.dim(&g.dom)?, sig.dim(&g.cod)?);
        Ok(match &g.payload {
            Payload::Stoch(m) => Channel::Stoch(StochChannel::new(m.clone()).map_err(|_| Error::NotCausal(format!("`{name}`")))?),
            Payload::Ket(v) => Channel::Quantum(QState::from_ket(v)?.as_channel()),
            Payload::Density(m) => Channel::Quantum(QState::new(m.clone())?.as_channel()),
            Payload::Choi(m) => Channel::Quantum(
                QChannel::new(din, dout, m.clone()).map_err(|e| Error::CptpViolation(format!("`{name}`: {e}")))?,
            ),
        })
    }

    pub fn state(&self, name: &str) -> Result<State, Error> {
        let g = self.generator(name)?;
        if !g.dom.is_unit() {
            return Err(Error::InvalidArgument(format!("`{name}` is a gate, not a state")));
        }
        self.channel(name)?.as_state().ok_or_else(|| Error::InvalidArgument(format!("`{name}` is not a state")))
    }

    pub fn family(&self, name: &str) -> Result<StateFamily, Error> {
        let f = self
            .families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family `{name}`")))?;
        let system = self.generator(&f.members[0])?.cod.clone();
        let members = f.members.iter().map(|m| Ok((m.clone(), self.state(m)?))).collect::<Result<Vec<_>, Error>>()?;
        StateFamily::new(system, members)
    }

    pub fn gate_family(&self, name: &str) -> Result<GateFamily, Error> {
        let f = self
            .gate_families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown gate family `{name}`")))?;
        let members = f.members.iter().map(|m| Ok((m.clone(), self.channel(m)?))).collect::<Result<Vec<_>, Error>>()?;
        GateFamily::new(f.dom.clone(), f.cod.clone(), members)
    }

    pub fn circuit(&self, name: &str) -> Result<&Diagram, Error> {
        self.circuits
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.diagram)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown circuit `{name}`")))
    }

    /// Every generator as a channel; fails on the first invalid payload.
    pub fn env(&self) -> Result<BTreeMap<String, Channel>, Error> {
        self.generators.iter().map(|g| Ok((g.name.clone(), self.channel(&g.name)?))).collect()
    }

    /// Evaluates a named circuit.
    pub fn eval(&self, name: &str) -> Result<Channel, Error> {
        let d = self.circuit(name)?;
        crate::backend::eval(d, &self.signature(), self.backend()?, &self.env()?)
    }

    fn is_declared(&self, name: &str) -> bool {
        self.generators.iter().any(|g| g.name == name)
            || self.families.iter().any(|f| f.name == name)
            || self.gate_families.iter().any(|f| f.name == name)
            || self.circuits.iter().any(|c| c.name == name)
    }

    /// A name starting with `base` that is not yet declared.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.is_declared(base) {
            return base.to_string();
        }
        (1..).map(|k| format!("{base}{k}")).find(|n| !self.is_declared(n)).expect("unbounded")
    }

    /// Adds `channel` as a gate (or a state when `dom` is `I`).
    pub fn add_channel(&mut self, name: &str, dom: SystemType, cod: SystemType, channel: &Channel) -> Result<(), Error> {
        if self.is_declared(name) {
            return Err(Error::InvalidArgument(format!("`{name}` already declared")));
        }
        let sig = self.signature();
        if (sig.dim(&dom)?, sig.dim(&cod)?) != (channel.in_dim(), channel.out_dim()) {
            return Err(Error::DimensionMismatch(format!("channel does not fit {dom} -> {cod}")));
        }
        let is_state = dom.is_unit();
        let payload = match channel {
            Channel::Stoch(s) => Payload::Stoch(s.matrix().clone()),
            Channel::Quantum(q) if is_state => Payload::Density(q.choi().clone()),
            Channel::Quantum(q) => Payload::Choi(q.choi().clone()),
        };
        self.generators.push(GeneratorDecl { name: name.to_string(), is_state, dom, cod, payload });
        Ok(())
    }

    /// Declares a system unless a system of that name and dimension
    /// already exists.
    pub fn ensure_system(&mut self, name: &str, dim: usize) -> Result<(), Error> {
        match self.systems.iter().find(|(n, _)| n == name) {
            Some((_, d)) if *d == dim => Ok(()),
            Some(_) => Err(Error::InvalidArgument(format!("system `{name}` exists with another dimension"))),
            None => {
                self.systems.push((name.to_string(), dim));
                Ok(())
            }
        }
    }
}
