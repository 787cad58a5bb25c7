//! Circuit IR: generator boxes wired by sequential and parallel composition.
//!
//! A [`Diagram`] is an immutable tree. Leaves are generator references,
//! identities, discards and swaps; internal nodes are [`Diagram::Seq`]
//! (`g ; h`, first `g` then `h`) and [`Diagram::Par`] (`g * h`, side by
//! side). Types are checked by [`typecheck`], not at construction, so a
//! parsed tree can be reported on rather than rejected wholesale. Meaning
//! is assigned by a [`Semantics`] implementation through [`evaluate`].

use std::fmt;

use crate::error::{Error, Result};
use crate::types::{Signature, SystemType};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Diagram {
    Generator { name: String, dom: SystemType, cod: SystemType },
    Identity(SystemType),
    /// The unique effect `T -> I`.
    Discard(SystemType),
    /// Wire exchange `A*B -> B*A`.
    Swap(SystemType, SystemType),
    Seq(Box<Diagram>, Box<Diagram>),
    Par(Box<Diagram>, Box<Diagram>),
}

impl Diagram {
    pub fn generator(name: impl Into<String>, dom: SystemType, cod: SystemType) -> Self {
        Diagram::Generator { name: name.into(), dom, cod }
    }

    /// A state `I -> ty`.
    pub fn state(name: impl Into<String>, ty: SystemType) -> Self {
        Diagram::generator(name, SystemType::unit(), ty)
    }

    pub fn identity(ty: SystemType) -> Self {
        Diagram::Identity(ty)
    }

    pub fn discard(ty: SystemType) -> Self {
        Diagram::Discard(ty)
    }

    pub fn swap(a: SystemType, b: SystemType) -> Self {
        Diagram::Swap(a, b)
    }

    /// Builds `g ; h` without checking the middle boundary.
    pub fn seq_unchecked(g: Diagram, h: Diagram) -> Self {
        Diagram::Seq(Box::new(g), Box::new(h))
    }

    pub fn dom(&self) -> SystemType {
        match self {
            Diagram::Generator { dom, .. } => dom.clone(),
            Diagram::Identity(t) | Diagram::Discard(t) => t.clone(),
            Diagram::Swap(a, b) => a.tensor(b),
            Diagram::Seq(g, _) => g.dom(),
            Diagram::Par(g, h) => g.dom().tensor(&h.dom()),
        }
    }

    pub fn cod(&self) -> SystemType {
        match self {
            Diagram::Generator { cod, .. } => cod.clone(),
            Diagram::Identity(t) => t.clone(),
            Diagram::Discard(_) => SystemType::unit(),
            Diagram::Swap(a, b) => b.tensor(a),
            Diagram::Seq(_, h) => h.cod(),
            Diagram::Par(g, h) => g.cod().tensor(&h.cod()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Diagram::Seq(g, h) | Diagram::Par(g, h) => 1 + g.size() + h.size(),
            _ => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Diagram::Seq(g, h) | Diagram::Par(g, h) => 1 + g.depth().max(h.depth()),
            _ => 1,
        }
    }

    /// Names of all generators referenced, in left-to-right order.
    pub fn generator_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Diagram::Generator { name, .. } => out.push(name),
            Diagram::Seq(g, h) | Diagram::Par(g, h) => {
                g.collect_names(out);
                h.collect_names(out);
            }
            _ => {}
        }
    }
}

/// Sequential composition `g ; h`.
pub fn seq_compose(g: Diagram, h: Diagram) -> Result<Diagram> {
    let (left, right) = (g.cod(), h.dom());
    if left != right {
        return Err(Error::TypeMismatch { left, right });
    }
    Ok(Diagram::seq_unchecked(g, h))
}

/// Parallel composition `g * h`; always well-typed.
pub fn par_compose(g: Diagram, h: Diagram) -> Diagram {
    Diagram::Par(Box::new(g), Box::new(h))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeReport {
    Ok { dom: SystemType, cod: SystemType },
    /// First (post-order, left to right) ill-typed `Seq` node. `path` lists
    /// the child indices from the root (0 = left, 1 = right).
    Mismatch { path: Vec<u8>, node: String, expected: SystemType, actual: SystemType },
}

impl TypeReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, TypeReport::Ok { .. })
    }
}

pub fn typecheck(d: &Diagram) -> TypeReport {
    fn walk(d: &Diagram, path: &mut Vec<u8>) -> Option<TypeReport> {
        match d {
            Diagram::Seq(g, h) | Diagram::Par(g, h) => {
                path.push(0);
                if let Some(r) = walk(g, path) {
                    return Some(r);
                }
                path.pop();
                path.push(1);
                if let Some(r) = walk(h, path) {
                    return Some(r);
                }
                path.pop();
                if let Diagram::Seq(g, h) = d {
                    let (expected, actual) = (g.cod(), h.dom());
                    if expected != actual {
                        return Some(TypeReport::Mismatch {
                            path: path.clone(),
                            node: d.to_string(),
                            expected,
                            actual,
                        });
                    }
                }
                None
            }
            _ => None,
        }
    }
    walk(d, &mut Vec::new()).unwrap_or_else(|| TypeReport::Ok { dom: d.dom(), cod: d.cod() })
}

/// Applies the identity and unit laws, drops `discard(I)`, merges adjacent
/// identities and right-nests `Par`. The result is the canonical form used
/// for structural equality.
pub fn normalize(d: &Diagram) -> Diagram {
    match d {
        Diagram::Discard(t) if t.is_unit() => Diagram::Identity(SystemType::unit()),
        Diagram::Seq(g, h) => {
            let (g, h) = (normalize(g), normalize(h));
            match (&g, &h) {
                (Diagram::Identity(_), _) => h,
                (_, Diagram::Identity(_)) => g,
                _ => Diagram::seq_unchecked(g, h),
            }
        }
        Diagram::Par(g, h) => {
            let (g, h) = (normalize(g), normalize(h));
            par_normalized(g, h)
        }
        other => other.clone(),
    }
}

// Both arguments are already normal.
fn par_normalized(g: Diagram, h: Diagram) -> Diagram {
    match (g, h) {
        (Diagram::Identity(t), x) | (x, Diagram::Identity(t)) if t.is_unit() => x,
        (Diagram::Par(a, b), c) => par_normalized(*a, par_normalized(*b, c)),
        (Diagram::Identity(a), Diagram::Identity(b)) => Diagram::Identity(a.tensor(&b)),
        (Diagram::Identity(a), Diagram::Par(b, c)) if matches!(*b, Diagram::Identity(_)) => {
            let Diagram::Identity(b) = *b else { unreachable!() };
            par_normalized(Diagram::Identity(a.tensor(&b)), *c)
        }
        (g, h) => par_compose(g, h),
    }
}

/// A backend: how to interpret every node of a diagram.
pub trait Semantics {
    type Map;

    fn generator(&self, name: &str, dom_dim: usize, cod_dim: usize) -> Result<Self::Map>;
    fn identity(&self, dim: usize) -> Self::Map;
    fn discard(&self, dim: usize) -> Self::Map;
    fn swap(&self, left: usize, right: usize) -> Self::Map;
    /// `first` then `second`.
    fn compose(&self, first: &Self::Map, second: &Self::Map) -> Result<Self::Map>;
    fn tensor(&self, left: &Self::Map, right: &Self::Map) -> Self::Map;
}

/// Evaluates a diagram bottom-up. The diagram must typecheck.
pub fn evaluate<S: Semantics>(d: &Diagram, sig: &Signature, sem: &S) -> Result<S::Map> {
    if let TypeReport::Mismatch { expected, actual, .. } = typecheck(d) {
        return Err(Error::TypeMismatch { left: expected, right: actual });
    }
    eval_node(d, sig, sem)
}

fn eval_node<S: Semantics>(d: &Diagram, sig: &Signature, sem: &S) -> Result<S::Map> {
    Ok(match d {
        Diagram::Generator { name, dom, cod } => sem.generator(name, sig.dim(dom)?, sig.dim(cod)?)?,
        Diagram::Identity(t) => sem.identity(sig.dim(t)?),
        Diagram::Discard(t) => sem.discard(sig.dim(t)?),
        Diagram::Swap(a, b) => sem.swap(sig.dim(a)?, sig.dim(b)?),
        Diagram::Seq(g, h) => sem.compose(&eval_node(g, sig, sem)?, &eval_node(h, sig, sem)?)?,
        Diagram::Par(g, h) => sem.tensor(&eval_node(g, sig, sem)?, &eval_node(h, sig, sem)?),
    })
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagram::Generator { name, .. } => f.write_str(name),
            Diagram::Identity(t) => write!(f, "id({t})"),
            Diagram::Discard(t) => write!(f, "discard({t})"),
            Diagram::Swap(a, b) => write!(f, "swap({a}, {b})"),
            // `*` binds tighter than `;`, both associate to the left.
            Diagram::Seq(g, h) => {
                write!(f, "{g} ; ")?;
                if matches!(**h, Diagram::Seq(..)) {
                    write!(f, "({h})")
                } else {
                    write!(f, "{h}")
                }
            }
            Diagram::Par(g, h) => {
                if matches!(**g, Diagram::Seq(..)) {
                    write!(f, "({g})")?;
                } else {
                    write!(f, "{g}")?;
                }
                f.write_str(" * ")?;
                if matches!(**h, Diagram::Seq(..) | Diagram::Par(..)) {
                    write!(f, "({h})")
                } else {
                    write!(f, "{h}")
                }
            }
        }
    }
}
