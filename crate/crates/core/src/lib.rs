pub mod asymptotics;
pub mod backend;
pub mod diagram;
pub mod error;
pub mod finstoch;
pub mod gen;
pub mod lp;
pub mod model;
pub mod quantum;
pub mod rational;
pub mod tasks;
pub mod types;

pub use error::{Error, Result};

pub use backend::{Backend, Channel, Distance, State};
pub use diagram::Diagram;
pub use model::{format_channel, parse, print, Model, ParseError};
pub use tasks::{Certificate, CertificateKind, Decision, Diagnostic, GateFamily, StateFamily, Verdict};
pub use types::{Signature, SystemType};
