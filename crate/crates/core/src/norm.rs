//! Sequence-space norms behind a common trait, selected by name at run time.
//!
//! Every registered norm must be 1-unconditional with a normalized canonical
//! basis: shrinking coefficient moduli never increases the value and each
//! basis vector has norm one. Everything downstream (weight bounds, witness
//! estimates, interval certificates) relies on those two properties, and the
//! block-profile backward shift has norm one for every norm in the registry.
//!
//! `NormSpec` is the serializable description that travels in plan files;
//! [`NormRegistry`] maps names like `lp` and `sup` to constructors so the CLI
//! string `lp:2` or a deserialized spec resolves to a live trait object.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaled::ScaledReal;

/// Serializable norm description: `{"kind":"lp","p":2.0}` or `{"kind":"sup"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormSpec {
    Lp { p: f64 },
    Sup,
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(NormSpec::Lp { p })
        } else {
            Err(Error::InvalidNorm(format!("lp exponent must be a finite value >= 1, got {p}")))
        }
    }

    pub fn sup() -> Self {
        NormSpec::Sup
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Lp { p } if !(p.is_finite() && *p >= 1.0) => Err(Error::InvalidNorm(
                format!("lp exponent must be a finite value >= 1, got {p}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_l1(&self) -> bool {
        matches!(self, NormSpec::Lp { p } if *p == 1.0)
    }

    pub fn label(&self) -> String {
        match self {
            NormSpec::Lp { p } => format!("lp:{p}"),
            NormSpec::Sup => "sup".to_string(),
        }
    }

    pub fn resolve(&self) -> Result<Arc<dyn SequenceNorm>> {
        registry().resolve(self)
    }
}

/// A 1-unconditional norm on finitely supported coefficient profiles.
pub trait SequenceNorm: fmt::Debug + Send + Sync {
    /// Registry name of the family this instance belongs to.
    fn name(&self) -> &'static str;

    /// Serializable description of this instance.
    fn spec(&self) -> NormSpec;

    /// Norm of a finite profile of coefficient moduli (all entries >= 0).
    fn eval_moduli(&self, moduli: &[ScaledReal]) -> ScaledReal;

    /// Convenience for plain-precision profiles.
    fn eval_f64(&self, moduli: &[f64]) -> f64 {
        let scaled: Vec<ScaledReal> = moduli.iter().map(|&x| ScaledReal::from_f64(x)).collect();
        self.eval_moduli(&scaled).to_f64()
    }
}

/// `(sum |x_i|^p)^(1/p)` for `p >= 1`.
#[derive(Debug, Clone)]
pub struct LpNorm {
    p: f64,
}

impl LpNorm {
    pub fn new(p: f64) -> Result<Self> {
        NormSpec::lp(p)?;
        Ok(LpNorm { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl SequenceNorm for LpNorm {
    fn name(&self) -> &'static str {
        "lp"
    }

    fn spec(&self) -> NormSpec {
        NormSpec::Lp { p: self.p }
    }

    fn eval_moduli(&self, moduli: &[ScaledReal]) -> ScaledReal {
        let mut acc = ScaledReal::ZERO;
        if self.p == 1.0 {
            for m in moduli {
                acc = acc.add(*m);
            }
            return acc;
        }
        for m in moduli {
            acc = acc.add(m.powf(self.p));
        }
        acc.powf(1.0 / self.p)
    }
}

/// `max |x_i|`: the sup norm of a finitely supported c0 profile.
#[derive(Debug, Clone, Default)]
pub struct SupNorm;

impl SequenceNorm for SupNorm {
    fn name(&self) -> &'static str {
        "sup"
    }

    fn spec(&self) -> NormSpec {
        NormSpec::Sup
    }

    fn eval_moduli(&self, moduli: &[ScaledReal]) -> ScaledReal {
        moduli
            .iter()
            .fold(ScaledReal::ZERO, |acc, m| acc.max_value(*m))
    }
}

type ParseFn = fn(Option<&str>) -> Result<Arc<dyn SequenceNorm>>;
type FromSpecFn = fn(&NormSpec) -> Option<Arc<dyn SequenceNorm>>;

/// How one norm family plugs into the registry.
pub struct NormEntry {
    pub parse: ParseFn,
    pub from_spec: FromSpecFn,
}

/// Name-keyed registry of norm families.
pub struct NormRegistry {
    entries: BTreeMap<&'static str, NormEntry>,
}

impl NormRegistry {
    pub fn empty() -> Self {
        NormRegistry { entries: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("lp", NormEntry { parse: parse_lp, from_spec: lp_from_spec });
        reg.register("sup", NormEntry { parse: parse_sup, from_spec: sup_from_spec });
        reg
    }

    pub fn register(&mut self, name: &'static str, entry: NormEntry) {
        self.entries.insert(name, entry);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    /// Resolve a CLI-style selector such as `lp:2` or `sup`.
    pub fn parse(&self, text: &str) -> Result<Arc<dyn SequenceNorm>> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let entry = self.entries.get(name).ok_or_else(|| {
            Error::InvalidNorm(format!(
                "unknown norm '{name}' (known: {})",
                self.names().join(", ")
            ))
        })?;
        (entry.parse)(arg)
    }

    pub fn resolve(&self, spec: &NormSpec) -> Result<Arc<dyn SequenceNorm>> {
        spec.validate()?;
        for entry in self.entries.values() {
            if let Some(norm) = (entry.from_spec)(spec) {
                return Ok(norm);
            }
        }
        Err(Error::InvalidNorm(format!("no registered norm handles {}", spec.label())))
    }
}

fn parse_lp(arg: Option<&str>) -> Result<Arc<dyn SequenceNorm>> {
    let text = arg.ok_or_else(|| {
        Error::InvalidNorm("lp needs an exponent, e.g. lp:2".to_string())
    })?;
    let p: f64 = text
        .parse()
        .map_err(|_| Error::InvalidNorm(format!("cannot parse lp exponent '{text}'")))?;
    Ok(Arc::new(LpNorm::new(p)?))
}

fn lp_from_spec(spec: &NormSpec) -> Option<Arc<dyn SequenceNorm>> {
    match spec {
        NormSpec::Lp { p } => Some(Arc::new(LpNorm { p: *p })),
        _ => None,
    }
}

fn parse_sup(arg: Option<&str>) -> Result<Arc<dyn SequenceNorm>> {
    if arg.is_some() {
        return Err(Error::InvalidNorm("sup takes no argument".to_string()));
    }
    Ok(Arc::new(SupNorm))
}

fn sup_from_spec(spec: &NormSpec) -> Option<Arc<dyn SequenceNorm>> {
    match spec {
        NormSpec::Sup => Some(Arc::new(SupNorm)),
        _ => None,
    }
}

/// The process-wide registry with the built-in families.
pub fn registry() -> &'static NormRegistry {
    static REG: OnceLock<NormRegistry> = OnceLock::new();
    REG.get_or_init(NormRegistry::with_builtins)
}
