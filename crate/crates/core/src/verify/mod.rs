//! Static size-change verification by symbolic execution.
//!
//! The entry function is run on symbolic arguments drawn from its `assume`
//! declaration. Non-recursive calls are inlined; a call to a `λ` already
//! active on the path becomes a recursive call site, contributing one
//! size-change graph derived from the path condition. The graphs of each
//! target are then checked for the size-change property.

mod explore;
mod sym;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::json;

use crate::expr::Program;
use crate::scgraph::{scp_holds, SCGraph, Scp};
use crate::value::Label;

use explore::{sort_shape, Explorer};
use sym::Shape;

pub use sym::{entails_order, Atom, PathCond, Prop, Sort, SymValue};

/// Abstract states allowed per `λ` before widening.
pub const DEFAULT_FUEL: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSite {
    pub target: Label,
    pub caller: Label,
    /// Symbolic arguments of the call.
    pub args: Vec<String>,
    /// Path condition at the call.
    pub path: Vec<String>,
    pub graph: SCGraph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    Fuel,
    Unsupported(String),
    /// A violating graph misses an arc the entailment check could not decide.
    EntailmentGap,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::Fuel => f.write_str("fuel exhausted"),
            UnknownReason::Unsupported(why) => write!(f, "unsupported feature: {why}"),
            UnknownReason::EntailmentGap => f.write_str("entailment gap"),
        }
    }
}

impl UnknownReason {
    pub fn code(&self) -> &'static str {
        match self {
            UnknownReason::Fuel => "fuel",
            UnknownReason::Unsupported(_) => "unsupported-feature",
            UnknownReason::EntailmentGap => "entailment-gap",
        }
    }
}

pub type TargetGraphs = BTreeMap<Label, BTreeSet<SCGraph>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Refuted { witness: SCGraph, call_site: CallSite },
    Unknown(UnknownReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyResult {
    pub verdict: Verdict,
    /// Graphs per recursive target; empty when exploration did not finish.
    pub graphs: TargetGraphs,
    pub sites: Vec<CallSite>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("no global named {0}")]
    UnknownEntry(String),
    #[error("{0} is not a function")]
    NotAFunction(String),
}

impl VerifyResult {
    pub fn name(&self) -> &'static str {
        match self.verdict {
            Verdict::Verified => "verified",
            Verdict::Refuted { .. } => "refuted",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }

    pub fn witness(&self) -> Option<&SCGraph> {
        match &self.verdict {
            Verdict::Refuted { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let graphs: Vec<_> = self
            .graphs
            .iter()
            .map(|(t, gs)| json!({"target": t.as_str(), "graphs": gs}))
            .collect();
        let (witness, site, reason) = match &self.verdict {
            Verdict::Verified => (json!(null), json!(null), json!(null)),
            Verdict::Refuted { witness, call_site } => (
                json!(witness),
                json!({
                    "target": call_site.target.as_str(),
                    "caller": call_site.caller.as_str(),
                    "args": call_site.args,
                    "path": call_site.path,
                    "graph": call_site.graph,
                }),
                json!(null),
            ),
            Verdict::Unknown(r) => (json!(null), json!(null), json!(r.code())),
        };
        json!({
            "result": self.name(),
            "graphs": graphs,
            "witness": witness,
            "call_site": site,
            "reason": reason,
        })
    }
}

impl fmt::Display for VerifyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            Verdict::Verified => writeln!(f, "verified")?,
            Verdict::Refuted { witness, call_site } => {
                writeln!(f, "refuted: {{{witness}}}")?;
                writeln!(
                    f,
                    "  at call to {} from {} with ({})",
                    call_site.target,
                    call_site.caller,
                    call_site.args.join(" ")
                )?;
                if !call_site.path.is_empty() {
                    writeln!(f, "  when {}", call_site.path.join(" ∧ "))?;
                }
            }
            Verdict::Unknown(r) => writeln!(f, "unknown: {r}")?,
        }
        for (t, gs) in &self.graphs {
            writeln!(f, "{t}:")?;
            for g in gs {
                writeln!(f, "  {{{g}}}")?;
            }
        }
        Ok(())
    }
}

/// Recursive call sites found by exploring an entry function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymEval {
    pub sites: Vec<CallSite>,
    /// Per site: a missing arc relates terms the entailment rules could not
    /// decide.
    pub gaps: Vec<bool>,
    /// Why exploration stopped early; the sites are then partial.
    pub incomplete: Option<UnknownReason>,
}

impl SymEval {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_none()
    }

    pub fn graphs(&self) -> TargetGraphs {
        let mut graphs = TargetGraphs::new();
        for s in &self.sites {
            graphs
                .entry(s.target.clone())
                .or_default()
                .insert(s.graph.clone());
        }
        graphs
    }
}

/// Explores `entry` on arguments drawn from its `assume` declaration.
pub fn sym_eval(p: &Program, entry: &str, fuel: usize) -> Result<SymEval, VerifyError> {
    let index = p
        .globals
        .iter()
        .position(|g| g.name.as_ref() == entry)
        .ok_or_else(|| VerifyError::UnknownEntry(entry.to_owned()))?;
    let stopped = |reason: UnknownReason| SymEval {
        sites: Vec::new(),
        gaps: Vec::new(),
        incomplete: Some(reason),
    };
    let mut ex = Explorer::new(p, fuel);
    let clo = match ex.global(index) {
        Ok(SymValue::Closure(c)) => c,
        Ok(_) => return Err(VerifyError::NotAFunction(entry.to_owned())),
        Err(a) => return Ok(stopped(a.into())),
    };
    let shapes: Vec<Shape> = match p.assumptions.iter().find(|a| a.function.as_ref() == entry) {
        Some(a) if a.params.len() == clo.lambda.arity() => {
            a.params.iter().map(|(_, s)| sort_shape(*s)).collect()
        }
        _ => vec![Shape::Any; clo.lambda.arity()],
    };
    Ok(match ex.explore(&clo, &shapes) {
        Ok(e) => SymEval {
            sites: e.sites,
            gaps: e.gaps,
            incomplete: None,
        },
        Err(a) => stopped(a.into()),
    })
}

pub fn verify_termination(
    p: &Program,
    entry: &str,
    fuel: usize,
) -> Result<VerifyResult, VerifyError> {
    let found = sym_eval(p, entry, fuel)?;
    if let Some(reason) = found.incomplete {
        return Ok(VerifyResult {
            verdict: Verdict::Unknown(reason),
            graphs: TargetGraphs::new(),
            sites: Vec::new(),
        });
    }
    let graphs = found.graphs();
    let SymEval { sites, gaps, .. } = found;
    let mut verdict = Verdict::Verified;
    for (target, gs) in &graphs {
        let Scp::Violated(w) = scp_holds(gs).expect("graphs of one target share an arity") else {
            continue;
        };
        let own: Vec<usize> = (0..sites.len())
            .filter(|&i| &sites[i].target == target)
            .collect();
        if own.iter().any(|&i| gaps[i]) {
            verdict = Verdict::Unknown(UnknownReason::EntailmentGap);
            continue;
        }
        let pick = own
            .iter()
            .find(|&&i| sites[i].graph == w)
            .or_else(|| own.iter().find(|&&i| !sites[i].graph.is_descending()))
            .or(own.first())
            .copied()
            .expect("a violated target has call sites");
        verdict = Verdict::Refuted {
            witness: w,
            call_site: sites[pick].clone(),
        };
        break;
    }
    Ok(VerifyResult {
        verdict,
        graphs,
        sites,
    })
}
