//! The example programs shipped in `corpus/`, with their expected behavior.

use crate::expr::Program;
use crate::reader::{load_program, load_with_main, LoadError};

/// How a corpus program behaves under whole-program monitoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    /// Terminates, and monitoring accepts every call sequence.
    Terminates,
    /// Runs forever under the standard semantics.
    Diverges,
    /// Terminates, but monitoring rejects it.
    Rejected,
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusProgram {
    pub name: &'static str,
    /// File stem; also the label source.
    pub file: &'static str,
    pub text: &'static str,
    /// Replacement for the file's top-level expressions.
    pub main: Option<&'static str>,
    pub expect: Expect,
}

impl CorpusProgram {
    pub fn load(&self) -> Result<Program, LoadError> {
        match self.main {
            Some(main) => load_with_main(self.file, self.text, main),
            None => load_program(self.file, self.text),
        }
    }
}

macro_rules! source {
    ($file:literal) => {
        ($file, include_str!(concat!("../../../corpus/", $file, ".sct")))
    };
}

pub const ACK: (&str, &str) = source!("ack");
pub const ACK_BUGGY: (&str, &str) = source!("ack-buggy");
pub const ASCEND: (&str, &str) = source!("ascend-then-stop");
pub const FACT: (&str, &str) = source!("fact");
pub const FIG2: (&str, &str) = source!("fig2");
pub const HO_ACK: (&str, &str) = source!("ho-sc-ack");
pub const ID: (&str, &str) = source!("id");
pub const INTERP: (&str, &str) = source!("interp");
pub const LEN_CPS: (&str, &str) = source!("len-cps");
pub const MSORT: (&str, &str) = source!("msort");
pub const NFA: (&str, &str) = source!("nfa");
pub const OMEGA: (&str, &str) = source!("omega");
pub const REV: (&str, &str) = source!("rev");
pub const SUM: (&str, &str) = source!("sum");

const fn entry(
    name: &'static str,
    src: (&'static str, &'static str),
    main: Option<&'static str>,
    expect: Expect,
) -> CorpusProgram {
    CorpusProgram {
        name,
        file: src.0,
        text: src.1,
        main,
        expect,
    }
}

const PROGRAMS: &[CorpusProgram] = &[
    entry("ack", ACK, None, Expect::Terminates),
    entry("len-cps", LEN_CPS, None, Expect::Terminates),
    entry("fig2-c1", FIG2, Some("(c1 (hash))"), Expect::Terminates),
    entry("fact", FACT, None, Expect::Terminates),
    entry("sum", SUM, None, Expect::Terminates),
    entry("msort", MSORT, None, Expect::Terminates),
    entry("id", ID, None, Expect::Terminates),
    entry("rev", REV, None, Expect::Terminates),
    entry("ho-sc-ack", HO_ACK, None, Expect::Terminates),
    entry("nfa", NFA, None, Expect::Terminates),
    entry("interp-msort", INTERP, None, Expect::Terminates),
    entry("omega", OMEGA, None, Expect::Diverges),
    entry("ack-buggy", ACK_BUGGY, None, Expect::Diverges),
    entry("fig2-c2", FIG2, None, Expect::Diverges),
    entry("interp-omega", INTERP, Some("(run '() omega-term)"), Expect::Diverges),
    entry("nfa-c", NFA, Some("(state1 \"cab\")"), Expect::Diverges),
    entry("ascend-then-stop", ASCEND, None, Expect::Rejected),
];

pub fn programs() -> &'static [CorpusProgram] {
    PROGRAMS
}

pub fn find(name: &str) -> Option<&'static CorpusProgram> {
    PROGRAMS.iter().find(|p| p.name == name)
}

pub fn with_expect(expect: Expect) -> impl Iterator<Item = &'static CorpusProgram> {
    PROGRAMS.iter().filter(move |p| p.expect == expect)
}
