//! Concrete syntax: s-expression reading, elaboration to core syntax, and
//! value printing.

pub mod desugar;
pub mod print;
pub mod sexp;

use std::path::Path;

pub use desugar::{desugar, DesugarError};
pub use print::print_value;
pub use sexp::{read_program, Form, FormKind, ParseError};

use crate::expr::Program;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
}

/// Reads and elaborates program text. `source` names the program in labels.
pub fn load_program(source: &str, text: &str) -> Result<Program, LoadError> {
    let forms = read_program(text)?;
    Ok(desugar(source, &forms)?)
}

/// Like [`load_program`], but the top-level expressions of `text` are
/// replaced by those of `main`. Definitions keep their source positions.
pub fn load_with_main(source: &str, text: &str, main: &str) -> Result<Program, LoadError> {
    let own = read_program(text)?.len();
    let forms = read_program(&format!("{text}\n{main}"))?;
    let forms: Vec<Form> = forms
        .into_iter()
        .enumerate()
        .filter(|(i, f)| *i >= own || matches!(f.head(), Some("define" | "assume")))
        .map(|(_, f)| f)
        .collect();
    Ok(desugar(source, &forms)?)
}

/// File stem used as the label source for a path, e.g. `ack` for `corpus/ack.sct`.
pub fn source_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_owned())
}
