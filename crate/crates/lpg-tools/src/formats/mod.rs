//! Line-oriented, versioned text formats for every artifact. All files
//! start with a `<kind> v<version>` header, carry the resolved run
//! configuration as `#` comment lines, and store reals in shortest
//! round-trip decimal form so serialize -> parse is exact.

pub mod candidates;
pub mod corpus;
pub mod manifest;
pub mod model;
pub mod priors;
pub mod report;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{file}:{line}: {message}")]
    Syntax {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {message}")]
    Semantic { file: String, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl FormatError {
    pub fn syntax(file: &str, line: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub fn semantic(file: &str, message: impl Into<String>) -> Self {
        FormatError::Semantic {
            file: file.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Content lines with their 1-based numbers; comments and blanks skipped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_f64(file: &str, line: usize, token: &str) -> Result<f64, FormatError> {
    token
        .parse::<f64>()
        .map_err(|_| FormatError::syntax(file, line, format!("expected a number, got `{token}`")))
}

pub(crate) fn parse_usize(file: &str, line: usize, token: &str) -> Result<usize, FormatError> {
    token
        .parse::<usize>()
        .map_err(|_| FormatError::syntax(file, line, format!("expected an integer, got `{token}`")))
}

pub(crate) fn parse_u32(file: &str, line: usize, token: &str) -> Result<u32, FormatError> {
    token
        .parse::<u32>()
        .map_err(|_| FormatError::syntax(file, line, format!("expected an id, got `{token}`")))
}

pub(crate) fn parse_u64(file: &str, line: usize, token: &str) -> Result<u64, FormatError> {
    token
        .parse::<u64>()
        .map_err(|_| FormatError::syntax(file, line, format!("expected a count, got `{token}`")))
}

/// Checks and consumes the `<kind> v1` header line.
pub(crate) fn expect_header<'a, I>(
    file: &str,
    lines: &mut I,
    kind: &str,
) -> Result<(), FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    match lines.next() {
        Some((_, l)) if l == format!("{kind} v1") => Ok(()),
        Some((n, l)) => Err(FormatError::syntax(
            file,
            n,
            format!("expected header `{kind} v1`, got `{l}`"),
        )),
        None => Err(FormatError::syntax(file, 1, "empty document")),
    }
}
