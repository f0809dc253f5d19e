//! The prior-dictionary file: category vocabulary, then one record per
//! ordered category pair. Layout:
//!
//! ```text
//! lpg-priors v1
//! corpus <corpus_id>
//! categories <name> ...
//! pair <subject_category> <object_category> contain_so <n> contain_os <n>
//! zoom_out [<factor> ...]
//! zoom_in [<factor> ...]
//! ```

use super::{content_lines, expect_header, parse_f64, parse_u64, parse_usize, FormatError};
use lpg_core::priors::{PairStats, PriorDictionary};
use std::fmt::Write as _;
use std::path::Path;

pub fn read_priors(path: &Path) -> Result<PriorDictionary, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_priors(&text, &path.display().to_string())
}

pub fn write_priors(
    path: &Path,
    priors: &PriorDictionary,
    config_echo: &str,
) -> Result<(), FormatError> {
    std::fs::write(path, render_priors(priors, config_echo)).map_err(|e| FormatError::io(path, e))
}

/// Parses and re-fits the Gaussian summaries (they are derived data and
/// are never stored).
pub fn parse_priors(text: &str, file: &str) -> Result<PriorDictionary, FormatError> {
    let mut lines = content_lines(text).peekable();
    expect_header(file, &mut lines, "lpg-priors")?;

    let corpus_id = match lines.next() {
        Some((_, l)) if l.starts_with("corpus") => {
            l.strip_prefix("corpus").unwrap().trim().to_string()
        }
        Some((n, l)) => {
            return Err(FormatError::syntax(
                file,
                n,
                format!("expected `corpus ...`, got `{l}`"),
            ))
        }
        None => return Err(FormatError::syntax(file, 0, "missing `corpus`")),
    };
    let categories: Vec<String> = match lines.next() {
        Some((_, "categories")) => Vec::new(),
        Some((_, l)) if l.starts_with("categories ") => l
            .split_whitespace()
            .skip(1)
            .map(|s| s.to_string())
            .collect(),
        Some((n, l)) => {
            return Err(FormatError::syntax(
                file,
                n,
                format!("expected `categories ...`, got `{l}`"),
            ))
        }
        None => return Err(FormatError::syntax(file, 0, "missing `categories`")),
    };
    let mut dict = PriorDictionary::new(categories, corpus_id);

    while let Some((n, line)) = lines.next() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 7 || tokens[0] != "pair" || tokens[3] != "contain_so"
            || tokens[5] != "contain_os"
        {
            return Err(FormatError::syntax(
                file,
                n,
                format!("expected `pair <s> <o> contain_so <n> contain_os <n>`, got `{line}`"),
            ));
        }
        let subj = parse_usize(file, n, tokens[1])?;
        let obj = parse_usize(file, n, tokens[2])?;
        let contain_so = parse_u64(file, n, tokens[4])?;
        let contain_os = parse_u64(file, n, tokens[6])?;
        let zoom_out = parse_factor_line(file, &mut lines, "zoom_out")?;
        let zoom_in = parse_factor_line(file, &mut lines, "zoom_in")?;
        dict.insert_entry(
            subj,
            obj,
            PairStats::from_parts(contain_so, contain_os, zoom_out, zoom_in),
        )
        .map_err(|e| FormatError::semantic(file, e.to_string()))?;
    }
    dict.fit_gaussians();
    Ok(dict)
}

pub fn render_priors(priors: &PriorDictionary, config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-priors v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "corpus {}", priors.corpus_id());
    let _ = writeln!(s, "categories {}", priors.categories().join(" "));
    for (&(subj, obj), stats) in priors.entries() {
        let _ = writeln!(
            s,
            "pair {} {} contain_so {} contain_os {}",
            subj, obj, stats.contain_count_so, stats.contain_count_os
        );
        s.push_str("zoom_out");
        for f in &stats.zoom_out_factors {
            let _ = write!(s, " {f}");
        }
        s.push('\n');
        s.push_str("zoom_in");
        for f in &stats.zoom_in_factors {
            let _ = write!(s, " {f}");
        }
        s.push('\n');
    }
    s
}

fn parse_factor_line<'a, I>(
    file: &str,
    lines: &mut I,
    keyword: &str,
) -> Result<Vec<f64>, FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    match lines.next() {
        Some((n, l)) if l == keyword || l.starts_with(&format!("{keyword} ")) => l
            .split_whitespace()
            .skip(1)
            .map(|t| parse_f64(file, n, t))
            .collect(),
        Some((n, l)) => Err(FormatError::syntax(
            file,
            n,
            format!("expected `{keyword} ...`, got `{l}`"),
        )),
        None => Err(FormatError::syntax(file, 0, format!("missing `{keyword}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PriorDictionary {
        let mut d = PriorDictionary::new(vec!["man".into(), "hat".into()], "demo".into());
        d.insert_entry(0, 1, PairStats::from_parts(5, 0, vec![], vec![]))
            .unwrap();
        d.insert_entry(
            1,
            0,
            PairStats::from_parts(0, 5, vec![0.5, 0.25], vec![1.416, 1.423, 2.428]),
        )
        .unwrap();
        d.fit_gaussians();
        d
    }

    #[test]
    fn round_trip_reproduces_counts_and_factors() {
        let d = sample();
        let rendered = render_priors(&d, "# seed = 0\n");
        let parsed = parse_priors(&rendered, "mem").unwrap();
        assert_eq!(parsed.corpus_id(), "demo");
        assert_eq!(parsed.len(), 2);
        let e = parsed.entry(1, 0).unwrap();
        assert_eq!(e.contain_count_os, 5);
        assert_eq!(e.zoom_out_factors, vec![0.5, 0.25]);
        assert_eq!(e.zoom_in_factors, vec![1.416, 1.423, 2.428]);
        assert!(parsed.is_fitted());
        // summaries are re-derived, not read back stale
        let summary = e.zoom_in_summary().unwrap();
        assert_eq!(summary.max, 2.428);
        assert_eq!(rendered, render_priors(&parsed, "# seed = 0\n"));
    }

    #[test]
    fn empty_dictionary_round_trips() {
        let mut d = PriorDictionary::new(vec![], "empty".into());
        d.fit_gaussians();
        let rendered = render_priors(&d, "");
        let parsed = parse_priors(&rendered, "mem").unwrap();
        assert_eq!(parsed.len(), 0);
    }

    #[test]
    fn malformed_pair_line_reports_position() {
        let doc = "lpg-priors v1\ncorpus x\ncategories a b\npair 0 1 contain_so five contain_os 0\nzoom_out\nzoom_in\n";
        let err = parse_priors(doc, "mem").unwrap_err().to_string();
        assert!(err.starts_with("mem:4:"), "{err}");
    }

    #[test]
    fn out_of_range_category_rejected() {
        let doc = "lpg-priors v1\ncorpus x\ncategories a b\npair 0 9 contain_so 1 contain_os 0\nzoom_out\nzoom_in\n";
        assert!(parse_priors(doc, "mem").is_err());
    }

    #[test]
    fn full_precision_factors_survive() {
        let mut d = PriorDictionary::new(vec!["a".into(), "b".into()], "p".into());
        let f = 1.0 + 2f64.powi(-45);
        d.insert_entry(0, 1, PairStats::from_parts(0, 0, vec![], vec![f]))
            .unwrap();
        d.fit_gaussians();
        let parsed = parse_priors(&render_priors(&d, ""), "mem").unwrap();
        assert_eq!(parsed.entry(0, 1).unwrap().zoom_in_factors[0].to_bits(), f.to_bits());
    }
}
