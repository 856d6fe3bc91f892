//! Graphviz export.

use std::fmt::Write;

use crate::qbaf::{ArgumentKind, Qbaf, Relation};
use crate::semantics::StrengthAssignment;

/// Renders `q` as a DOT digraph.
///
/// Nodes are labelled `id (base)`, or `id (base: strength)` when strengths are
/// supplied. Attack edges carry the label `-`, support edges `+`.
pub fn export_dot(q: &Qbaf, strengths: Option<&StrengthAssignment>) -> String {
    let mut out = String::from("digraph qbaf {\n  rankdir=LR;\n");
    for arg in q.arguments() {
        let base = q.base_score(&arg.id).map(format_score).unwrap_or_else(|| "?".into());
        let label = match strengths.and_then(|s| s.get(&arg.id)) {
            Some(s) => format!("{} ({}: {})", arg.id, base, format_score(s)),
            None => format!("{} ({})", arg.id, base),
        };
        let shape = match arg.kind {
            ArgumentKind::Text => "box",
            ArgumentKind::Aspect(_) => "ellipse",
            ArgumentKind::Decision => "doubleoctagon",
        };
        let _ = writeln!(out, "  {} [label={}, shape={}];", quote(arg.id.as_str()), quote(&label), shape);
    }
    for (from, to, rel) in q.relations() {
        let (label, color) = match rel {
            Relation::Attack => ("-", "red"),
            Relation::Support => ("+", "darkgreen"),
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\", color={}];",
            quote(from.as_str()),
            quote(to.as_str()),
            label,
            color
        );
    }
    out.push_str("}\n");
    out
}

/// Three decimals, trailing zeros trimmed: 0.504, 0.28, 0.5.
fn format_score(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map(|x| format!("{x}.0")).unwrap_or_else(|| s.to_string());
    s
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(0.504), "0.504");
        assert_eq!(format_score(0.28000000000000003), "0.28");
        assert_eq!(format_score(0.5), "0.5");
        assert_eq!(format_score(1.0), "1.0");
        assert_eq!(format_score(0.0), "0.0");
    }

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote(r#"a"b\c"#), r#""a\"b\\c""#);
    }

    #[test]
    fn single_argument_has_no_edges() {
        let q = Qbaf::builder().text("only", 0.3).build().unwrap();
        let dot = export_dot(&q, None);
        assert!(dot.contains("\"only\" [label=\"only (0.3)\""));
        assert!(!dot.contains("->"));
    }
}
