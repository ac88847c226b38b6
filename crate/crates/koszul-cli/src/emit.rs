//! Report output. JSON is an array of records with the fields `check`,
//! `status`, `witness`, `seed`, `window` and `millis`; text is a table with
//! one row per record and the witness on its own indented line.

use koszul_core::report::Report;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

pub fn emit(reports: &[Report], format: Format) -> String {
    match format {
        Format::Json => json(reports),
        Format::Text => text(reports),
    }
}

pub fn json(reports: &[Report]) -> String {
    if reports.is_empty() {
        return "[]\n".to_string();
    }
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

pub fn read_json(text: &str) -> Result<Vec<Report>, CliError> {
    Ok(serde_json::from_str(text)?)
}

pub fn text(reports: &[Report]) -> String {
    let width = reports
        .iter()
        .map(|r| r.check.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut out = format!(
        "{:<8} {:<width$} {:>6} {:>6} {:>8}\n",
        "status", "check", "seed", "window", "millis"
    );
    for r in reports {
        let status = serde_json::to_value(r.status).expect("status serializes");
        out += &format!(
            "{:<8} {:<width$} {:>6} {:>6} {:>8}\n",
            status.as_str().unwrap_or("?"),
            r.check,
            r.seed,
            r.window,
            r.millis
        );
        if let Some(w) = &r.witness {
            out += &format!("         {w}\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list() {
        assert_eq!(json(&[]), "[]\n");
        assert_eq!(text(&[]).lines().count(), 1);
    }

    #[test]
    fn json_round_trips() {
        let r = vec![
            Report::pass("a/b").with_seed(4).with_millis(12),
            Report::fail("a/c", "x1 vs -x1").with_window(3),
        ];
        assert_eq!(read_json(&json(&r)).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&json(&r)).unwrap();
        assert_eq!(v[0]["status"], "pass");
        assert_eq!(v[0]["witness"], serde_json::Value::Null);
        assert_eq!(v[1]["witness"], "x1 vs -x1");
    }

    #[test]
    fn text_shows_witness() {
        let t = text(&[Report::fail("ordpoiss/A/delta", "dx1 vs 0")]);
        assert!(t.contains("fail"));
        assert!(t.contains("    dx1 vs 0"));
    }
}
