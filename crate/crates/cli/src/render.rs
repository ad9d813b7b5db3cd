//! Text formatting shared by the subcommands.

use quorum_risk::optimizer::format_percent;
use quorum_risk::report::nines;

/// Percentage with enough decimals to show two digits of the failure mass.
pub fn percent(p: f64) -> String {
    let decimals = nines(p).map_or(2, |k| (k as usize).saturating_sub(1).max(2));
    format_percent(p, decimals)
}

/// `0.999702 (99.97%, 3 nines)`.
pub fn probability(p: f64) -> String {
    match nines(p) {
        None => "1 (100%, certain)".to_string(),
        Some(k) => {
            let decimals = (k as usize + 3).max(6);
            let unit = if k == 1 { "nine" } else { "nines" };
            format!("{p:.decimals$} ({}, {k} {unit})", percent(p))
        }
    }
}

/// Column label for a probability: 0.01 -> "p1", 0.005 -> "p0.5".
pub fn p_label(p: f64) -> String {
    let s = format!("{:.6}", p * 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("p{s}")
}

pub fn csv_line<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = fields
        .into_iter()
        .map(|f| {
            let f = f.as_ref();
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    out
}

pub fn markdown_row<I, S>(cells: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
    format!("| {} |\n", cells.join(" | "))
}

pub fn markdown_header(cells: &[&str]) -> String {
    let mut out = markdown_row(cells);
    out.push_str(&markdown_row(cells.iter().map(|_| "---")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities() {
        assert_eq!(probability(0.999702), "0.999702 (99.97%, 3 nines)");
        assert_eq!(probability(1.0), "1 (100%, certain)");
        assert_eq!(probability(0.5), "0.500000 (50.00%, 0 nines)");
        assert_eq!(percent(0.9999901494), "99.9990%");
    }

    #[test]
    fn labels() {
        assert_eq!(p_label(0.01), "p1");
        assert_eq!(p_label(0.08), "p8");
        assert_eq!(p_label(0.07), "p7");
        assert_eq!(p_label(0.005), "p0.5");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_line(["a", "b,c"]), "a,\"b,c\"\n");
    }
}
