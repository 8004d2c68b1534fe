//! Parsing for the small auxiliary input files the CLI accepts.

/// Parses a matrix file: one integer row per line, whitespace separated,
/// `#` starts a comment, blank lines are skipped. Row lengths are not
/// validated here; the caller checks them against the network.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<i64>>, String> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| format!("line {}: bad integer {token:?}", idx + 1))?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}
