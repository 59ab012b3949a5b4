//! Tabular report rendering: CSV (RFC-4180-style quoting), JSON (stable
//! key order, one object per row), and column-aligned markdown.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "md" | "markdown" => Some(Format::Markdown),
            _ => None,
        }
    }
}

/// A rendered value: either plain text or a JSON-native literal.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Number(f64),
    Integer(u64),
}

impl Cell {
    fn as_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Number(v) => format_float(*v),
            Cell::Integer(v) => v.to_string(),
        }
    }

    fn as_json(&self) -> String {
        match self {
            Cell::Text(s) => format!("{s:?}"),
            Cell::Number(v) => {
                if v.is_finite() {
                    format_float(*v)
                } else {
                    "null".into()
                }
            }
            Cell::Integer(v) => v.to_string(),
        }
    }
}

/// Deterministic rendering: scientific notation for small magnitudes,
/// shortest-roundtrip decimal otherwise.
fn format_float(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        return format!("{v:e}");
    }
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Markdown => self.to_markdown(),
        }
    }

    fn to_csv(&self) -> String {
        let quote = |s: &str| -> String {
            if s.contains(',') || s.contains('"') || s.contains('\n') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        out.push_str(
            &self
                .columns
                .iter()
                .map(|c| quote(c))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(
                &row.iter()
                    .map(|c| quote(&c.as_text()))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let mut out = String::from("[\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("  {");
            for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{col:?}: {}", cell.as_json()));
            }
            out.push('}');
            if i + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push(']');
        out
    }

    fn to_markdown(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|c| c.as_text()).collect())
            .collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        out.push('|');
        for (c, w) in self.columns.iter().zip(&widths) {
            out.push_str(&format!(" {c:<w$} |"));
        }
        out.push_str("\n|");
        for w in &widths {
            out.push_str(&format!("{}|", "-".repeat(w + 2)));
        }
        out.push('\n');
        for row in &rendered {
            out.push('|');
            for (cell, w) in row.iter().zip(&widths) {
                out.push_str(&format!(" {cell:<w$} |"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["rule", "value"]);
        t.push(vec![Cell::Text("gauss2".into()), Cell::Number(0.5)]);
        t.push(vec![Cell::Text("a,b".into()), Cell::Integer(42)]);
        t
    }

    #[test]
    fn csv_quotes_commas() {
        let csv = sample().render(Format::Csv);
        assert!(csv.contains("\"a,b\",42"));
        assert!(csv.starts_with("rule,value\n"));
    }

    #[test]
    fn json_preserves_column_order() {
        let json = sample().render(Format::Json);
        assert!(json.contains("\"rule\": \"gauss2\", \"value\": 0.5"));
    }

    #[test]
    fn markdown_is_aligned() {
        let md = sample().render(Format::Markdown);
        let lines: Vec<&str> = md.lines().collect();
        assert!(lines.iter().all(|l| l.starts_with('|')));
        assert_eq!(lines[0].len(), lines[2].len());
    }
}
