//! CSV conventions shared by every artifact: one `# schema:` comment line,
//! a header row, comma separation, LF endings, 17 significant digits.

use crate::error::{Error, Result};

/// Versioned schema line written as the first row of each CSV kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaTag {
    Coefficients,
    Trajectory,
    Compare,
    Summary,
}

impl SchemaTag {
    pub fn line(self) -> &'static str {
        match self {
            SchemaTag::Coefficients => "# schema: hqsd.coefficients/1",
            SchemaTag::Trajectory => "# schema: hqsd.trajectory/1",
            SchemaTag::Compare => "# schema: hqsd.compare/1",
            SchemaTag::Summary => "# schema: hqsd.summary/1",
        }
    }
}

/// Shortest-unambiguous is not enough for bit-stable output across
/// platforms; always print 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Parses a numeric CSV written by this crate.
pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut schema = None;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                schema = Some(rest.trim().trim_start_matches("schema:").trim().to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match &header {
            None => header = Some(line.split(',').map(str::to_string).collect()),
            Some(h) => {
                let row = line
                    .split(',')
                    .map(|v| {
                        v.parse::<f64>().map_err(|_| {
                            Error::invalid(format!("line {}: cannot parse {v:?} as a number", lineno + 1))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if row.len() != h.len() {
                    return Err(Error::invalid(format!(
                        "line {}: expected {} fields, found {}",
                        lineno + 1,
                        h.len(),
                        row.len()
                    )));
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or_else(|| Error::invalid("CSV has no header row"))?;
    Ok(CsvTable { schema, header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -1.5, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, std::f64::consts::PI] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let t = parse_csv("# schema: hqsd.compare/1\nt,d\n0.0e0,1.5e0\n1.0e0,2.0e0\n").unwrap();
        assert_eq!(t.schema.as_deref(), Some("hqsd.compare/1"));
        assert_eq!(t.column("d").unwrap(), vec![1.5, 2.0]);
        assert!(parse_csv("t,d\n1,2,3\n").is_err());
        assert!(parse_csv("t,d\n1,x\n").is_err());
        assert!(parse_csv("").is_err());
    }
}
