//! CSV matrices and JSON documents.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed-point decimal with at least 12 significant digits.
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.12}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (12 - magnitude - 1).max(12) as usize;
    format!("{v:.decimals$}")
}

/// Values naming the contents of a matrix file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixHeader {
    pub kind: &'static str,
    pub mode: String,
    pub n: usize,
    pub step: u64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Row-major CSV: a `#` comment line describing the matrix, a header row of
/// target ids, then one row per observer.
pub fn matrix_csv<'a>(header: &MatrixHeader, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let opt = |v: Option<u64>| v.map_or_else(|| "na".to_owned(), |v| v.to_string());
    let mut out = format!(
        "# kind={} mode={} n={} d={} trials={} seed={}\n",
        header.kind,
        header.mode,
        header.n,
        header.step,
        opt(header.trials),
        opt(header.seed)
    );
    out.push_str("observer");
    for j in 1..=header.n {
        out.push_str(&format!(",{j}"));
    }
    out.push('\n');
    for (i, row) in rows.into_iter().enumerate() {
        out.push_str(&(i + 1).to_string());
        for &v in row {
            out.push(',');
            out.push_str(&format_decimal(v));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, D: Serialize> {
    schema_version: u32,
    kind: &'a str,
    config: &'a C,
    #[serde(flatten)]
    data: &'a D,
}

/// Pretty JSON wrapped with `schema_version`, `kind` and a config echo.
pub fn json_document<C: Serialize, D: Serialize>(kind: &str, config: &C, data: &D) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        config,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("documents serialize to JSON");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_keep_twelve_significant_digits() {
        assert_eq!(format_decimal(0.875), "0.875000000000");
        assert_eq!(format_decimal(1.0), "1.000000000000");
        assert_eq!(format_decimal(0.0), "0.000000000000");
        assert_eq!(format_decimal(1e-7), "0.000000100000000000");
        assert_eq!(format_decimal(0.971_752_475_1), "0.971752475100");
        let s = format_decimal(0.123_456_789_012_345);
        assert_eq!(s.trim_start_matches("0.").len(), 12);
    }

    #[test]
    fn csv_layout() {
        let header = MatrixHeader {
            kind: "analytic",
            mode: "synchronous".into(),
            n: 2,
            step: 3,
            trials: None,
            seed: Some(4),
        };
        let rows: Vec<&[f64]> = vec![&[0.0, 0.875], &[0.0, 0.875]];
        let csv = matrix_csv(&header, rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "# kind=analytic mode=synchronous n=2 d=3 trials=na seed=4"
        );
        assert_eq!(lines[1], "observer,1,2");
        assert_eq!(lines[2], "1,0.000000000000,0.875000000000");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn json_has_schema_version() {
        #[derive(Serialize)]
        struct D {
            x: u8,
        }
        let doc = json_document("test", &"cfg", &D { x: 1 });
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["kind"], "test");
        assert_eq!(v["x"], 1);
    }
}
