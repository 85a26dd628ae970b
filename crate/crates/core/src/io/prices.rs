use std::path::Path;

use crate::market::PriceTrajectory;

use super::IoError;

/// Reads a trajectory from a CSV with header `k,P_1,...,P_L`, one row per interval.
pub fn load_price_csv(path: &Path, step: f64) -> Result<PriceTrajectory, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_price_csv(&text, step).map_err(|message| IoError::PriceCsv {
        path: path.display().to_string(),
        message,
    })
}

/// Parses price CSV text; rows are taken in file order.
pub fn parse_price_csv(text: &str, step: f64) -> Result<PriceTrajectory, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err("empty file".into());
    }
    let width = header.len();
    if width < 2 || &header[0] != "k" {
        return Err(format!(
            "header must read k,P_1,...,P_L, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        ));
    }
    for (a, name) in header.iter().enumerate().skip(1) {
        if name != format!("P_{a}") {
            return Err(format!("column {} is `{name}`, expected `P_{a}`", a + 1));
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(format!("line {line}: {} fields, header has {width}", record.len()));
        }
        record[0].parse::<u64>().map_err(|_| {
            format!(
                "line {line}: interval label `{}` is not a nonnegative integer",
                &record[0]
            )
        })?;
        let row = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(a, cell)| {
                cell.parse::<u32>()
                    .map_err(|_| format!("line {line}: P_{} = `{cell}` is not a nonnegative integer price", a + 1))
            })
            .collect::<Result<Vec<u32>, String>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no price rows".into());
    }
    PriceTrajectory::new(step, rows).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_in_order() {
        let t = parse_price_csv("k,P_1\n0,1\n1,3\n2,2\n", 0.5).unwrap();
        assert_eq!(t.n_intervals(), 3);
        assert_eq!(t.rows(), &[vec![1], vec![3], vec![2]]);
        let c = parse_price_csv("k,P_1,P_2\n0,4,1\n", 1.0).unwrap();
        assert!(c.is_constant());
        assert_eq!(c.n_share_types(), 2);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(parse_price_csv("", 1.0).is_err());
        assert!(parse_price_csv("k,P_1\n", 1.0).unwrap_err().contains("no price rows"));
        assert!(parse_price_csv("k,P_1\n0,1.5\n", 1.0).unwrap_err().contains("1.5"));
        assert!(parse_price_csv("k,P_1\n0,-1\n", 1.0).is_err());
        assert!(parse_price_csv("k,P_1,P_2\n0,1\n", 1.0).unwrap_err().contains("line 2"));
        assert!(parse_price_csv("t,P_1\n0,1\n", 1.0).is_err());
        assert!(parse_price_csv("k,P_1\n0,1\n", 0.0).is_err());
    }
}
