//! Fleiss' kappa for a fixed number of raters per item.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};

/// Item-by-category rating counts. Every row sums to the same rater count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMatrix {
    categories: Vec<String>,
    rows: Vec<Vec<u64>>,
    raters: u64,
}

impl AgreementMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let categories = (0..width).map(|i| format!("c{i}")).collect();
        Self::with_categories(categories, rows)
    }

    pub fn with_categories(categories: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("agreement matrix has no items".into()));
        }
        if categories.len() < 2 {
            return Err(Error::InvalidArgument("agreement needs at least two categories".into()));
        }
        let raters: u64 = rows[0].iter().sum();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != categories.len() {
                return Err(Error::Validation(format!(
                    "item {i} has {} columns, expected {}",
                    row.len(),
                    categories.len()
                )));
            }
            let sum: u64 = row.iter().sum();
            if sum != raters {
                return Err(Error::Validation(format!(
                    "item {i} has {sum} ratings, expected {raters}"
                )));
            }
        }
        if raters < 2 {
            return Err(Error::InvalidArgument("agreement needs at least two raters".into()));
        }
        Ok(Self {
            categories,
            rows,
            raters,
        })
    }

    /// Tallies per-item label lists (one label per rater).
    pub fn from_labels<S: AsRef<str>>(items: &[Vec<S>]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for label in items.iter().flatten() {
            let next = index.len();
            index.entry(label.as_ref().to_string()).or_insert(next);
        }
        let mut categories = vec![String::new(); index.len()];
        for (name, i) in &index {
            categories[*i] = name.clone();
        }
        let rows = items
            .iter()
            .map(|labels| {
                let mut row = vec![0u64; categories.len()];
                for l in labels {
                    row[index[l.as_ref()]] += 1;
                }
                row
            })
            .collect();
        Self::with_categories(categories, rows)
    }

    /// One row per item, one integer column per category. A first row that
    /// is not all integers is taken as the header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut header = None;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(i + 1, e))?;
            let parsed: std::result::Result<Vec<u64>, _> = rec.iter().map(str::parse).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if i == 0 => header = Some(rec.iter().map(String::from).collect::<Vec<_>>()),
                Err(e) => return Err(Error::parse(i + 1, e)),
            }
        }
        match header {
            Some(h) => Self::with_categories(h, rows),
            None => Self::new(rows),
        }
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> u64 {
        self.raters
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// Mean per-item agreement: the share of rater pairs that agree.
    pub fn observed_agreement(&self) -> f64 {
        let n = self.raters as f64;
        let total: f64 = self
            .rows
            .iter()
            .map(|row| {
                let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
                (sq - n) / (n * (n - 1.0))
            })
            .sum();
        total / self.rows.len() as f64
    }

    /// Agreement expected from the pooled category proportions.
    pub fn expected_agreement(&self) -> f64 {
        let denom = self.rows.len() as f64 * self.raters as f64;
        (0..self.categories.len())
            .map(|j| {
                let p = self.rows.iter().map(|r| r[j]).sum::<u64>() as f64 / denom;
                p * p
            })
            .sum()
    }
}

/// Fleiss' kappa. When every rating falls into a single category the
/// statistic is 0/0; that case is perfect agreement and returns 1.
pub fn fleiss_kappa(m: &AgreementMatrix) -> f64 {
    let observed = m.observed_agreement();
    let expected = m.expected_agreement();
    if 1.0 - expected <= f64::EPSILON {
        return 1.0;
    }
    (observed - expected) / (1.0 - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let m = AgreementMatrix::new(vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]).unwrap();
        assert_eq!(fleiss_kappa(&m), 1.0);
        let single = AgreementMatrix::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&single), 1.0);
    }

    #[test]
    fn textbook_example() {
        // Fleiss (1971)-style worked example commonly used for checking:
        // 10 items, 14 raters, 5 categories, kappa ~= 0.210.
        let rows = vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ];
        let k = fleiss_kappa(&AgreementMatrix::new(rows).unwrap());
        assert!((k - 0.20993).abs() < 1e-4, "{k}");
    }

    #[test]
    fn inconsistent_rows_rejected() {
        let err = AgreementMatrix::new(vec![vec![2, 0], vec![1, 0]]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert!(AgreementMatrix::new(vec![]).is_err());
        assert!(AgreementMatrix::new(vec![vec![2]]).is_err());
        assert!(AgreementMatrix::new(vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let a = AgreementMatrix::from_csv("Org,Hum\n2,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!(a.categories(), ["Org", "Hum"]);
        let b = AgreementMatrix::from_csv("2,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert!(AgreementMatrix::from_csv("2,0\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn from_labels_tallies() {
        let m = AgreementMatrix::from_labels(&[vec!["Org", "Org"], vec!["Org", "Hum"]]).unwrap();
        assert_eq!(m.rows(), [vec![2, 0], vec![1, 1]]);
    }
}
