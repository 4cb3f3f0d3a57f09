//! JSON distribution files and CSV result tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decomposition::{BackboneReport, DecompositionReport};
use crate::error::{Error, Result};
use crate::prob::{SystemDistribution, SUM_TOLERANCE};

/// Sum tolerance for probabilities read from disk.
pub const FILE_SUM_TOLERANCE: f64 = 1e-9;

/// On-disk system distribution. `probs` is row-major over
/// `(X1, ..., Xn, Y)` with the target varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub source_alphabets: Vec<usize>,
    pub target_alphabet: usize,
    pub probs: Vec<f64>,
    /// Variable names, sources first and the target last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Provenance of generated files: generator, parameters, seed, PRNG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

impl DistributionFile {
    pub fn from_distribution(dist: &SystemDistribution) -> Self {
        Self {
            source_alphabets: dist.source_alphabets().to_vec(),
            target_alphabet: dist.target_alphabet(),
            probs: dist.probs().to_vec(),
            labels: None,
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, metadata: Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Validates and converts; sums off by more than 1e-12 (but within
    /// 1e-9) are renormalized, anything closer is taken verbatim.
    pub fn to_distribution(&self) -> Result<SystemDistribution> {
        if let Some(labels) = &self.labels {
            if labels.len() != self.source_alphabets.len() + 1 {
                return Err(Error::input(format!(
                    "{} labels given for {} variables",
                    labels.len(),
                    self.source_alphabets.len() + 1
                )));
            }
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() <= SUM_TOLERANCE {
            return SystemDistribution::new(self.source_alphabets.clone(), self.target_alphabet, self.probs.clone());
        }
        // validates entries and the looser file tolerance before renormalizing
        SystemDistribution::with_tolerance(
            self.source_alphabets.clone(),
            self.target_alphabet,
            self.probs.clone(),
            FILE_SUM_TOLERANCE,
        )?;
        SystemDistribution::renormalized(self.source_alphabets.clone(), self.target_alphabet, self.probs.clone())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("malformed distribution file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

pub fn read_distribution(path: &Path) -> Result<SystemDistribution> {
    DistributionFile::read(path)?.to_distribution()
}

/// Rows `node,cumulative_bits,atom_bits` and a final `total` row carrying
/// `I(X;Y)` and the atom sum.
pub fn write_decomposition_csv<W: Write>(report: &DecompositionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "cumulative_bits", "atom_bits"])?;
    for ((node, c), a) in report.nodes.iter().zip(&report.cumulative).zip(&report.atoms) {
        w.write_record([node.to_string(), c.to_string(), a.to_string()])?;
    }
    w.write_record(["total".to_string(), report.total.to_string(), report.atom_sum().to_string()])?;
    w.flush()?;
    Ok(())
}

/// Rows `level,node,cumulative_bits,atom_bits` for `m = 0..=n` (level 0 has
/// no atom and reports 0) and a final `total` row.
pub fn write_backbone_csv<W: Write>(report: &BackboneReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "node", "cumulative_bits", "atom_bits"])?;
    for (m, node) in report.levels.iter().enumerate() {
        let atom = if m == 0 { 0.0 } else { report.atom(m) };
        w.write_record([m.to_string(), node.to_string(), report.b(m).to_string(), atom.to_string()])?;
    }
    let atom_sum: f64 = report.atoms.iter().sum();
    w.write_record([
        "total".to_string(),
        String::new(),
        report.total.to_string(),
        atom_sum.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// A numeric table with named columns, used for sweeps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::internal(format!("non-finite value {bad} in result table")));
            }
            w.write_record(row.iter().map(f64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::input(format!("bad number `{f}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}
