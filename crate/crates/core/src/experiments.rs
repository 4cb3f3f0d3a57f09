//! Parameter sweeps and seeded ensembles producing result tables.
//!
//! Rows are always emitted in grid / `(k, replicate)` order, independent of
//! how the work is scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::decomposition::{backbone_decomposition, full_decomposition, self_synergy};
use crate::error::{Error, Result};
use crate::generators::{correlated_and, correlated_bits, gibbs, member_seed, GibbsMode, GibbsSpec};
use crate::io::ResultTable;
use crate::lattice::SourceSet;
use crate::solver::synergy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Decomposition of the AND gate with correlated inputs.
    CorrelatedAnd,
    /// Self-synergy of two correlated bits over `(p, r)`.
    SelfDisclosure,
    /// `B^1` of random Gibbs systems with couplings up to order `k`.
    IsingB1,
    /// Backbone of random Gibbs systems with couplings of order exactly `k`.
    IsingBackbone,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::CorrelatedAnd,
        Experiment::SelfDisclosure,
        Experiment::IsingB1,
        Experiment::IsingBackbone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CorrelatedAnd => "correlated-and",
            Experiment::SelfDisclosure => "self-disclosure",
            Experiment::IsingB1 => "ising-b1",
            Experiment::IsingBackbone => "ising-backbone",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::input(format!("unknown experiment `{s}`")))
    }
}

/// Parses `key=value` pairs separated by commas.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::input(format!("expected key=value, got `{part}`")))?;
        if out.insert(k.trim().to_owned(), v.trim().to_owned()).is_some() {
            return Err(Error::input(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Typed access to parsed `key=value` parameters; leftovers are an error.
pub struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self { map }
    }

    pub fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::input(format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn take_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.map
            .remove(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::input(format!("bad value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::input(format!("unknown parameter `{k}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatedAndParams {
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
}

impl Default for CorrelatedAndParams {
    fn default() -> Self {
        Self {
            r_min: 0.0,
            r_max: 1.0,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelfDisclosureParams {
    /// `p` runs over `i / p_divisions` for `0 < i < p_divisions`.
    pub p_divisions: usize,
    /// `r` runs over the feasible `j / r_divisions`.
    pub r_divisions: usize,
}

impl Default for SelfDisclosureParams {
    fn default() -> Self {
        Self {
            p_divisions: 20,
            r_divisions: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsingParams {
    pub n: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub replicates: usize,
    pub beta: f64,
    pub coupling_std: f64,
}

impl Default for IsingParams {
    fn default() -> Self {
        Self {
            n: 4,
            k_min: 1,
            k_max: 4,
            replicates: 25,
            beta: 1.0,
            coupling_std: 0.1,
        }
    }
}

/// Grid `min, min + step, ...` up to `max` (inclusive within half a step).
fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) {
        return Err(Error::input("grid needs step > 0 and max >= min"));
    }
    let count = ((max - min) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| min + step * i as f64).collect())
}

pub fn correlated_and_sweep(params: &CorrelatedAndParams) -> Result<ResultTable> {
    let rs = grid(params.r_min, params.r_max, params.step)?;
    let rows = rs
        .par_iter()
        .map(|&r| {
            let d = correlated_and(r)?;
            let rep = full_decomposition(&d)?;
            let atom = |name: &str| rep.atom(name).expect("n = 2 lattice node");
            let empty = atom("{}");
            let frac = if rep.total > 1e-15 { empty / rep.total } else { 0.0 };
            Ok(vec![r, rep.total, empty, atom("{1}"), atom("{2}"), atom("{1}{2}"), frac])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ResultTable::new(["r", "mutual_info_bits", "atom_empty", "atom_1", "atom_2", "atom_1_2", "S∅_frac"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

pub fn self_disclosure_sweep(params: &SelfDisclosureParams) -> Result<ResultTable> {
    let (pd, rd) = (params.p_divisions, params.r_divisions);
    if pd < 2 || rd < 1 {
        return Err(Error::input("self-disclosure grid needs p_divisions >= 2 and r_divisions >= 1"));
    }
    let mut points = Vec::new();
    for i in 1..pd {
        let p = i as f64 / pd as f64;
        for j in 0..=rd {
            let r = j as f64 / rd as f64;
            // feasible overlap: max(0, 2p - 1) <= r <= p, compared in integers
            let (ri, pi) = (j * pd, i * rd);
            if ri <= pi && ri + pd * rd >= 2 * pi {
                points.push((p, r));
            }
        }
    }
    let alpha = SourceSet::parse("{1}{2}", 2)?;
    let rows = points
        .par_iter()
        .map(|&(p, r)| Ok(vec![p, r, self_synergy(&correlated_bits(p, r)?, &alpha)?]))
        .collect::<Result<Vec<_>>>()?;
    let mut t = ResultTable::new(["p", "r", "self_synergy_bits"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn ising_specs(params: &IsingParams, mode: GibbsMode, seed: u64) -> Result<Vec<(usize, usize, GibbsSpec)>> {
    if params.k_min == 0 || params.k_min > params.k_max || params.replicates == 0 {
        return Err(Error::input("need 1 <= k_min <= k_max and replicates >= 1"));
    }
    let mut out = Vec::new();
    for k in params.k_min..=params.k_max {
        for rep in 0..params.replicates {
            // the same replicate seed at every k: higher orders extend lower ones
            let spec = GibbsSpec {
                n: params.n,
                k,
                mode,
                beta: params.beta,
                coupling_std: params.coupling_std,
                seed: member_seed(seed, rep as u64),
            };
            out.push((k, rep, spec));
        }
    }
    Ok(out)
}

/// Rows `(k, replicate, I(X;Y), B^1)` for up-to-`k` Gibbs systems.
pub fn ising_b1_sweep(params: &IsingParams, seed: u64) -> Result<ResultTable> {
    let specs = ising_specs(params, GibbsMode::UpToK, seed)?;
    let gamma1 = SourceSet::uniform_level(params.n, 1)?;
    let rows = specs
        .par_iter()
        .map(|(k, rep, spec)| {
            let d = gibbs(spec)?;
            Ok(vec![*k as f64, *rep as f64, d.total_information(), synergy(&d, &gamma1)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ResultTable::new(["k", "replicate", "mutual_info_bits", "b1_bits"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Rows `(k, replicate, I(X;Y), B^0..B^n, B_∂^1..B_∂^n)` for only-`k` Gibbs systems.
pub fn ising_backbone_sweep(params: &IsingParams, seed: u64) -> Result<ResultTable> {
    let specs = ising_specs(params, GibbsMode::OnlyK, seed)?;
    let rows = specs
        .par_iter()
        .map(|(k, rep, spec)| {
            let d = gibbs(spec)?;
            let b = backbone_decomposition(&d)?;
            let mut row = vec![*k as f64, *rep as f64, b.total];
            row.extend(&b.cumulative);
            row.extend(&b.atoms);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = params.n;
    let mut cols = vec!["k".to_string(), "replicate".into(), "mutual_info_bits".into()];
    cols.extend((0..=n).map(|m| format!("b{m}_bits")));
    cols.extend((1..=n).map(|m| format!("atom{m}_bits")));
    let mut t = ResultTable::new(cols);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Mean and sample standard deviation of `value` grouped by `key`, in key order.
pub fn group_stats(table: &ResultTable, key: &str, value: &str) -> Option<Vec<(f64, f64, f64)>> {
    let keys = table.column(key)?;
    let values = table.column(value)?;
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (k, v) in keys.into_iter().zip(values) {
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, vs)) => vs.push(v),
            None => groups.push((k, vec![v])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(
        groups
            .into_iter()
            .map(|(k, vs)| {
                let n = vs.len() as f64;
                let mean = vs.iter().sum::<f64>() / n;
                let var = if vs.len() > 1 {
                    vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                (k, mean, var.sqrt())
            })
            .collect(),
    )
}

/// Runs an experiment from `key=value` parameters; returns the table and
/// the fully resolved parameters for metadata.
pub fn run_experiment(experiment: Experiment, params: BTreeMap<String, String>, seed: u64) -> Result<(ResultTable, Value)> {
    let mut p = Params::new(params);
    match experiment {
        Experiment::CorrelatedAnd => {
            let d = CorrelatedAndParams::default();
            let resolved = CorrelatedAndParams {
                r_min: p.take("r_min", d.r_min)?,
                r_max: p.take("r_max", d.r_max)?,
                step: p.take("step", d.step)?,
            };
            p.finish()?;
            Ok((correlated_and_sweep(&resolved)?, json!(resolved)))
        }
        Experiment::SelfDisclosure => {
            let d = SelfDisclosureParams::default();
            let resolved = SelfDisclosureParams {
                p_divisions: p.take("p_divisions", d.p_divisions)?,
                r_divisions: p.take("r_divisions", d.r_divisions)?,
            };
            p.finish()?;
            Ok((self_disclosure_sweep(&resolved)?, json!(resolved)))
        }
        Experiment::IsingB1 | Experiment::IsingBackbone => {
            let d = IsingParams::default();
            let resolved = IsingParams {
                n: p.take("n", d.n)?,
                k_min: p.take("k_min", d.k_min)?,
                k_max: p.take("k_max", d.k_max)?,
                replicates: p.take("replicates", d.replicates)?,
                beta: p.take("beta", d.beta)?,
                coupling_std: p.take("coupling_std", d.coupling_std)?,
            };
            p.finish()?;
            let table = if experiment == Experiment::IsingB1 {
                ising_b1_sweep(&resolved, seed)?
            } else {
                ising_backbone_sweep(&resolved, seed)?
            };
            Ok((table, json!(resolved)))
        }
    }
}
