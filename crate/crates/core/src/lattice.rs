//! Source-sets, the constraint lattice and Möbius inversion over it.
//!
//! A source-set is an antichain of subsets of the `n` sources. Subsets are
//! stored as bitmasks (`bit i` = source `i`, zero-based). The bottom element
//! is `{∅}` and the top element is `{[n]}`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Bitmask over source indices.
pub type Mask = u32;

/// Default hard limit on `n` for full-lattice enumeration.
pub const DEFAULT_LATTICE_LIMIT: usize = 4;

/// Largest `n` representable by the mask type.
pub const MAX_SOURCES: usize = 31;

fn is_subset(a: Mask, b: Mask) -> bool {
    a & !b == 0
}

/// An antichain of source subsets, the constraint argument of the synergy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSet {
    n: usize,
    members: Vec<Mask>,
}

impl SourceSet {
    /// Keeps the maximal elements of `subsets` (zero-based indices). An empty
    /// collection yields the bottom `{∅}`.
    pub fn canonicalize<S: AsRef<[usize]>>(subsets: &[S], n: usize) -> Result<Self> {
        check_n(n)?;
        let mut masks = Vec::with_capacity(subsets.len());
        for s in subsets {
            let mut m: Mask = 0;
            for &i in s.as_ref() {
                if i >= n {
                    return Err(Error::Infeasible(format!("source index {} exceeds n = {n}", i + 1)));
                }
                m |= 1 << i;
            }
            masks.push(m);
        }
        Self::from_masks(n, masks)
    }

    /// Canonical source-set from raw masks.
    pub fn from_masks(n: usize, masks: impl IntoIterator<Item = Mask>) -> Result<Self> {
        check_n(n)?;
        let full = full_mask(n);
        let mut all: Vec<Mask> = masks.into_iter().collect();
        if let Some(bad) = all.iter().find(|&&m| m & !full != 0) {
            return Err(Error::Infeasible(format!("subset mask {bad:#b} exceeds n = {n}")));
        }
        all.sort_unstable();
        all.dedup();
        let mut members: Vec<Mask> = all
            .iter()
            .copied()
            .filter(|&a| !all.iter().any(|&b| b != a && is_subset(a, b)))
            .collect();
        if members.is_empty() {
            members.push(0);
        }
        Ok(Self { n, members })
    }

    pub fn bottom(n: usize) -> Self {
        Self { n, members: vec![0] }
    }

    pub fn top(n: usize) -> Self {
        Self {
            n,
            members: vec![full_mask(n)],
        }
    }

    /// The level-`m` backbone element: every subset of size `m`.
    pub fn uniform_level(n: usize, m: usize) -> Result<Self> {
        check_n(n)?;
        if m > n {
            return Err(Error::input(format!("level {m} exceeds n = {n}")));
        }
        let members: Vec<Mask> = (0..=full_mask(n))
            .filter(|s| s.count_ones() as usize == m)
            .collect();
        Ok(Self { n, members })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[Mask] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_bottom(&self) -> bool {
        self.members == [0]
    }

    pub fn is_top(&self) -> bool {
        self.members == [full_mask(self.n)]
    }

    /// Members as zero-based index lists.
    pub fn member_indices(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|&m| mask_indices(m)).collect()
    }

    /// The constraint order: every member of `self` lies inside some member of `other`.
    pub fn leq_c(&self, other: &SourceSet) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::input(format!(
                "source-sets over different systems (n = {} vs {})",
                self.n, other.n
            )));
        }
        Ok(self.leq_unchecked(other))
    }

    fn leq_unchecked(&self, other: &SourceSet) -> bool {
        self.members
            .iter()
            .all(|&a| other.members.iter().any(|&b| is_subset(a, b)))
    }

    /// Parses the brace notation, e.g. `{1}{2}`, `{12}{3}`, `{}` or `{1,10}{2}`.
    /// Indices are one-based. Syntax problems are input errors; indices beyond
    /// `n` are infeasibility errors.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let groups = parse_groups(text)?;
        let zero_based: Vec<Vec<usize>> = groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| i - 1).collect())
            .collect();
        Self::canonicalize(&zero_based, n)
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.n > 9 { "," } else { "" };
        for &m in &self.members {
            let body: Vec<String> = mask_indices(m).iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}", body.join(sep))?;
        }
        Ok(())
    }
}

fn parse_groups(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut groups = Vec::new();
    let mut rest = text.trim();
    if rest.is_empty() {
        return Err(Error::input("empty source-set specification"));
    }
    while !rest.is_empty() {
        let body_start = rest
            .strip_prefix('{')
            .ok_or_else(|| Error::input(format!("expected '{{' in source-set `{text}`")))?;
        let close = body_start
            .find('}')
            .ok_or_else(|| Error::input(format!("unterminated group in source-set `{text}`")))?;
        let body: String = body_start[..close].chars().filter(|c| !c.is_whitespace()).collect();
        let mut group = Vec::new();
        if body.contains(',') {
            for tok in body.split(',') {
                group.push(parse_index(tok, text)?);
            }
        } else {
            for ch in body.chars() {
                group.push(parse_index(&ch.to_string(), text)?);
            }
        }
        groups.push(group);
        rest = body_start[close + 1..].trim_start();
    }
    Ok(groups)
}

fn parse_index(tok: &str, text: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(Error::input(format!("bad source index `{tok}` in `{text}`"))),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SOURCES {
        return Err(Error::input(format!("number of sources must be in 1..={MAX_SOURCES}, got {n}")));
    }
    Ok(())
}

pub(crate) fn full_mask(n: usize) -> Mask {
    ((1u64 << n) - 1) as Mask
}

pub(crate) fn mask_indices(m: Mask) -> Vec<usize> {
    (0..32).filter(|i| m & (1 << i) != 0).collect()
}

/// All non-empty antichains of `2^[n]` ordered by the constraint order.
#[derive(Debug, Clone)]
pub struct ConstraintLattice {
    n: usize,
    nodes: Vec<SourceSet>,
    index: HashMap<SourceSet, usize>,
    /// `above[i]` lists nodes strictly above node `i`.
    above: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
}

impl ConstraintLattice {
    /// Enumerates the lattice with the default size limit.
    pub fn enumerate(n: usize) -> Result<Self> {
        Self::enumerate_with_limit(n, DEFAULT_LATTICE_LIMIT)
    }

    pub fn enumerate_with_limit(n: usize, limit: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("lattice needs at least one source"));
        }
        if n > limit || n > 6 {
            return Err(Error::Capacity(format!(
                "full lattice enumeration limited to n <= {}, got {n}",
                limit.min(6)
            )));
        }
        let subsets: Vec<Mask> = (0..=full_mask(n)).collect();
        let mut families = Vec::new();
        let mut current = Vec::new();
        grow_antichains(&subsets, 0, &mut current, &mut families);
        let mut nodes: Vec<SourceSet> = families
            .into_iter()
            .filter(|f| !f.is_empty())
            .map(|members| SourceSet { n, members })
            .collect();
        nodes.sort_by(|a, b| a.members.len().cmp(&b.members.len()).then(a.members.cmp(&b.members)));

        let above: Vec<Vec<usize>> = (0..nodes.len())
            .map(|i| {
                (0..nodes.len())
                    .filter(|&j| j != i && nodes[i].leq_unchecked(&nodes[j]))
                    .collect()
            })
            .collect();
        // A node strictly above another has strictly fewer nodes above it.
        let mut topo_order: Vec<usize> = (0..nodes.len()).collect();
        topo_order.sort_by_key(|&i| (above[i].len(), i));
        let index = nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self {
            n,
            nodes,
            index,
            above,
            topo_order,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[SourceSet] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, node: &SourceSet) -> Option<usize> {
        self.index.get(node).copied()
    }

    /// Nodes strictly above node `i`.
    pub fn strictly_above(&self, i: usize) -> &[usize] {
        &self.above[i]
    }

    /// Node indices ordered so each node precedes every node below it.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn bottom(&self) -> usize {
        self.index[&SourceSet::bottom(self.n)]
    }

    pub fn top(&self) -> usize {
        self.index[&SourceSet::top(self.n)]
    }

    /// Möbius inverse of node values: `atom(a) = value(a) - sum_{b > a} atom(b)`.
    /// `values` is aligned with [`ConstraintLattice::nodes`].
    pub fn mobius_atoms(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.nodes.len() {
            return Err(Error::input(format!(
                "expected {} node values, got {}",
                self.nodes.len(),
                values.len()
            )));
        }
        let mut atoms = vec![0.0; values.len()];
        for &i in &self.topo_order {
            let above: f64 = self.above[i].iter().map(|&j| atoms[j]).sum();
            atoms[i] = values[i] - above;
        }
        Ok(atoms)
    }

    /// Keyed variant of [`ConstraintLattice::mobius_atoms`].
    pub fn mobius_atoms_map(&self, values: &HashMap<SourceSet, f64>) -> Result<HashMap<SourceSet, f64>> {
        let aligned = self
            .nodes
            .iter()
            .map(|s| {
                values
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::input(format!("missing value for node {s}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let atoms = self.mobius_atoms(&aligned)?;
        Ok(self.nodes.iter().cloned().zip(atoms).collect())
    }

    /// Cumulative values `value(a) = sum_{b >= a} atom(b)`.
    pub fn accumulate(&self, atoms: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|i| atoms[i] + self.above[i].iter().map(|&j| atoms[j]).sum::<f64>())
            .collect()
    }
}

fn grow_antichains(subsets: &[Mask], start: usize, current: &mut Vec<Mask>, out: &mut Vec<Vec<Mask>>) {
    out.push(current.clone());
    for k in start..subsets.len() {
        let s = subsets[k];
        if current.iter().any(|&c| is_subset(c, s) || is_subset(s, c)) {
            continue;
        }
        current.push(s);
        grow_antichains(subsets, k + 1, current, out);
        current.pop();
    }
}

/// The totally ordered chain `γ_0 ⪯ γ_1 ⪯ ... ⪯ γ_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneChain {
    n: usize,
    levels: Vec<SourceSet>,
}

impl BackboneChain {
    pub fn new(n: usize) -> Result<Self> {
        let levels = (0..=n).map(|m| SourceSet::uniform_level(n, m)).collect::<Result<_>>()?;
        Ok(Self { n, levels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[SourceSet] {
        &self.levels
    }

    pub fn level(&self, m: usize) -> &SourceSet {
        &self.levels[m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ss(text: &str, n: usize) -> SourceSet {
        SourceSet::parse(text, n).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        let a = SourceSet::canonicalize(&[vec![0], vec![0, 1]], 2).unwrap();
        assert_eq!(a, SourceSet::canonicalize(&[vec![0, 1]], 2).unwrap());
        assert_eq!(a.to_string(), "{12}");
        let b = SourceSet::canonicalize(&[vec![0], vec![1]], 2).unwrap();
        assert_eq!(b.to_string(), "{1}{2}");
        let c = SourceSet::canonicalize(&[vec![], vec![0]], 2).unwrap();
        assert_eq!(c.to_string(), "{1}");
        let empty: [Vec<usize>; 0] = [];
        assert!(SourceSet::canonicalize(&empty, 3).unwrap().is_bottom());
    }

    #[test]
    fn canonicalize_rejects_out_of_range() {
        assert!(matches!(
            SourceSet::canonicalize(&[vec![2]], 2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn leq_c_examples() {
        let bottom = SourceSet::bottom(2);
        for node in ConstraintLattice::enumerate(2).unwrap().nodes() {
            assert!(bottom.leq_c(node).unwrap());
        }
        assert!(ss("{1}", 2).leq_c(&ss("{1}{2}", 2)).unwrap());
        assert!(!ss("{1}{2}", 2).leq_c(&ss("{1}", 2)).unwrap());
        assert!(!ss("{12}", 2).leq_c(&ss("{1}{2}", 2)).unwrap());
        assert!(ss("{1}", 2).leq_c(&ss("{1}", 3)).is_err());
    }

    #[test]
    fn lattice_sizes() {
        let l1 = ConstraintLattice::enumerate(1).unwrap();
        let names: Vec<String> = l1.nodes().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, vec!["{}", "{1}"]);
        let l2 = ConstraintLattice::enumerate(2).unwrap();
        let mut names: Vec<String> = l2.nodes().iter().map(|s| s.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["{12}", "{1}", "{1}{2}", "{2}", "{}"]);
        assert_eq!(ConstraintLattice::enumerate(3).unwrap().len(), 19);
        assert_eq!(ConstraintLattice::enumerate(4).unwrap().len(), 167);
        assert!(matches!(ConstraintLattice::enumerate(5), Err(Error::Capacity(_))));
        assert_eq!(ConstraintLattice::enumerate_with_limit(5, 5).unwrap().len(), 7580);
    }

    #[test]
    fn lattice_has_unique_top_and_bottom() {
        for n in 1..=4 {
            let l = ConstraintLattice::enumerate(n).unwrap();
            let bottom = l.bottom();
            let top = l.top();
            assert_eq!(l.strictly_above(bottom).len(), l.len() - 1);
            assert!(l.strictly_above(top).is_empty());
            assert_eq!(l.topo_order()[0], top);
            assert_eq!(*l.topo_order().last().unwrap(), bottom);
        }
    }

    #[test]
    fn topo_order_respects_order() {
        let l = ConstraintLattice::enumerate(3).unwrap();
        let pos: HashMap<usize, usize> = l.topo_order().iter().enumerate().map(|(p, &i)| (i, p)).collect();
        for i in 0..l.len() {
            for &j in l.strictly_above(i) {
                assert!(pos[&j] < pos[&i]);
            }
        }
    }

    #[test]
    fn mobius_examples() {
        let l = ConstraintLattice::enumerate(2).unwrap();
        assert!(l.mobius_atoms(&[0.0; 5]).unwrap().iter().all(|&a| a == 0.0));
        let at = |atoms: &[f64], name: &str| atoms[l.index_of(&ss(name, 2)).unwrap()];

        let values = |v: [(&str, f64); 5]| {
            let mut out = vec![f64::NAN; 5];
            for (name, x) in v {
                out[l.index_of(&ss(name, 2)).unwrap()] = x;
            }
            out
        };
        let xor = values([("{}", 1.0), ("{1}", 1.0), ("{2}", 1.0), ("{1}{2}", 1.0), ("{12}", 0.0)]);
        let atoms = l.mobius_atoms(&xor).unwrap();
        assert!((at(&atoms, "{1}{2}") - 1.0).abs() < 1e-12);
        for name in ["{}", "{1}", "{2}", "{12}"] {
            assert!(at(&atoms, name).abs() < 1e-12);
        }

        let s = 0.3113;
        let and = values([("{}", 0.8113), ("{1}", s), ("{2}", s), ("{1}{2}", s), ("{12}", 0.0)]);
        let atoms = l.mobius_atoms(&and).unwrap();
        assert!((at(&atoms, "{}") - 0.5).abs() < 1e-12);
        assert!((at(&atoms, "{1}{2}") - s).abs() < 1e-12);
        assert!(at(&atoms, "{1}").abs() < 1e-12);
        assert!(at(&atoms, "{2}").abs() < 1e-12);
    }

    #[test]
    fn mobius_rejects_missing_nodes() {
        let l = ConstraintLattice::enumerate(2).unwrap();
        assert!(l.mobius_atoms(&[0.0; 4]).is_err());
        let mut partial = HashMap::new();
        partial.insert(SourceSet::bottom(2), 1.0);
        assert!(matches!(l.mobius_atoms_map(&partial), Err(Error::Input(_))));
    }

    #[test]
    fn backbone_examples() {
        let b3 = BackboneChain::new(3).unwrap();
        assert_eq!(b3.level(2), &SourceSet::canonicalize(&[vec![0, 1], vec![1, 2], vec![0, 2]], 3).unwrap());
        assert_eq!(BackboneChain::new(2).unwrap().level(1).to_string(), "{1}{2}");
        let b1 = BackboneChain::new(1).unwrap();
        assert!(b1.level(0).is_bottom());
        assert_eq!(b1.level(1).to_string(), "{1}");
        for w in b3.levels().windows(2) {
            assert!(w[0].leq_c(&w[1]).unwrap());
        }
    }

    #[test]
    fn naming_round_trip() {
        for n in 1..=4 {
            for node in ConstraintLattice::enumerate(n).unwrap().nodes() {
                assert_eq!(&SourceSet::parse(&node.to_string(), n).unwrap(), node);
            }
        }
        let wide = SourceSet::canonicalize(&[vec![0, 9], vec![1]], 10).unwrap();
        assert_eq!(wide.to_string(), "{2}{1,10}");
        assert_eq!(SourceSet::parse("{2}{1,10}", 10).unwrap(), wide);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(SourceSet::parse("1}{2}", 2), Err(Error::Input(_))));
        assert!(matches!(SourceSet::parse("{1", 2), Err(Error::Input(_))));
        assert!(matches!(SourceSet::parse("{a}", 2), Err(Error::Input(_))));
        assert!(matches!(SourceSet::parse("{3}", 2), Err(Error::Infeasible(_))));
        assert!(SourceSet::parse(" { 1 } { 2 } ", 2).unwrap().to_string() == "{1}{2}");
    }
}
