//! Finite discrete joint distributions and Shannon quantities in bits.
//!
//! A [`SystemDistribution`] stores `p(x_1, ..., x_n, y)` as a flat row-major
//! tensor in which the target `Y` is the fastest-varying index, followed by
//! `X_n`, then `X_{n-1}`, and so on. Source tuples are encoded the same way
//! (row-major over `X_1..X_n`, `X_1` slowest), so flat index
//! `x * |Y| + y` addresses `p(x, y)`.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Tolerance on `sum(p) == 1` for in-memory construction.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Column-sum tolerance for channels.
pub const CHANNEL_TOLERANCE: f64 = 1e-10;

/// A variable of a [`SystemDistribution`]: one of the sources or the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Zero-based source index.
    Source(usize),
    Target,
}

impl Var {
    /// The source variables whose bits are set in `mask`, in index order.
    pub fn sources_in(mask: u32) -> Vec<Var> {
        (0..32)
            .filter(|i| mask & (1 << i) != 0)
            .map(Var::Source)
            .collect()
    }

    /// All sources `0..n`.
    pub fn all_sources(n: usize) -> Vec<Var> {
        (0..n).map(Var::Source).collect()
    }
}

/// A probability vector over a single (possibly product) alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
}

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_pmf(&values, SUM_TOLERANCE)?;
        Ok(Self { values })
    }

    /// Rescales non-negative weights to sum to one.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::input("weights sum to zero"));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            values: vec![1.0 / k as f64; k],
        }
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

fn check_pmf(values: &[f64], tol: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::input("probability vector is empty"));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::input(format!("entry {i} = {v} is not a probability")));
        }
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::input(format!(
            "probabilities sum to {total}, expected 1 within {tol:e}"
        )));
    }
    Ok(())
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    entropy_bits(p.values())
}

/// Entropy of raw non-negative weights assumed to sum to one.
pub fn entropy_bits(values: &[f64]) -> f64 {
    let h: f64 = values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// Indices with probability strictly above `eps`.
pub fn support(p: &ProbVector, eps: f64) -> Vec<usize> {
    p.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > eps)
        .map(|(i, _)| i)
        .collect()
}

/// Joint pmf over `n` source variables and one target.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDistribution {
    source_alphabets: Vec<usize>,
    target_alphabet: usize,
    probs: Vec<f64>,
}

impl SystemDistribution {
    pub fn new(source_alphabets: Vec<usize>, target_alphabet: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(source_alphabets, target_alphabet, probs, SUM_TOLERANCE)
    }

    /// Like [`SystemDistribution::new`] with a custom sum tolerance.
    pub fn with_tolerance(
        source_alphabets: Vec<usize>,
        target_alphabet: usize,
        probs: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        check_shape(&source_alphabets, target_alphabet, probs.len())?;
        check_pmf(&probs, tol)?;
        Ok(Self {
            source_alphabets,
            target_alphabet,
            probs,
        })
    }

    /// Builds a distribution from non-negative weights by explicit renormalization.
    pub fn renormalized(source_alphabets: Vec<usize>, target_alphabet: usize, weights: Vec<f64>) -> Result<Self> {
        check_shape(&source_alphabets, target_alphabet, weights.len())?;
        let p = ProbVector::normalized(weights)?;
        Ok(Self {
            source_alphabets,
            target_alphabet,
            probs: p.into_inner(),
        })
    }

    /// Builds `p(x, y) = p(x) p(y|x)` from a source pmf and one conditional
    /// row per source tuple.
    pub fn from_source_and_channel(
        source_alphabets: Vec<usize>,
        p_x: &[f64],
        target_alphabet: usize,
        p_y_given_x: &[Vec<f64>],
    ) -> Result<Self> {
        let states: usize = source_alphabets.iter().product();
        if p_x.len() != states || p_y_given_x.len() != states {
            return Err(Error::input("source pmf / channel length does not match alphabets"));
        }
        let mut probs = Vec::with_capacity(states * target_alphabet);
        for (px, row) in p_x.iter().zip(p_y_given_x) {
            if row.len() != target_alphabet {
                return Err(Error::input("channel row has wrong target alphabet size"));
            }
            probs.extend(row.iter().map(|q| px * q));
        }
        Self::new(source_alphabets, target_alphabet, probs)
    }

    pub fn n_sources(&self) -> usize {
        self.source_alphabets.len()
    }

    pub fn source_alphabets(&self) -> &[usize] {
        &self.source_alphabets
    }

    pub fn target_alphabet(&self) -> usize {
        self.target_alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of joint source states `prod |X_i|`.
    pub fn source_states(&self) -> usize {
        self.source_alphabets.iter().product()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.target_alphabet + y]
    }

    /// `p(x)` over flat source tuples.
    pub fn source_marginal(&self) -> ProbVector {
        let ny = self.target_alphabet;
        ProbVector::from_raw(self.probs.chunks(ny).map(|c| c.iter().sum()).collect())
    }

    pub fn target_marginal(&self) -> ProbVector {
        let ny = self.target_alphabet;
        let mut out = vec![0.0; ny];
        for chunk in self.probs.chunks(ny) {
            for (o, p) in out.iter_mut().zip(chunk) {
                *o += p;
            }
        }
        ProbVector::from_raw(out)
    }

    /// `p(y | x)`; `None` when `p(x) = 0`.
    pub fn target_given_source(&self, x: usize) -> Option<Vec<f64>> {
        let ny = self.target_alphabet;
        let row = &self.probs[x * ny..(x + 1) * ny];
        let px: f64 = row.iter().sum();
        (px > 0.0).then(|| row.iter().map(|p| p / px).collect())
    }

    /// Decodes a flat source index into per-source symbols.
    pub fn decode_source(&self, mut x: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_sources()];
        for (slot, &k) in out.iter_mut().zip(&self.source_alphabets).rev() {
            *slot = x % k;
            x /= k;
        }
        out
    }

    pub fn encode_source(&self, symbols: &[usize]) -> usize {
        symbols
            .iter()
            .zip(&self.source_alphabets)
            .fold(0, |acc, (&s, &k)| acc * k + s)
    }

    fn dims(&self) -> Vec<usize> {
        let mut d = self.source_alphabets.clone();
        d.push(self.target_alphabet);
        d
    }

    fn axis(&self, v: Var) -> Result<usize> {
        match v {
            Var::Source(i) if i < self.n_sources() => Ok(i),
            Var::Source(i) => Err(Error::input(format!(
                "source index {i} out of range for {} sources",
                self.n_sources()
            ))),
            Var::Target => Ok(self.n_sources()),
        }
    }

    /// Exact marginal over `vars`, laid out row-major in the given order.
    /// The empty set yields the constant distribution `(1.0)`.
    pub fn marginal(&self, vars: &[Var]) -> Result<ProbVector> {
        let dims = self.dims();
        let mut axes = Vec::with_capacity(vars.len());
        let mut seen = HashSet::new();
        for &v in vars {
            let a = self.axis(v)?;
            if !seen.insert(a) {
                return Err(Error::input(format!("variable {v:?} listed twice")));
            }
            axes.push(a);
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let out_dims: Vec<usize> = axes.iter().map(|&a| dims[a]).collect();
        let mut out_strides = vec![1usize; axes.len()];
        for i in (0..axes.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_dims[i + 1];
        }
        let mut out = vec![0.0; out_dims.iter().product()];
        for (f, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx: usize = axes
                .iter()
                .zip(&out_strides)
                .map(|(&a, &s)| ((f / strides[a]) % dims[a]) * s)
                .sum();
            out[idx] += p;
        }
        Ok(ProbVector::from_raw(out))
    }

    pub fn entropy_of(&self, vars: &[Var]) -> Result<f64> {
        Ok(entropy(&self.marginal(vars)?))
    }

    /// `I(A; B)` in bits.
    pub fn mutual_information(&self, a: &[Var], b: &[Var]) -> Result<f64> {
        disjoint(&[a, b])?;
        let ab: Vec<Var> = a.iter().chain(b).copied().collect();
        let mi = self.entropy_of(a)? + self.entropy_of(b)? - self.entropy_of(&ab)?;
        Ok(mi.max(0.0))
    }

    /// `I(A; B | C)` in bits.
    pub fn conditional_mutual_information(&self, a: &[Var], b: &[Var], c: &[Var]) -> Result<f64> {
        disjoint(&[a, b, c])?;
        let ac: Vec<Var> = a.iter().chain(c).copied().collect();
        let bc: Vec<Var> = b.iter().chain(c).copied().collect();
        let abc: Vec<Var> = a.iter().chain(b).chain(c).copied().collect();
        let cmi = self.entropy_of(&ac)? + self.entropy_of(&bc)? - self.entropy_of(&abc)? - self.entropy_of(c)?;
        Ok(cmi.max(0.0))
    }

    /// `I(X; Y)` with all sources on one side.
    pub fn total_information(&self) -> f64 {
        let hx = entropy(&self.source_marginal());
        let hy = entropy(&self.target_marginal());
        let hxy = entropy_bits(&self.probs);
        (hx + hy - hxy).max(0.0)
    }

    /// Passes the target through a channel `p(z | y)` given as one row per `y`.
    pub fn garble_target(&self, channel: &[Vec<f64>]) -> Result<Self> {
        if channel.len() != self.target_alphabet {
            return Err(Error::input("garbling channel must have one row per target symbol"));
        }
        let nz = channel.first().map_or(0, Vec::len);
        if nz == 0 || channel.iter().any(|r| r.len() != nz) {
            return Err(Error::input("garbling channel rows must share a non-empty output alphabet"));
        }
        let mut probs = vec![0.0; self.source_states() * nz];
        for x in 0..self.source_states() {
            for (y, row) in channel.iter().enumerate() {
                let p = self.prob(x, y);
                for (z, q) in row.iter().enumerate() {
                    probs[x * nz + z] += p * q;
                }
            }
        }
        Self::renormalized(self.source_alphabets.clone(), nz, probs)
    }

    /// Reorders sources so that new source `j` is old source `perm[j]`.
    pub fn permute_sources(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_sources();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::input("not a permutation of the sources"));
        }
        let new_alphabets: Vec<usize> = perm.iter().map(|&i| self.source_alphabets[i]).collect();
        let ny = self.target_alphabet;
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.source_states() {
            let old = self.decode_source(x);
            let new_sym: Vec<usize> = perm.iter().map(|&i| old[i]).collect();
            let nx = new_sym.iter().zip(&new_alphabets).fold(0, |acc, (&s, &k)| acc * k + s);
            probs[nx * ny..(nx + 1) * ny].copy_from_slice(&self.probs[x * ny..(x + 1) * ny]);
        }
        Ok(Self {
            source_alphabets: new_alphabets,
            target_alphabet: ny,
            probs,
        })
    }

    /// Appends a new last source `Z` with the given pmf, independent of everything else.
    pub fn append_independent_source(&self, p_z: &ProbVector) -> Self {
        let ny = self.target_alphabet;
        let nz = p_z.len();
        let mut probs = Vec::with_capacity(self.probs.len() * nz);
        for x in 0..self.source_states() {
            for &pz in p_z.values() {
                probs.extend(self.probs[x * ny..(x + 1) * ny].iter().map(|p| p * pz));
            }
        }
        let mut alphabets = self.source_alphabets.clone();
        alphabets.push(nz);
        Self {
            source_alphabets: alphabets,
            target_alphabet: ny,
            probs,
        }
    }

    /// A sources-only distribution, stored with a single-symbol target.
    pub fn sources_only(source_alphabets: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        Self::new(source_alphabets, 1, probs)
    }
}

fn check_shape(source_alphabets: &[usize], target_alphabet: usize, len: usize) -> Result<()> {
    if source_alphabets.is_empty() {
        return Err(Error::input("at least one source variable is required"));
    }
    if source_alphabets.contains(&0) || target_alphabet == 0 {
        return Err(Error::input("alphabet cardinalities must be at least 1"));
    }
    let expected = source_alphabets
        .iter()
        .try_fold(target_alphabet, |acc, &k| acc.checked_mul(k))
        .ok_or_else(|| Error::input("alphabet product overflows"))?;
    if expected != len {
        return Err(Error::input(format!(
            "probability table has {len} entries, alphabets require {expected}"
        )));
    }
    Ok(())
}

fn disjoint(sets: &[&[Var]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        for v in *set {
            if !seen.insert(*v) {
                return Err(Error::input(format!("variable sets overlap at {v:?}")));
            }
        }
    }
    Ok(())
}

/// A stochastic map `p(v | x)` defined on a set of source tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input_support: Vec<usize>,
    columns: Vec<Vec<f64>>,
    output_alphabet: usize,
}

impl Channel {
    /// `columns[i][v] = p(v | input_support[i])`.
    pub fn new(input_support: Vec<usize>, columns: Vec<Vec<f64>>, output_alphabet: usize) -> Result<Self> {
        if input_support.len() != columns.len() {
            return Err(Error::input("one column is required per supported input"));
        }
        let unique: HashSet<_> = input_support.iter().collect();
        if unique.len() != input_support.len() {
            return Err(Error::input("duplicate input in channel support"));
        }
        for (x, col) in input_support.iter().zip(&columns) {
            if col.len() != output_alphabet {
                return Err(Error::input(format!("column for input {x} has wrong length")));
            }
            if col.iter().any(|&p| !p.is_finite() || p < -CHANNEL_TOLERANCE) {
                return Err(Error::input(format!("column for input {x} has a negative entry")));
            }
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > CHANNEL_TOLERANCE {
                return Err(Error::input(format!("column for input {x} sums to {s}")));
            }
        }
        Ok(Self {
            input_support,
            columns,
            output_alphabet,
        })
    }

    /// Deterministic channel `v = outputs[i]` on `input_support[i]`.
    pub fn deterministic(input_support: Vec<usize>, outputs: &[usize], output_alphabet: usize) -> Result<Self> {
        let columns = outputs
            .iter()
            .map(|&v| {
                let mut col = vec![0.0; output_alphabet];
                col[v] = 1.0;
                col
            })
            .collect();
        Self::new(input_support, columns, output_alphabet)
    }

    pub fn input_support(&self) -> &[usize] {
        &self.input_support
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn output_alphabet(&self) -> usize {
        self.output_alphabet
    }

    pub fn column_for(&self, x: usize) -> Option<&[f64]> {
        self.input_support
            .iter()
            .position(|&s| s == x)
            .map(|i| self.columns[i].as_slice())
    }

    /// Dense `p(v | x)` over all `total_inputs` tuples; inputs outside the
    /// support get the uniform column.
    pub fn full_columns(&self, total_inputs: usize) -> Vec<Vec<f64>> {
        let uniform = vec![1.0 / self.output_alphabet as f64; self.output_alphabet];
        (0..total_inputs)
            .map(|x| self.column_for(x).map_or_else(|| uniform.clone(), <[f64]>::to_vec))
            .collect()
    }

    /// Joint `p(v, y)` induced on a system through the Markov chain `V - X - Y`.
    pub fn joint_with_target(&self, dist: &SystemDistribution) -> Result<Vec<Vec<f64>>> {
        let ny = dist.target_alphabet();
        let mut joint = vec![vec![0.0; ny]; self.output_alphabet];
        for x in 0..dist.source_states() {
            let row = &dist.probs()[x * ny..(x + 1) * ny];
            if row.iter().all(|&p| p == 0.0) {
                continue;
            }
            let col = self
                .column_for(x)
                .ok_or_else(|| Error::input(format!("channel undefined on supported input {x}")))?;
            for (v, &pv) in col.iter().enumerate() {
                for (y, &p) in row.iter().enumerate() {
                    joint[v][y] += pv * p;
                }
            }
        }
        Ok(joint)
    }

    /// `I(V; Y)` in bits for the induced joint.
    pub fn information_about_target(&self, dist: &SystemDistribution) -> Result<f64> {
        Ok(mutual_information_table(&self.joint_with_target(dist)?))
    }
}

/// Mutual information of a 2-D joint table `p[a][b]` in bits.
pub fn mutual_information_table(joint: &[Vec<f64>]) -> f64 {
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let nb = joint.first().map_or(0, Vec::len);
    let pb: Vec<f64> = (0..nb).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    (entropy_bits(&pa) + entropy_bits(&pb) - entropy_bits(&flat)).max(0.0)
}
