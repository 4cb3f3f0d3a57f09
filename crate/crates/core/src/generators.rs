//! Reference systems and seeded random ensembles.
//!
//! Every random generator draws from [`ChaCha8Rng`] seeded with
//! `seed_from_u64`; see [`PRNG_NAME`]. Ensemble members get independent
//! streams through [`member_seed`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Mask;
use crate::prob::SystemDistribution;
use crate::solver::bivariate_binary_pmf;

/// Recorded in output metadata so runs can be reproduced.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Largest spin count (sources plus target) for exact Gibbs enumeration.
pub const MAX_GIBBS_SPINS: usize = 12;

/// Seed of ensemble member `index`: one SplitMix64 step applied to
/// `base + (index + 1) * 0x9E3779B97F4A7C15` (wrapping).
pub fn member_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    /// `Y = X1 xor X2`, uniform inputs.
    Xor,
    /// `Y = X1 and X2`, uniform inputs.
    And,
    /// `X1 = X2` a fair bit and `Y` a copy of it.
    Copy,
    /// `Y = X1`, with `X2` an independent fair bit.
    Unq1,
    /// `Y = (X1, X2)`, uniform inputs.
    Tbc,
    /// Three fair bits with `Y = (X1 xor X2, X2 xor X3)`.
    DoubleXor,
}

impl Gate {
    /// The two-source gates of the reference table.
    pub const TABLE: [Gate; 5] = [Gate::Xor, Gate::Copy, Gate::Unq1, Gate::And, Gate::Tbc];
    pub const ALL: [Gate; 6] = [Gate::Xor, Gate::And, Gate::Copy, Gate::Unq1, Gate::Tbc, Gate::DoubleXor];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Xor => "xor",
            Gate::And => "and",
            Gate::Copy => "copy",
            Gate::Unq1 => "unq1",
            Gate::Tbc => "tbc",
            Gate::DoubleXor => "double-xor",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Gate::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::input(format!("unknown gate `{s}`")))
    }
}

pub fn gate(g: Gate) -> SystemDistribution {
    // (source tuple, target symbol, probability)
    let (alphabets, ny, cells): (Vec<usize>, usize, Vec<(usize, usize, f64)>) = match g {
        Gate::Xor => (vec![2, 2], 2, (0..4).map(|x| (x, (x >> 1) ^ (x & 1), 0.25)).collect()),
        Gate::And => (vec![2, 2], 2, (0..4).map(|x| (x, usize::from(x == 3), 0.25)).collect()),
        Gate::Copy => (vec![2, 2], 2, vec![(0, 0, 0.5), (3, 1, 0.5)]),
        Gate::Unq1 => (vec![2, 2], 2, (0..4).map(|x| (x, x >> 1, 0.25)).collect()),
        Gate::Tbc => (vec![2, 2], 4, (0..4).map(|x| (x, x, 0.25)).collect()),
        Gate::DoubleXor => (
            vec![2, 2, 2],
            4,
            (0..8)
                .map(|x| {
                    let (a, b, c) = (x >> 2, (x >> 1) & 1, x & 1);
                    (x, 2 * (a ^ b) + (b ^ c), 0.125)
                })
                .collect(),
        ),
    };
    let states: usize = alphabets.iter().product();
    let mut probs = vec![0.0; states * ny];
    for (x, y, p) in cells {
        probs[x * ny + y] = p;
    }
    SystemDistribution::new(alphabets, ny, probs).expect("reference gates are valid")
}

/// AND gate on inputs with spin correlation `<s1 s2> = r`, where bit `b`
/// maps to spin `2b - 1`: `p(00) = p(11) = (1 + r)/4`, `p(01) = p(10) = (1 - r)/4`.
pub fn correlated_and(r: f64) -> Result<SystemDistribution> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::input(format!("correlation {r} outside [-1, 1]")));
    }
    let same = (1.0 + r) / 4.0;
    let diff = (1.0 - r) / 4.0;
    let probs = vec![same, 0.0, diff, 0.0, diff, 0.0, 0.0, same];
    SystemDistribution::new(vec![2, 2], 2, probs)
}

/// Two bits with `P(X1=1) = P(X2=1) = p` and `P(X1=1, X2=1) = r`, no target.
pub fn correlated_bits(p: f64, r: f64) -> Result<SystemDistribution> {
    let pmf = bivariate_binary_pmf(p, p, r)?;
    SystemDistribution::sources_only(vec![2, 2], pmf.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GibbsMode {
    /// Couplings of every order from 1 to `k` among all `n + 1` spins.
    #[default]
    UpToK,
    /// Only `-x_target * sum_{|g| = k} J_g prod_{i in g} x_i` over source subsets.
    OnlyK,
}

impl FromStr for GibbsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up-to-k" | "upto" | "up_to_k" => Ok(GibbsMode::UpToK),
            "only-k" | "only" | "only_k" => Ok(GibbsMode::OnlyK),
            _ => Err(Error::input(format!("unknown Gibbs mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    /// Number of source spins; the target is one extra spin.
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub mode: GibbsMode,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_coupling_std")]
    pub coupling_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_beta() -> f64 {
    1.0
}

fn default_coupling_std() -> f64 {
    0.1
}

impl GibbsSpec {
    pub fn new(n: usize, k: usize, mode: GibbsMode, seed: u64) -> Self {
        Self {
            n,
            k,
            mode,
            beta: default_beta(),
            coupling_std: default_coupling_std(),
            seed,
        }
    }
}

/// Interaction `J * prod_{i in mask} s_i` over spins (bit `n` is the target).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub mask: Mask,
    pub j: f64,
}

/// Couplings drawn order by order, each order's subsets in increasing mask
/// order. The stream for order `k` does not depend on higher orders, so the
/// same seed at `k + 1` extends the Hamiltonian at `k`.
pub fn gibbs_couplings(spec: &GibbsSpec) -> Result<Vec<Coupling>> {
    let spins = spec.n + 1;
    if spins > MAX_GIBBS_SPINS {
        return Err(Error::Capacity(format!(
            "{spins} spins exceed the exact-enumeration limit of {MAX_GIBBS_SPINS}"
        )));
    }
    let max_order = match spec.mode {
        GibbsMode::UpToK => spins,
        GibbsMode::OnlyK => spec.n,
    };
    if spec.k == 0 || spec.k > max_order {
        return Err(Error::input(format!("order k = {} must lie in 1..={max_order}", spec.k)));
    }
    if !(spec.coupling_std >= 0.0) || !spec.beta.is_finite() {
        return Err(Error::input("coupling_std must be non-negative and beta finite"));
    }
    let normal = Normal::new(0.0, spec.coupling_std).map_err(|e| Error::input(e.to_string()))?;
    let mut rng = rng_from_seed(spec.seed);
    let target_bit: Mask = 1 << spec.n;
    let mut out = Vec::new();
    match spec.mode {
        GibbsMode::UpToK => {
            for order in 1..=spec.k {
                for mask in 1..(1 << spins) as Mask {
                    if mask.count_ones() as usize == order {
                        out.push(Coupling {
                            mask,
                            j: normal.sample(&mut rng),
                        });
                    }
                }
            }
        }
        GibbsMode::OnlyK => {
            for mask in 1..(1 << spec.n) as Mask {
                if mask.count_ones() as usize == spec.k {
                    out.push(Coupling {
                        mask: mask | target_bit,
                        j: normal.sample(&mut rng),
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn gibbs(spec: &GibbsSpec) -> Result<SystemDistribution> {
    let couplings = gibbs_couplings(spec)?;
    gibbs_from_couplings(spec.n, &couplings, spec.beta)
}

/// Exact Boltzmann pmf `p ∝ exp(beta * sum J prod s)` over `n + 1` spins,
/// laid out with `X1` slowest and the target spin fastest. Bit `i` of a
/// coupling mask refers to source `i` (zero-based); bit `n` is the target.
pub fn gibbs_from_couplings(n: usize, couplings: &[Coupling], beta: f64) -> Result<SystemDistribution> {
    let spins = n + 1;
    if spins > MAX_GIBBS_SPINS {
        return Err(Error::Capacity(format!(
            "{spins} spins exceed the exact-enumeration limit of {MAX_GIBBS_SPINS}"
        )));
    }
    if let Some(c) = couplings.iter().find(|c| c.mask >> spins != 0) {
        return Err(Error::input(format!("coupling mask {:#b} exceeds {spins} spins", c.mask)));
    }
    let states = 1usize << spins;
    let energies: Vec<f64> = (0..states)
        .map(|flat| {
            // flat = x * 2 + y with x's first source most significant
            let y = flat & 1;
            let x = flat >> 1;
            let mut bits: Mask = (y as Mask) << n;
            for i in 0..n {
                if (x >> (n - 1 - i)) & 1 == 1 {
                    bits |= 1 << i;
                }
            }
            let field: f64 = couplings
                .iter()
                .map(|c| {
                    // product of +-1 spins: -1 for each selected spin that is 0
                    let negatives = (c.mask & !bits).count_ones();
                    if negatives.is_multiple_of(2) {
                        c.j
                    } else {
                        -c.j
                    }
                })
                .sum();
            beta * field
        })
        .collect();
    let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energies.iter().map(|e| (e - top).exp()).collect();
    SystemDistribution::renormalized(vec![2; n], 2, weights)
}

/// Trigamma function `psi_1(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2 / 2.0
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))
}

/// Prior over the symmetric Dirichlet concentration that makes the entropy
/// of the sampled pmf roughly uniform: `p(a) ∝ K psi_1(K a + 1) - psi_1(a + 1)`,
/// tabulated on a log-spaced grid and sampled by inverse CDF.
#[derive(Debug, Clone)]
pub struct NsbPrior {
    dimension: usize,
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl NsbPrior {
    pub const GRID_MIN: f64 = 1e-3;
    pub const GRID_MAX: f64 = 1e3;
    pub const GRID_POINTS: usize = 4001;

    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::input("Dirichlet dimension must be at least 2"));
        }
        let k = dimension as f64;
        let (lo, hi) = (Self::GRID_MIN.ln(), Self::GRID_MAX.ln());
        let steps = Self::GRID_POINTS - 1;
        let grid: Vec<f64> = (0..=steps)
            .map(|i| (lo + (hi - lo) * i as f64 / steps as f64).exp())
            .collect();
        let density: Vec<f64> = grid
            .iter()
            .map(|&a| (k * trigamma(k * a + 1.0) - trigamma(a + 1.0)).max(0.0))
            .collect();
        let mut cdf = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let total = cdf[cdf.len() - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { dimension, grid, cdf })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Concentration at CDF level `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1])
    }

    pub fn sample_concentration<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// A symmetric Dirichlet draw at a concentration drawn from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let a = self.sample_concentration(rng);
        symmetric_dirichlet(self.dimension, a, rng)
    }
}

/// Symmetric Dirichlet sample computed in log space, so that tiny
/// concentrations do not underflow every component to zero:
/// `G_a = G_{a+1} * U^{1/a}` with `G_{a+1} ~ Gamma(a + 1)`.
pub fn symmetric_dirichlet<R: Rng + ?Sized>(dimension: usize, a: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(a + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..dimension)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>();
            g.ln() + (1.0 - u).ln() / a
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Random system of `n` binary sources and a binary target, jointly drawn
/// from a Dirichlet with NSB-distributed concentration over all `2^(n+1)` cells.
pub fn dirichlet_nsb(n: usize, seed: u64) -> Result<SystemDistribution> {
    let prior = NsbPrior::new(nsb_dimension(n)?)?;
    dirichlet_nsb_with_prior(&prior, n, seed)
}

/// As [`dirichlet_nsb`], reusing a tabulated prior (its dimension must be `2^(n+1)`).
pub fn dirichlet_nsb_with_prior(prior: &NsbPrior, n: usize, seed: u64) -> Result<SystemDistribution> {
    if prior.dimension() != nsb_dimension(n)? {
        return Err(Error::input("prior dimension does not match 2^(n+1)"));
    }
    let mut rng = rng_from_seed(seed);
    let probs = prior.sample(&mut rng);
    SystemDistribution::renormalized(vec![2; n], 2, probs)
}

pub fn nsb_dimension(n: usize) -> Result<usize> {
    if n == 0 || n + 1 > MAX_GIBBS_SPINS {
        return Err(Error::Capacity(format!("n = {n} outside the supported range 1..={}", MAX_GIBBS_SPINS - 1)));
    }
    Ok(1 << (n + 1))
}
