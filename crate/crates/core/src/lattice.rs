//! Free-fermion chains solved exactly by the correlation-matrix method.
//!
//! For a Gaussian state the reduced density matrix of a site set is fixed by
//! the two-point function `C_ij = <c_i^dag c_j>` restricted to the set; its
//! eigenvalues are mode occupations and the entropy is a sum of binary
//! entropies. This is the first-principles oracle for [`crate::cft1d`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::eigen::symmetric_eigenvalues;
use crate::sum::pairwise_sum;
use crate::{Error, Result};

/// Occupations are clipped to `[CLIP, 1 - CLIP]` before taking logs.
pub const CLIP: f64 = 1e-14;
/// Eigenvalues further than this outside `[0, 1]` indicate a broken matrix.
pub const SPECTRUM_SLACK: f64 = 1e-10;

pub const HALF_FILLING: f64 = PI / 2.0;

/// Disjoint site blocks `[start, end]` (inclusive) on the infinite chain,
/// sorted ascending, with Fermi momentum `k_F` in `(0, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBlockSpec {
    blocks: Vec<(i64, i64)>,
    k_f: f64,
}

impl LatticeBlockSpec {
    pub fn new(blocks: Vec<(i64, i64)>, k_f: f64) -> Result<Self> {
        if !(k_f > 0.0 && k_f < PI) {
            return Err(Error::domain("k_F", format!("must lie in (0, pi), got {k_f}")));
        }
        if blocks.is_empty() {
            return Err(Error::domain("blocks", "at least one block is required"));
        }
        for &(s, e) in &blocks {
            if e < s {
                return Err(Error::domain("blocks", format!("block [{s}, {e}] is empty")));
            }
        }
        for w in blocks.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::domain(
                    "blocks",
                    format!("blocks [{}, {}] and [{}, {}] overlap or are unsorted", w[0].0, w[0].1, w[1].0, w[1].1),
                ));
            }
        }
        Ok(LatticeBlockSpec { blocks, k_f })
    }

    pub fn blocks(&self) -> &[(i64, i64)] {
        &self.blocks
    }

    pub fn k_f(&self) -> f64 {
        self.k_f
    }

    pub fn sites(&self) -> Vec<i64> {
        self.blocks.iter().flat_map(|&(s, e)| s..=e).collect()
    }
}

/// Real symmetric two-point function over a site set, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::domain("entries", format!("expected {} entries, got {}", n * n, entries.len())));
        }
        for i in 0..n {
            for j in 0..i {
                if libm::fabs(entries[i * n + j] - entries[j * n + i]) > 1e-12 {
                    return Err(Error::domain("entries", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(CorrelationMatrix { n, entries })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Restriction to the given row/column indices.
    pub fn restrict(&self, indices: &[usize]) -> CorrelationMatrix {
        let m = indices.len();
        let mut entries = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                entries.push(self.get(i, j));
            }
        }
        CorrelationMatrix { n: m, entries }
    }
}

/// Infinite-chain ground-state correlator at separation `r`.
pub fn infinite_chain_correlator(r: i64, k_f: f64) -> f64 {
    if r == 0 {
        k_f / PI
    } else {
        let r = r as f64;
        libm::sin(k_f * r) / (PI * r)
    }
}

/// `C_ij = sin(k_F (i-j)) / (pi (i-j))`, `C_ii = k_F / pi` over every site of
/// every block.
pub fn build_correlation_matrix(spec: &LatticeBlockSpec) -> CorrelationMatrix {
    let sites = spec.sites();
    let n = sites.len();
    let mut entries = alloc::vec![0.0; n * n];
    for (a, &i) in sites.iter().enumerate() {
        for (b, &j) in sites.iter().enumerate().take(a + 1) {
            let c = infinite_chain_correlator(i - j, spec.k_f);
            entries[a * n + b] = c;
            entries[b * n + a] = c;
        }
    }
    CorrelationMatrix { n, entries }
}

/// Exact ground-state correlation matrix of an open chain of `n_sites` sites
/// with hopping `-(c_i^dag c_{i+1} + h.c.)` and `particles` fermions, over
/// all sites.
///
/// Modes are `sqrt(2/(N+1)) sin(pi k (i+1) / (N+1))` with energies
/// `-2 cos(pi k / (N+1))`, so the ground state fills `k = 1..=particles`.
pub fn finite_chain_correlation_matrix(n_sites: usize, particles: usize) -> Result<CorrelationMatrix> {
    if n_sites == 0 {
        return Err(Error::domain("n_sites", "must be positive"));
    }
    if particles > n_sites {
        return Err(Error::domain("particles", format!("{particles} exceeds {n_sites} sites")));
    }
    let n = n_sites;
    let norm = 2.0 / (n as f64 + 1.0);
    let mode = |k: usize, i: usize| libm::sin(PI * (k * (i + 1)) as f64 / (n as f64 + 1.0));
    let mut entries = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 1..=particles {
                acc += mode(k, i) * mode(k, j);
            }
            entries[i * n + j] = norm * acc;
            entries[j * n + i] = norm * acc;
        }
    }
    Ok(CorrelationMatrix { n, entries })
}

/// Renyi index `n >= 1`; `n = 1` is the von Neumann entropy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RenyiIndex(f64);

impl RenyiIndex {
    pub const VON_NEUMANN: RenyiIndex = RenyiIndex(1.0);

    pub fn new(n: f64) -> Result<Self> {
        if n.is_finite() && n >= 1.0 {
            Ok(RenyiIndex(n))
        } else {
            Err(Error::domain("renyi", format!("index must be a finite number >= 1, got {n}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for RenyiIndex {
    fn default() -> Self {
        Self::VON_NEUMANN
    }
}

fn mode_entropy(nu: f64, n: RenyiIndex) -> f64 {
    let nu = nu.clamp(CLIP, 1.0 - CLIP);
    if n.0 == 1.0 {
        -nu * libm::log(nu) - (1.0 - nu) * libm::log1p(-nu)
    } else {
        libm::log(libm::pow(nu, n.0) + libm::pow(1.0 - nu, n.0)) / (1.0 - n.0)
    }
}

/// Entanglement (Renyi) entropy in nats of the Gaussian state with
/// correlation matrix `c`.
pub fn entropy_from_correlations(c: &CorrelationMatrix, n: RenyiIndex) -> Result<f64> {
    let spectrum = symmetric_eigenvalues(&c.entries, c.n)?;
    for &nu in &spectrum {
        if !(-SPECTRUM_SLACK..=1.0 + SPECTRUM_SLACK).contains(&nu) {
            return Err(Error::Numerical(format!("correlation eigenvalue {nu:e} outside [0, 1]")));
        }
    }
    let terms: Vec<f64> = spectrum.iter().map(|&nu| mode_entropy(nu, n)).collect();
    Ok(pairwise_sum(&terms))
}

fn check_lengths(length: i64, gap: i64) -> Result<()> {
    if length < 1 {
        return Err(Error::domain("L", format!("block length must be at least 1 site, got {length}")));
    }
    if gap < 1 {
        return Err(Error::domain("x", format!("gap must be at least 1 site, got {gap}")));
    }
    Ok(())
}

/// Mutual information of blocks `[0, L-1]` and `[L+x, 2L+x-1]` (a gap of `x`
/// sites) in the infinite-chain ground state.
pub fn lattice_mutual_information(length: i64, gap: i64, k_f: f64, n: RenyiIndex) -> Result<f64> {
    check_lengths(length, gap)?;
    let spec = LatticeBlockSpec::new(alloc::vec![(0, length - 1), (length + gap, 2 * length + gap - 1)], k_f)?;
    let full = build_correlation_matrix(&spec);
    let l = length as usize;
    let a: Vec<usize> = (0..l).collect();
    let b: Vec<usize> = (l..2 * l).collect();
    let s_a = entropy_from_correlations(&full.restrict(&a), n)?;
    let s_b = entropy_from_correlations(&full.restrict(&b), n)?;
    let s_ab = entropy_from_correlations(&full, n)?;
    Ok(s_a + s_b - s_ab)
}

/// Entropy of a single block of `length` sites on the infinite chain.
pub fn lattice_block_entropy(length: i64, k_f: f64, n: RenyiIndex) -> Result<f64> {
    check_lengths(length, 1)?;
    let spec = LatticeBlockSpec::new(alloc::vec![(0, length - 1)], k_f)?;
    entropy_from_correlations(&build_correlation_matrix(&spec), n)
}

/// Connected density correlator `<n_i n_j> - <n_i><n_j> = -C_ij^2` (Wick).
pub fn density_connected_correlator(i: i64, j: i64, k_f: f64) -> f64 {
    let c = infinite_chain_correlator(i - j, k_f);
    -c * c
}
