//! Checks of the lattice engine against independent constructions: a
//! general-purpose eigensolver, explicit Fock-space density matrices, and
//! exact many-body ground states.

use std::f64::consts::PI;

use entroscope_core::eigen::symmetric_eigenvalues;
use entroscope_core::lattice::{
    build_correlation_matrix, entropy_from_correlations, finite_chain_correlation_matrix, lattice_mutual_information,
    CorrelationMatrix, LatticeBlockSpec, RenyiIndex, HALF_FILLING,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn reference_eigenvalues(entries: &[f64], n: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, entries);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn eigenvalues_match_nalgebra_on_random_matrices() {
    let mut rng = StdRng::seed_from_u64(11);
    for n in [1, 2, 3, 7, 50, 120] {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let ours = symmetric_eigenvalues(&a, n).unwrap();
        let theirs = reference_eigenvalues(&a, n);
        let scale = theirs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() <= 1e-12 * scale, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn eigenvalues_match_nalgebra_on_correlation_matrix() {
    let spec = LatticeBlockSpec::new(vec![(0, 63), (80, 143)], HALF_FILLING).unwrap();
    let c = build_correlation_matrix(&spec);
    let ours = symmetric_eigenvalues(c.entries(), c.size()).unwrap();
    let theirs = reference_eigenvalues(c.entries(), c.size());
    for (x, y) in ours.iter().zip(&theirs) {
        assert!((x - y).abs() <= 1e-12);
    }
}

/// Dense operators on the Fock space of `modes` fermions via Jordan-Wigner,
/// mode 0 being the most significant bit.
struct Fock {
    modes: usize,
}

impl Fock {
    fn dim(&self) -> usize {
        1 << self.modes
    }

    fn bit(&self, mode: usize) -> usize {
        1 << (self.modes - 1 - mode)
    }

    /// Matrix of `c_i^dag c_j`.
    fn hop(&self, i: usize, j: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for state in 0..dim {
            let Some((s1, mid)) = self.annihilate(state, j) else { continue };
            let Some((s2, out)) = self.create(mid, i) else { continue };
            m[(out, state)] += s1 * s2;
        }
        m
    }

    fn sign(&self, state: usize, mode: usize) -> f64 {
        let before = (0..mode).filter(|&k| state & self.bit(k) != 0).count();
        if before % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn annihilate(&self, state: usize, mode: usize) -> Option<(f64, usize)> {
        (state & self.bit(mode) != 0).then(|| (self.sign(state, mode), state ^ self.bit(mode)))
    }

    fn create(&self, state: usize, mode: usize) -> Option<(f64, usize)> {
        (state & self.bit(mode) == 0).then(|| (self.sign(state, mode), state | self.bit(mode)))
    }
}

/// Traces out the last `drop` modes (least significant bits).
fn trace_tail(rho: &DMatrix<f64>, modes: usize, drop: usize) -> DMatrix<f64> {
    let keep = 1 << (modes - drop);
    let inner = 1 << drop;
    let mut out = DMatrix::zeros(keep, keep);
    for a in 0..keep {
        for b in 0..keep {
            out[(a, b)] = (0..inner).map(|t| rho[(a * inner + t, b * inner + t)]).sum();
        }
    }
    out
}

fn von_neumann(rho: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(rho.clone()).eigenvalues.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.ln()).sum()
}

/// Gaussian state with one-body correlations `c` (in the given mode order),
/// built as `exp(-H) / Z` with `H = sum h_ij c_i^dag c_j`, `h = ln((1 - C)/C)`.
fn gaussian_state(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let eig = SymmetricEigen::new(c.clone());
    let mut h = DMatrix::zeros(n, n);
    for k in 0..n {
        let nu = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k);
        h += ((1.0 - nu) / nu).ln() * v * v.transpose();
    }
    let fock = Fock { modes: n };
    let mut big_h = DMatrix::zeros(fock.dim(), fock.dim());
    for i in 0..n {
        for j in 0..n {
            // <c_i^dag c_j> = C_ji, so the exponent pairs c_i^dag c_j with h_ji.
            big_h += h[(j, i)] * fock.hop(i, j);
        }
    }
    let e = SymmetricEigen::new(big_h);
    let mut rho = DMatrix::zeros(fock.dim(), fock.dim());
    for k in 0..fock.dim() {
        let v = e.eigenvectors.column(k);
        rho += (-e.eigenvalues[k]).exp() * v * v.transpose();
    }
    let z = rho.trace();
    rho / z
}

fn brute_force_mi(k_f: f64) -> f64 {
    // Sites 0 (A), 2 (B) and the traced site 1, ordered A, B, traced so both
    // partial traces are over trailing modes.
    let order = [0i64, 2, 1];
    let corr = |a: i64, b: i64| if a == b { k_f / PI } else { ((k_f * (a - b) as f64).sin()) / (PI * (a - b) as f64) };
    let c = DMatrix::from_fn(3, 3, |i, j| corr(order[i], order[j]));
    let rho = gaussian_state(&c);

    // Sanity: the constructed state reproduces the correlations.
    let fock = Fock { modes: 3 };
    for i in 0..3 {
        for j in 0..3 {
            let v = (&rho * fock.hop(i, j)).trace();
            assert!((v - c[(j, i)]).abs() < 1e-12);
        }
    }

    let rho_ab = trace_tail(&rho, 3, 1);
    let rho_a = trace_tail(&rho, 3, 2);
    // B alone: trace A out of rho_ab (single mode, parity diagonal).
    let mut rho_b = DMatrix::zeros(2, 2);
    for t in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                rho_b[(a, b)] += rho_ab[(t * 2 + a, t * 2 + b)];
            }
        }
    }
    von_neumann(&rho_a) + von_neumann(&rho_b) - von_neumann(&rho_ab)
}

#[test]
fn single_site_mutual_information_matches_fock_space() {
    for k_f in [HALF_FILLING, PI / 3.0, 2.4] {
        let oracle = brute_force_mi(k_f);
        let ours = lattice_mutual_information(1, 1, k_f, RenyiIndex::VON_NEUMANN).unwrap();
        assert!((ours - oracle).abs() < 1e-10, "k_F={k_f}: {ours} vs {oracle}");
    }
}

/// Ground state of `-sum_i (c_i^dag c_{i+1} + h.c.)` on an open chain.
fn many_body_ground_state(n: usize) -> DMatrix<f64> {
    let fock = Fock { modes: n };
    let mut h = DMatrix::zeros(fock.dim(), fock.dim());
    for i in 0..n - 1 {
        h -= fock.hop(i, i + 1);
        h -= fock.hop(i + 1, i);
    }
    let e = SymmetricEigen::new(h);
    let (k, _) =
        e.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b });
    let psi = e.eigenvectors.column(k).into_owned();
    &psi * psi.transpose()
}

#[test]
fn finite_chain_matches_many_body_ground_state() {
    let n = 8;
    let rho = many_body_ground_state(n);
    let fock = Fock { modes: n };
    let c = finite_chain_correlation_matrix(n, n / 2).unwrap();
    for i in 0..n {
        for j in 0..n {
            let v = (&rho * fock.hop(i, j)).trace();
            assert!((v - c.get(j, i)).abs() < 1e-10, "({i}, {j})");
        }
    }
    for block in 1..n {
        let reduced = trace_tail(&rho, n, n - block);
        let oracle = von_neumann(&reduced);
        let idx: Vec<usize> = (0..block).collect();
        let ours = entropy_from_correlations(&c.restrict(&idx), RenyiIndex::VON_NEUMANN).unwrap();
        assert!((ours - oracle).abs() < 1e-9, "block {block}: {ours} vs {oracle}");
    }
}

#[test]
fn pure_state_entropy_equals_complement() {
    let n = 60;
    let c = finite_chain_correlation_matrix(n, 27).unwrap();
    for cut in [1, 7, 20, 33] {
        let a: Vec<usize> = (0..cut).collect();
        let b: Vec<usize> = (cut..n).collect();
        let sa = entropy_from_correlations(&c.restrict(&a), RenyiIndex::VON_NEUMANN).unwrap();
        let sb = entropy_from_correlations(&c.restrict(&b), RenyiIndex::VON_NEUMANN).unwrap();
        assert!((sa - sb).abs() < 1e-8, "cut {cut}: {sa} vs {sb}");
        // Non-contiguous region and its complement.
        let a: Vec<usize> = (0..n).filter(|i| i % 3 == 0 || *i < cut).collect();
        let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        let sa = entropy_from_correlations(&c.restrict(&a), RenyiIndex::new(2.0).unwrap()).unwrap();
        let sb = entropy_from_correlations(&c.restrict(&b), RenyiIndex::new(2.0).unwrap()).unwrap();
        assert!((sa - sb).abs() < 1e-8);
    }
}

#[test]
fn renyi_two_matches_purity() {
    let spec = LatticeBlockSpec::new(vec![(0, 2)], 1.3).unwrap();
    let c = build_correlation_matrix(&spec);
    let dm = DMatrix::from_row_slice(3, 3, c.entries());
    let rho = gaussian_state(&dm);
    let purity = (&rho * &rho).trace();
    let s2 = entropy_from_correlations(&c, RenyiIndex::new(2.0).unwrap()).unwrap();
    assert!((s2 + purity.ln()).abs() < 1e-10);
}

#[test]
fn far_blocks_decouple() {
    for l in [4i64, 8, 12] {
        let mi = lattice_mutual_information(l, 4 * l, HALF_FILLING, RenyiIndex::VON_NEUMANN).unwrap();
        assert!(mi <= 0.01, "L={l}: {mi}");
    }
}

#[test]
fn far_separation_tracks_continuum_decay() {
    for l in [8i64, 16, 32] {
        for m in [4i64, 5, 8] {
            let mi = lattice_mutual_information(l, m * l, HALF_FILLING, RenyiIndex::VON_NEUMANN).unwrap();
            let r = ((1 + m) * (1 + m)) as f64 / (m * (2 + m)) as f64;
            let cft = r.ln() / 3.0;
            assert!((mi - cft).abs() < 0.15 * cft, "L={l} x={m}L: {mi} vs {cft}");
        }
    }
}

#[test]
fn correlation_matrix_rejects_asymmetry() {
    assert!(CorrelationMatrix::from_entries(2, vec![0.5, 0.3, 0.2, 0.5]).is_err());
}
