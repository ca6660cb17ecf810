//! Time-varying communication graphs, gossip matrices, and spectral
//! certification of the network condition number.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::{DenseMatrix, NodeStack};

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    InvalidParameter(String),
    /// The declared condition number is violated at some round.
    CertificationFailure { round: usize, certified: f64, declared: f64 },
}

impl core::fmt::Display for NetworkError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NetworkError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            NetworkError::CertificationFailure {
                round,
                certified,
                declared,
            } => write!(
                f,
                "condition number certification failed at round {round}: \
                 certified {certified} > declared {declared}"
            ),
        }
    }
}

/// `1/n`-scaled Laplacian of a star graph around `center` (1-indexed).
pub fn star_laplacian(n: usize, center: usize) -> Result<DenseMatrix, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidParameter("star needs n >= 2".into()));
    }
    if center < 1 || center > n {
        return Err(NetworkError::InvalidParameter("center out of range".into()));
    }
    let c = center - 1;
    let mut w = DenseMatrix::zeros(n);
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        if i == c {
            w.set(i, i, (n - 1) as f64 * inv_n);
        } else {
            w.set(i, i, inv_n);
            w.set(i, c, -inv_n);
            w.set(c, i, -inv_n);
        }
    }
    Ok(w)
}

/// Center node of the rotating star at communication round `k`, 1-indexed:
/// `2n/3 + 1 + (k mod n/3)`.
pub fn rotating_center(n: usize, k: usize) -> Result<usize, NetworkError> {
    if n < 3 || n % 3 != 0 {
        return Err(NetworkError::InvalidParameter(
            "rotating star needs n divisible by 3".into(),
        ));
    }
    Ok(2 * n / 3 + 1 + (k % (n / 3)))
}

/// Laplacian of an undirected edge list, scaled by `1/n`.
fn laplacian_from_edges(n: usize, edges: &[(usize, usize)]) -> DenseMatrix {
    let mut w = DenseMatrix::zeros(n);
    let inv_n = 1.0 / n as f64;
    for &(i, j) in edges {
        w.set(i, j, w.get(i, j) - inv_n);
        w.set(j, i, w.get(j, i) - inv_n);
        w.set(i, i, w.get(i, i) + inv_n);
        w.set(j, j, w.get(j, j) + inv_n);
    }
    w
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Single node, `W = [0]`.
    Singleton,
    /// Star with center rotating through the last third of the nodes.
    RotatingStar,
    /// Fixed ring.
    Ring,
    /// Connected Erdos-Renyi graph redrawn each round, periodic with the
    /// given horizon so the certified condition number stays valid forever.
    ErdosRenyi { p_milli: u32, seed: u64, horizon: usize },
}

/// A map from communication round to gossip matrix, with a certified
/// condition number. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TimeVaryingNetwork {
    n: usize,
    chi: f64,
    topology: Topology,
}

impl TimeVaryingNetwork {
    /// Rotating star on `n` nodes (`n` divisible by 3). The gossip matrix is
    /// the `1/n`-scaled star Laplacian, for which the nonzero spectrum lies
    /// in `[1/n, 1]`, so `chi = n` exactly.
    pub fn rotating_star(n: usize) -> Result<Self, NetworkError> {
        rotating_center(n, 0)?;
        Ok(TimeVaryingNetwork {
            n,
            chi: n as f64,
            topology: Topology::RotatingStar,
        })
    }

    pub fn singleton() -> Self {
        TimeVaryingNetwork {
            n: 1,
            chi: 1.0,
            topology: Topology::Singleton,
        }
    }

    /// Fixed ring on `n >= 3` nodes; the condition number is certified
    /// spectrally at construction.
    pub fn ring(n: usize) -> Result<Self, NetworkError> {
        if n < 3 {
            return Err(NetworkError::InvalidParameter("ring needs n >= 3".into()));
        }
        let mut net = TimeVaryingNetwork {
            n,
            chi: f64::INFINITY,
            topology: Topology::Ring,
        };
        net.chi = certify_chi(&net, 1, 4)?;
        Ok(net)
    }

    /// Random connected Erdos-Renyi graph per round with edge probability
    /// `p_milli / 1000`, periodic with period `horizon`.
    pub fn erdos_renyi(
        n: usize,
        p_milli: u32,
        seed: u64,
        horizon: usize,
    ) -> Result<Self, NetworkError> {
        if n < 2 {
            return Err(NetworkError::InvalidParameter("need n >= 2".into()));
        }
        if horizon == 0 {
            return Err(NetworkError::InvalidParameter("horizon must be >= 1".into()));
        }
        let mut net = TimeVaryingNetwork {
            n,
            chi: f64::INFINITY,
            topology: Topology::ErdosRenyi {
                p_milli,
                seed,
                horizon,
            },
        };
        net.chi = certify_chi(&net, horizon, 4)?;
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Edge set at round `k`, as ordered pairs of 0-indexed nodes (both
    /// directions listed, matching the undirected gossip pattern).
    pub fn edges(&self, k: usize) -> Vec<(usize, usize)> {
        let undirected = self.undirected_edges(k);
        let mut out = Vec::with_capacity(2 * undirected.len());
        for (i, j) in undirected {
            out.push((i, j));
            out.push((j, i));
        }
        out
    }

    fn undirected_edges(&self, k: usize) -> Vec<(usize, usize)> {
        match &self.topology {
            Topology::Singleton => Vec::new(),
            Topology::RotatingStar => {
                let c = rotating_center(self.n, k).expect("validated at construction") - 1;
                (0..self.n).filter(|&i| i != c).map(|i| (i, c)).collect()
            }
            Topology::Ring => (0..self.n).map(|i| (i, (i + 1) % self.n)).collect(),
            Topology::ErdosRenyi {
                p_milli,
                seed,
                horizon,
            } => {
                let round = k % horizon;
                let mut rng =
                    ChaCha8Rng::seed_from_u64(
                        seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(round as u64)),
                    );
                loop {
                    let mut edges = Vec::new();
                    for i in 0..self.n {
                        for j in (i + 1)..self.n {
                            if (rng.next_u32() % 1000) < *p_milli {
                                edges.push((i, j));
                            }
                        }
                    }
                    if is_connected(self.n, &edges) {
                        return edges;
                    }
                }
            }
        }
    }

    /// Gossip matrix at round `k`.
    pub fn gossip(&self, k: usize) -> DenseMatrix {
        match &self.topology {
            Topology::Singleton => DenseMatrix::zeros(1),
            _ => laplacian_from_edges(self.n, &self.undirected_edges(k)),
        }
    }
}

/// Subtracts the per-coordinate node mean from every row. The image has zero
/// node-sum per coordinate; applying twice equals applying once.
pub fn project_consensus_complement(x: &NodeStack) -> NodeStack {
    let mean = x.node_mean();
    let mut out = x.clone();
    for i in 0..x.n() {
        let row = out.row_mut(i);
        for j in 0..mean.len() {
            row[j] -= mean[j];
        }
    }
    out
}

/// The projection onto the consensus complement, as an explicit object.
#[derive(Debug, Clone, Copy)]
pub struct ConsensusProjector {
    pub n: usize,
    pub d: usize,
}

impl ConsensusProjector {
    pub fn apply(&self, x: &NodeStack) -> NodeStack {
        debug_assert_eq!(x.n(), self.n);
        debug_assert_eq!(x.d(), self.d);
        project_consensus_complement(x)
    }
}

fn project_mean_zero(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= mean;
    }
}

/// Largest singular value of `(W - I)` restricted to the mean-zero subspace,
/// by power iteration on `(W - I)^T (W - I)`.
fn contraction_factor(w: &DenseMatrix, start: usize) -> f64 {
    let n = w.n();
    if n == 1 {
        return 0.0;
    }
    let mut v = vec![0.0; n];
    // Deterministic start, varied by the `start` index.
    for i in 0..n {
        v[i] = libm::sin((i + 1) as f64 * 1.7 + start as f64 * 0.61) + (i as f64) * 1e-3;
    }
    project_mean_zero(&mut v);
    let mut av = vec![0.0; n];
    let mut bv = vec![0.0; n];
    let mut sigma_sq = 0.0;
    for _ in 0..20_000 {
        // av = (W - I) v
        w.mul_vec(&v, &mut av);
        for i in 0..n {
            av[i] -= v[i];
        }
        // bv = (W - I)^T av
        w.mul_vec_transpose(&av, &mut bv);
        for i in 0..n {
            bv[i] -= av[i];
        }
        project_mean_zero(&mut bv);
        let norm = libm::sqrt(bv.iter().map(|x| x * x).sum::<f64>());
        if norm == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = bv[i] / norm;
        }
        let prev = sigma_sq;
        sigma_sq = norm;
        if (sigma_sq - prev).abs() <= 1e-15 * sigma_sq.max(1.0) {
            break;
        }
    }
    libm::sqrt(sigma_sq)
}

/// Certifies the condition number over `rounds` sampled rounds: returns the
/// max over rounds of `1 / (1 - rho_k)` where `rho_k` is the contraction
/// factor of `W_k` on mean-zero vectors. Fails if the declared value is
/// exceeded beyond `1e-8`.
pub fn certify_chi(
    network: &TimeVaryingNetwork,
    rounds: usize,
    trials: usize,
) -> Result<f64, NetworkError> {
    if trials == 0 {
        return Err(NetworkError::InvalidParameter("trials must be >= 1".into()));
    }
    let mut chi_max: f64 = 1.0;
    for k in 0..rounds.max(1) {
        let w = network.gossip(k);
        let mut rho: f64 = 0.0;
        for t in 0..trials {
            let r = contraction_factor(&w, t);
            if r > rho {
                rho = r;
            }
        }
        if rho >= 1.0 {
            return Err(NetworkError::CertificationFailure {
                round: k,
                certified: f64::INFINITY,
                declared: network.chi,
            });
        }
        let chi_k = 1.0 / (1.0 - rho);
        if chi_k > chi_max {
            chi_max = chi_k;
        }
        if chi_k > network.chi + 1e-8 {
            return Err(NetworkError::CertificationFailure {
                round: k,
                certified: chi_k,
                declared: network.chi,
            });
        }
    }
    Ok(chi_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_laplacian_n3_center1() {
        let w = star_laplacian(3, 1).unwrap();
        let third = 1.0 / 3.0;
        let expected = [
            [2.0 * third, -third, -third],
            [-third, third, 0.0],
            [-third, 0.0, third],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w.get(i, j), expected[i][j]);
            }
        }
    }

    #[test]
    fn star_laplacian_annihilates_ones() {
        for (n, center) in [(3, 1), (6, 5), (12, 12)] {
            let w = star_laplacian(n, center).unwrap();
            let ones = vec![1.0; n];
            let mut out = vec![0.0; n];
            w.mul_vec(&ones, &mut out);
            assert!(out.iter().all(|v| v.abs() <= 1e-12));
            w.mul_vec_transpose(&ones, &mut out);
            assert!(out.iter().all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn rotating_center_schedule() {
        assert_eq!(rotating_center(6, 0).unwrap(), 5);
        assert_eq!(rotating_center(6, 1).unwrap(), 6);
        assert_eq!(rotating_center(6, 2).unwrap(), 5);
        assert!(rotating_center(7, 0).is_err());
    }

    #[test]
    fn certify_rotating_star() {
        for n in [3usize, 6, 12] {
            let net = TimeVaryingNetwork::rotating_star(n).unwrap();
            let chi = certify_chi(&net, n, 3).unwrap();
            assert!(
                (chi - n as f64).abs() <= 1e-8,
                "n={n}: certified {chi}"
            );
        }
    }

    #[test]
    fn complete_graph_is_perfectly_mixing() {
        // Complete-graph Laplacian scaled by 1/n acts as identity minus mean.
        let n = 4;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let w = laplacian_from_edges(n, &edges);
        let rho = contraction_factor(&w, 0);
        assert!(rho <= 1e-10, "rho = {rho}");
    }

    #[test]
    fn projector_mean_removal() {
        let x = NodeStack::from_rows(&[vec![3.0], vec![1.0]]);
        let p = project_consensus_complement(&x);
        assert_eq!(p.row(0), &[1.0]);
        assert_eq!(p.row(1), &[-1.0]);
        // consensus vectors are in the kernel
        let c = NodeStack::consensus(4, &[2.5, -1.0]);
        assert!(project_consensus_complement(&c).norm() <= 1e-15);
    }
}
