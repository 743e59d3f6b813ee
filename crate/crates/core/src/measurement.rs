//! Probe measurements and what Eve learns from them.
//!
//! For announced basis with signals `s₀, s₁` (equiprobable), outcome `λ`
//! of POVM `{E_λ}` occurs with `P_λi = ⟨S_i|1⊗E_λ|S_i⟩`. From these come
//! `q_λ`, the posteriors `Q_iλ`, the per-outcome gains
//! `G_λ = |Q_0λ − Q_1λ|` and the mutual information
//! `I = ½ Σ_λ q_λ φ(G_λ)` in nats.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bases::{signal_projector, signal_vector, Basis, Signal};
use crate::bounds::phi_clamped;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{eig_hermitian, kron, tensor, DensityMatrix, Operator, StateVector, C64};
use crate::probe::PostInteraction;
use crate::tolerance::TOL;

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<Operator>,
}

impl Povm {
    /// Validates that every element is Hermitian and positive semidefinite
    /// and that the elements sum to the identity, all within 1e−10.
    pub fn new(elements: Vec<Operator>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return invalid("a POVM needs at least one element");
        };
        let dim = first.dim();
        let mut total = Operator::zeros(dim);
        for (k, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
            }
            let res = e.hermitian_residual();
            if res > TOL.spectral {
                return Err(Error::NotHermitian(res));
            }
            let min = *eig_hermitian(e)?.values.last().expect("nonempty spectrum");
            if min < -TOL.spectral {
                return invalid(format!("POVM element {k} has negative eigenvalue {min}"));
            }
            total = &total + e;
        }
        let dev = total.max_abs_diff(&Operator::identity(dim));
        if dev > TOL.spectral {
            return invalid(format!("POVM elements sum to identity only within {dev:e}"));
        }
        Ok(Self { elements })
    }

    /// Rank-one projectors onto an orthonormal basis.
    pub fn projective(vectors: &[StateVector]) -> Result<Self> {
        Self::new(vectors.iter().map(StateVector::projector).collect())
    }

    pub fn computational(dim: usize) -> Self {
        let vs: Vec<StateVector> = (0..dim).map(|k| StateVector::basis(dim, k)).collect();
        Self::projective(&vs).expect("standard basis")
    }

    /// The single-outcome measurement `{1}`.
    pub fn trivial(dim: usize) -> Self {
        Self { elements: vec![Operator::identity(dim)] }
    }

    /// Random POVM: `E_k = S^{-½} A_k†A_k S^{-½}` with complex Gaussian
    /// `A_k` and `S = Σ A_k†A_k`.
    pub fn random<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Self {
        assert!(dim > 0 && outcomes > 0);
        let raw: Vec<Operator> = (0..outcomes)
            .map(|_| {
                let a = Operator::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
                a.adjoint().matmul(&a)
            })
            .collect();
        Self::normalize(raw).expect("Gaussian draws give a full-rank sum")
    }

    /// Rescales positive operators so they sum to the identity.
    pub(crate) fn normalize(raw: Vec<Operator>) -> Result<Self> {
        let dim = raw[0].dim();
        let mut total = Operator::zeros(dim);
        for e in &raw {
            total = &total + e;
        }
        let eig = eig_hermitian(&total.hermitian_part())?;
        if *eig.values.last().expect("nonempty") <= 1e-300 {
            return Err(Error::Degenerate);
        }
        let inv_sqrt = eig.reconstruct_with(|l| 1.0 / l.sqrt());
        let elements = raw
            .iter()
            .map(|e| inv_sqrt.matmul(e).matmul(&inv_sqrt).hermitian_part())
            .collect();
        Ok(Self { elements })
    }

    /// Coarse-grains outcomes: `groups[k]` lists the elements summed into
    /// new outcome `k`. Every old outcome must appear exactly once.
    pub fn binned(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        let mut elements = Vec::with_capacity(groups.len());
        for g in groups {
            let mut acc = Operator::zeros(self.dim());
            for &k in g {
                if k >= self.len() || seen[k] {
                    return invalid(format!("outcome {k} is out of range or used twice"));
                }
                seen[k] = true;
                acc = &acc + &self.elements[k];
            }
            elements.push(acc);
        }
        if seen.iter().any(|s| !s) {
            return invalid("binning must use every outcome");
        }
        Ok(Self { elements })
    }

    /// `U E_λ U†` for each element.
    pub fn conjugated_by(&self, u: &Operator) -> Self {
        let ud = u.adjoint();
        Self { elements: self.elements.iter().map(|e| u.matmul(e).matmul(&ud)).collect() }
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { elements: self.elements.iter().map(Operator::conj).collect() }
    }

    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.len()).collect::<Vec<_>>() {
            return invalid("not a permutation of the outcomes");
        }
        Ok(Self { elements: order.iter().map(|&k| self.elements[k].clone()).collect() })
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Outcome statistics for one announced basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementStats {
    pub basis: Basis,
    /// `P_λi`: probability of outcome `λ` given signal `i` of the basis.
    pub likelihood: Vec<[f64; 2]>,
    /// `q_λ`.
    pub q: Vec<f64>,
    /// `Q_iλ`, one row per outcome.
    pub posterior: Vec<[f64; 2]>,
    /// `G_λ`.
    pub g_per_outcome: Vec<f64>,
    pub prior: [f64; 2],
}

impl MeasurementStats {
    /// Statistics from the likelihood table `P_λi`.
    pub fn from_likelihood(basis: Basis, likelihood: Vec<[f64; 2]>) -> Self {
        let prior = [0.5, 0.5];
        let mut q = Vec::with_capacity(likelihood.len());
        let mut posterior = Vec::with_capacity(likelihood.len());
        let mut g = Vec::with_capacity(likelihood.len());
        for p in &likelihood {
            let ql = prior[0] * p[0] + prior[1] * p[1];
            let post = if ql > 0.0 {
                [prior[0] * p[0] / ql, prior[1] * p[1] / ql]
            } else {
                [0.5, 0.5]
            };
            q.push(ql);
            g.push((post[0] - post[1]).abs().min(1.0));
            posterior.push(post);
        }
        Self { basis, likelihood, q, posterior, g_per_outcome: g, prior }
    }

    /// `r_λ = Q_0λ − Q_1λ`.
    pub fn r(&self) -> Vec<f64> {
        self.posterior.iter().map(|p| p[0] - p[1]).collect()
    }

    pub fn outcomes(&self) -> usize {
        self.q.len()
    }
}

/// Outcome statistics of `m` applied to the probe, for signals of basis `b`.
pub fn outcome_stats(p: &(impl PostInteraction + ?Sized), b: Basis, m: &Povm) -> Result<MeasurementStats> {
    if m.dim() != p.probe_dim() {
        return Err(Error::DimensionMismatch { expected: p.probe_dim(), found: m.dim() });
    }
    let [s0, s1] = b.signals();
    let (rho0, rho1) = (p.probe_state(s0), p.probe_state(s1));
    let likelihood = m
        .elements()
        .iter()
        .map(|e| [e.matmul(&rho0).trace().re.max(0.0), e.matmul(&rho1).trace().re.max(0.0)])
        .collect();
    Ok(MeasurementStats::from_likelihood(b, likelihood))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gain {
    pub g: f64,
    /// Eve's expected error rate when guessing the likelier signal, `½(1−G)`.
    pub guess_error: f64,
}

pub fn gain(stats: &MeasurementStats) -> Gain {
    let g: f64 = stats.q.iter().zip(&stats.g_per_outcome).map(|(q, g)| q * g).sum();
    let g = g.clamp(0.0, 1.0);
    Gain { g, guess_error: 0.5 * (1.0 - g) }
}

/// Mutual information in nats between Alice's bit and Eve's outcome.
pub fn mutual_information(stats: &MeasurementStats) -> f64 {
    let i: f64 = stats.q.iter().zip(&stats.g_per_outcome).map(|(q, g)| q * phi_clamped(*g)).sum();
    (0.5 * i).clamp(0.0, std::f64::consts::LN_2)
}

/// Projective measurement diagonalizing `ρ₀ − ρ₁`, ordered by descending
/// eigenvalue.
pub fn helstrom_povm(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<Povm> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), found: rho1.dim() });
    }
    let gamma = rho0.as_operator() - rho1.as_operator();
    let eig = eig_hermitian(&gamma.hermitian_part())?;
    Povm::projective(&eig.vectors)
}

/// Closed-form optimal measurement on a two-qubit probe: the product
/// basis `|aa⟩, |ba⟩, |ab⟩, |bb⟩` built from the signals `a, b` of the
/// announced basis, first probe qubit written first.
pub fn optimal_povm(b: Basis) -> Povm {
    let [a, c] = b.signals().map(signal_vector);
    Povm::projective(&[tensor(&a, &a), tensor(&c, &a), tensor(&a, &c), tensor(&c, &c)])
        .expect("product basis is orthonormal")
}

/// Two-outcome measurement of the second probe qubit alone in basis `b`.
pub fn second_qubit_povm(b: Basis) -> Povm {
    let id = Operator::identity(2);
    Povm::new(b.signals().iter().map(|&s| kron(&id, &signal_projector(s))).collect())
        .expect("projectors on one factor")
}

/// Result of testing the conditions under which a measurement saturates
/// the information bound.
#[derive(Clone, Debug, Serialize)]
pub struct SignReport {
    pub basis: Basis,
    /// Expected proportionality factor `√(D/(1−D))`, `D` being the
    /// conjugate-basis error rate.
    pub factor: f64,
    /// `ε_λ` per outcome.
    pub epsilon: Vec<i8>,
    /// Proportionality residual per outcome.
    pub residuals: Vec<f64>,
    pub tolerance: f64,
}

impl SignReport {
    pub fn attained(&self) -> bool {
        self.residuals.iter().all(|r| *r <= self.tolerance)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// For each outcome `λ` of `m` (applied for announced basis `b`), project
/// the conjugate-basis states `|C₀⟩, |C₁⟩` with `B_c ⊗ √E_λ` and test
/// `B_c₀|C₁⟩ = ε k B_c₀|C₀⟩` and `B_c₁|C₀⟩ = ε k B_c₁|C₁⟩`.
pub fn equality_conditions(p: &(impl PostInteraction + ?Sized), m: &Povm, b: Basis) -> Result<SignReport> {
    if m.dim() != p.probe_dim() {
        return Err(Error::DimensionMismatch { expected: p.probe_dim(), found: m.dim() });
    }
    let conj = b.conjugate();
    let [c0, c1] = conj.signals();
    let d = p.disturbance(conj).clamp(0.0, 1.0);
    let k = if d >= 1.0 { f64::INFINITY } else { (d / (1.0 - d)).sqrt() };
    let [s0, s1] = b.signals();
    let (rho0, rho1) = (p.probe_state(s0), p.probe_state(s1));
    let (post0, post1) = (p.post(c0), p.post(c1));

    let mut epsilon = Vec::with_capacity(m.len());
    let mut residuals = Vec::with_capacity(m.len());
    for e in m.elements() {
        let root = e.sqrt_psd()?;
        let proj0 = kron(&signal_projector(c0), &root);
        let proj1 = kron(&signal_projector(c1), &root);
        let (a0, a1) = (proj0.apply(post0), proj0.apply(post1));
        let (b0, b1) = (proj1.apply(post0), proj1.apply(post1));
        let overlap = (a0.inner(&a1) + b0.inner(&b1)).re;
        let eps: i8 = if overlap.abs() > TOL.algebraic {
            if overlap > 0.0 { 1 } else { -1 }
        } else {
            let diff = e.matmul(&rho0).trace().re - e.matmul(&rho1).trace().re;
            if diff < -TOL.algebraic { -1 } else { 1 }
        };
        let scale = f64::from(eps) * k;
        let r1 = a1.max_abs_diff(&a0.scale_real(scale));
        let r2 = b0.max_abs_diff(&b1.scale_real(scale));
        epsilon.push(eps);
        residuals.push(r1.max(r2));
    }
    Ok(SignReport { basis: b, factor: k, epsilon, residuals, tolerance: TOL.spectral })
}

/// Eve's guess for outcome `outcome`: the signal with the larger posterior,
/// ties going to the first signal of the basis.
pub fn outcome_guess(stats: &MeasurementStats, outcome: usize) -> Signal {
    let [s0, s1] = stats.basis.signals();
    let post = stats.posterior[outcome];
    if post[1] > post[0] { s1 } else { s0 }
}
