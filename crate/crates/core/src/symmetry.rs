//! Symmetrization of an arbitrary strategy.
//!
//! Eve picks one of eight branches at random: a polar rotation of the
//! Poincaré sphere by a multiple of 90° applied to Alice's signal before
//! her interaction (undone on Bob's qubit afterwards), and either the
//! original interaction or its complex conjugate. She remembers the branch
//! and measures with the matching measurement, so her information is
//! unchanged. Bob's averaged channel becomes `ρ ↦ (1−2D)ρ + D·1` on the
//! signal plane once a final polar rotation aligns it.

use serde::Serialize;

use crate::bases::{bloch_of_operator, polar_rotation, signal_projector, state_operator, Basis, BlochVector, Signal};
use crate::error::Result;
use crate::hilbert::{DensityMatrix, Operator, StateVector, C64};
use crate::measurement::{mutual_information, outcome_stats};
use crate::probe::{PostInteraction, Strategy};
use crate::tolerance::TOL;

/// Bob's channel `ρ ↦ Tr_probe[W ρ W†]`, stored as the four blocks
/// `K_ij = Tr_probe |S_i⟩⟨S_j|` with `S₀, S₁` the images of `x, y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BobChannel {
    blocks: [[Operator; 2]; 2],
}

fn partial_cross(a: &StateVector, b: &StateVector) -> Operator {
    let p = a.dim() / 2;
    Operator::from_fn(2, |s, t| (0..p).map(|k| a[s * p + k] * b[t * p + k].conj()).sum())
}

impl BobChannel {
    pub fn of(s: &(impl PostInteraction + ?Sized)) -> Self {
        let (x, y) = (s.post(Signal::X), s.post(Signal::Y));
        Self { blocks: [[partial_cross(x, x), partial_cross(x, y)], [partial_cross(y, x), partial_cross(y, y)]] }
    }

    pub fn identity() -> Self {
        let e = |i, j| StateVector::basis(2, i).outer(&StateVector::basis(2, j));
        Self { blocks: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]] }
    }

    /// Output for an arbitrary 2×2 input operator.
    pub fn apply_operator(&self, rho: &Operator) -> Operator {
        let mut out = Operator::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                out = &out + &self.blocks[i][j].scale(rho[(i, j)]);
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_operator(rho.as_operator()).hermitian_part())
    }

    /// Weighted average of channels.
    pub fn mixture(parts: &[(f64, &BobChannel)]) -> Self {
        let mut blocks = [[Operator::zeros(2), Operator::zeros(2)], [Operator::zeros(2), Operator::zeros(2)]];
        for (w, c) in parts {
            for i in 0..2 {
                for j in 0..2 {
                    blocks[i][j] = &blocks[i][j] + &c.blocks[i][j].scale_real(*w);
                }
            }
        }
        Self { blocks }
    }

    /// Affine Poincaré form `n ↦ T n + t`: returns `(T, t)` with `T`
    /// row-major over `(n1, n2, n3)`.
    pub fn affine(&self) -> ([[f64; 3]; 3], [f64; 3]) {
        let v = |b: BlochVector| [b.n1, b.n2, b.n3];
        let origin = BlochVector { n1: 0.0, n2: 0.0, n3: 0.0 };
        let t = v(bloch_of_operator(&self.apply_operator(&state_operator(&origin))));
        let mut m = [[0.0; 3]; 3];
        let axes = [
            BlochVector { n1: 1.0, n2: 0.0, n3: 0.0 },
            BlochVector { n1: 0.0, n2: 1.0, n3: 0.0 },
            BlochVector { n1: 0.0, n2: 0.0, n3: 1.0 },
        ];
        for (j, axis) in axes.iter().enumerate() {
            let out = v(bloch_of_operator(&self.apply_operator(&state_operator(axis))));
            for i in 0..3 {
                m[i][j] = out[i] - t[i];
            }
        }
        (m, t)
    }

    /// Probability that Bob misreads signal `s` measuring in its basis.
    pub fn error(&self, s: Signal) -> f64 {
        let out = self.apply_operator(&signal_projector(s));
        signal_projector(s.partner()).matmul(&out).trace().re
    }

    pub fn disturbance(&self, basis: Basis) -> f64 {
        let [s0, s1] = basis.signals();
        0.5 * (self.error(s0) + self.error(s1))
    }

    /// Largest operator-norm deviation, over the four signals, of the
    /// output from `(1−2D)ρ + D·1`.
    pub fn isotropy_residual(&self, d: f64) -> f64 {
        Signal::ALL
            .iter()
            .map(|&s| {
                let rho = signal_projector(s);
                let target = &rho.scale_real(1.0 - 2.0 * d) + &Operator::identity(2).scale_real(d);
                (&self.apply_operator(&rho) - &target).op_norm()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelReport {
    pub d_xy: f64,
    pub d_uv: f64,
    pub d_avg: f64,
    /// Deviation from the isotropic form with `D = d_avg`.
    pub isotropy_residual: f64,
    pub i_avg: f64,
}

/// Basis-averaged mutual information of a strategy using its own
/// measurements.
pub fn average_information(s: &Strategy) -> f64 {
    Basis::ALL
        .iter()
        .map(|&b| mutual_information(&outcome_stats(s, b, s.measurement(b)).expect("strategy dimensions agree")))
        .sum::<f64>()
        / 2.0
}

pub fn bob_channel(s: &Strategy) -> (BobChannel, ChannelReport) {
    let ch = BobChannel::of(s);
    let report = channel_report(&ch, average_information(s));
    (ch, report)
}

fn channel_report(ch: &BobChannel, i_avg: f64) -> ChannelReport {
    let d_xy = ch.disturbance(Basis::XY);
    let d_uv = ch.disturbance(Basis::UV);
    let d_avg = 0.5 * (d_xy + d_uv);
    ChannelReport { d_xy, d_uv, d_avg, isotropy_residual: ch.isotropy_residual(d_avg), i_avg }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Branch {
    /// Poincaré rotation in quarter turns, 0 to 3.
    pub quarter_turns: u8,
    pub conjugated: bool,
    pub weight: f64,
}

impl Branch {
    pub fn angle(&self) -> f64 {
        f64::from(self.quarter_turns) * std::f64::consts::FRAC_PI_2
    }

    /// The basis whose base measurement is used when `b` is announced.
    pub fn source_basis(&self, b: Basis) -> Basis {
        if self.quarter_turns.is_multiple_of(2) { b } else { b.conjugate() }
    }
}

#[derive(Clone, Debug)]
pub struct SymmetrizedStrategy {
    pub base: Strategy,
    pub branches: Vec<Branch>,
    /// Final polar rotation applied to Bob's qubit, in radians.
    pub alignment: f64,
}

/// Images `(A R_k† ⊗ 1) W' (R_k s)` with `W'` = `W` or its conjugate.
fn branch_images(base: &Strategy, branch: &Branch, alignment: f64) -> [StateVector; 2] {
    let rk = polar_rotation(branch.angle());
    let outer = polar_rotation(alignment).matmul(&rk.adjoint());
    let p = base.probe_dim();
    let (wx, wy) = if branch.conjugated {
        (base.post(Signal::X).conj(), base.post(Signal::Y).conj())
    } else {
        (base.post(Signal::X).clone(), base.post(Signal::Y).clone())
    };
    let image = |s: Signal| {
        let input = rk.apply(&crate::bases::signal_vector(s));
        let w_in = &wx.scale(input[0]) + &wy.scale(input[1]);
        let amps: Vec<C64> = (0..2 * p)
            .map(|idx| {
                let (sig, k) = (idx / p, idx % p);
                (0..2).map(|t| outer[(sig, t)] * w_in[t * p + k]).sum()
            })
            .collect();
        StateVector::unnormalized(amps).expect("nonempty")
    };
    [image(Signal::X), image(Signal::Y)]
}

impl SymmetrizedStrategy {
    /// The strategy Eve runs in one branch.
    pub fn branch_strategy(&self, branch: &Branch) -> Strategy {
        let [ix, iy] = branch_images(&self.base, branch, self.alignment);
        let meas = |b: Basis| {
            let m = self.base.measurement(branch.source_basis(b));
            if branch.conjugated { m.conj() } else { m.clone() }
        };
        Strategy::from_isometry(ix, iy, meas(Basis::XY), meas(Basis::UV)).expect("branch maps are isometries")
    }

    pub fn channel(&self) -> BobChannel {
        let chans: Vec<(f64, BobChannel)> =
            self.branches.iter().map(|b| (b.weight, BobChannel::of(&self.branch_strategy(b)))).collect();
        let parts: Vec<(f64, &BobChannel)> = chans.iter().map(|(w, c)| (*w, c)).collect();
        BobChannel::mixture(&parts)
    }

    /// Branch-weighted basis-averaged information.
    pub fn average_information(&self) -> f64 {
        self.branches.iter().map(|b| b.weight * average_information(&self.branch_strategy(b))).sum()
    }

    pub fn report(&self) -> ChannelReport {
        channel_report(&self.channel(), self.average_information())
    }
}

fn eight_branches() -> Vec<Branch> {
    (0..4u8)
        .flat_map(|k| [false, true].map(|c| Branch { quarter_turns: k, conjugated: c, weight: 0.125 }))
        .collect()
}

const SCAN_STEP: f64 = 1e-4;

/// Bob's outputs for the four signals under the affine channel `(T, t)`,
/// paired with the signal's Poincaré vector.
fn signal_outputs(m: &[[f64; 3]; 3], t: &[f64; 3]) -> Vec<([f64; 2], BlochVector)> {
    let mut out = Vec::with_capacity(4);
    for n in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        let o: Vec<f64> = (0..3).map(|i| m[i][0] * n[0] + m[i][1] * n[1] + t[i]).collect();
        out.push((n, BlochVector { n1: o[0], n2: o[1], n3: o[2] }));
    }
    out
}

/// Average disturbance after a polar rotation by `theta`.
fn rotated_disturbance(outputs: &[([f64; 2], BlochVector)], theta: f64) -> f64 {
    let fid: f64 = outputs
        .iter()
        .map(|(n, o)| {
            let r = o.rotated(theta);
            0.5 * (1.0 + r.n1 * n[0] + r.n2 * n[1])
        })
        .sum();
    1.0 - fid / outputs.len() as f64
}

/// Derivative of [`rotated_disturbance`] in `theta`.
fn rotated_disturbance_slope(outputs: &[([f64; 2], BlochVector)], theta: f64) -> f64 {
    let s: f64 = outputs
        .iter()
        .map(|(n, o)| {
            // d/dθ of the rotated vector is the rotated vector turned by a
            // further quarter turn
            let r = o.rotated(theta + std::f64::consts::FRAC_PI_2);
            0.5 * (r.n1 * n[0] + r.n2 * n[1])
        })
        .sum();
    -s / outputs.len() as f64
}

/// Polar rotation angle in `[0, 2π)` minimizing Bob's disturbance: a grid
/// scan at 1e−4 rad, then bisection on the derivative inside the bracket
/// around the best grid point. Function values are too flat at the
/// minimum to locate it beyond about 1e−8 rad; the derivative is not.
fn best_alignment(ch: &BobChannel) -> f64 {
    let (m, t) = ch.affine();
    let outputs = signal_outputs(&m, &t);
    let f = |th: f64| rotated_disturbance(&outputs, th);
    let slope = |th: f64| rotated_disturbance_slope(&outputs, th);
    let tau = std::f64::consts::TAU;
    let n = (tau / SCAN_STEP).ceil() as usize;
    let mut best = (0.0, f(0.0));
    for k in 1..n {
        let th = k as f64 * SCAN_STEP;
        let v = f(th);
        if v < best.1 {
            best = (th, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - SCAN_STEP, best.0 + SCAN_STEP);
    if slope(lo) >= 0.0 || slope(hi) <= 0.0 {
        // flat channel (D = ½) or no interior minimum
        return best.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let th = 0.5 * (lo + hi);
    let th = if f(th) <= best.1 { th } else { best.0 };
    th.rem_euclid(tau)
}

/// Eight-branch symmetrization followed by the alignment rotation that
/// minimizes Bob's disturbance.
pub fn symmetrize(s: &Strategy) -> SymmetrizedStrategy {
    let mut sym = SymmetrizedStrategy { base: s.clone(), branches: eight_branches(), alignment: 0.0 };
    sym.alignment = best_alignment(&sym.channel());
    sym
}

/// `D` fitted by least squares to `N(ρ_s) ≈ (1−2D)ρ_s + D·1` over the
/// four signals, and the largest operator-norm deviation from that form.
pub fn damneq_fit(ch: &BobChannel) -> (f64, f64) {
    let d = Signal::ALL.iter().map(|&s| ch.error(s)).sum::<f64>() / 4.0;
    (d, ch.isotropy_residual(d))
}

pub fn damneq_check(s: &SymmetrizedStrategy) -> (f64, f64) {
    damneq_fit(&s.channel())
}

/// Whether a channel commutes with the four quarter-turn polar rotations
/// on the signal states, to `tol`.
pub fn commutes_with_quarter_turns(ch: &BobChannel, tol: f64) -> bool {
    (0..4).all(|k| {
        let r = polar_rotation(f64::from(k) * std::f64::consts::FRAC_PI_2);
        Signal::ALL.iter().all(|&s| {
            let rho = signal_projector(s);
            let lhs = ch.apply_operator(&r.matmul(&rho).matmul(&r.adjoint()));
            let rhs = r.matmul(&ch.apply_operator(&rho)).matmul(&r.adjoint());
            lhs.max_abs_diff(&rhs) <= tol
        })
    })
}

/// Tolerance used for isotropy checks.
pub const ISOTROPY_TOL: f64 = TOL.spectral;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::build_optimal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_channel() {
        let s = Strategy::identity(2);
        let (ch, r) = bob_channel(&s);
        assert!(r.d_avg.abs() < 1e-15 && r.isotropy_residual < 1e-15);
        assert!(ch.apply_operator(&signal_projector(Signal::U)).max_abs_diff(&signal_projector(Signal::U)) < 1e-15);
        assert_eq!(damneq_fit(&BobChannel::identity()), (0.0, 0.0));
    }

    #[test]
    fn optimal_channel_is_isotropic_when_symmetric() {
        let (_, r) = bob_channel(&build_optimal(0.1, 0.1).unwrap().optimal_strategy());
        assert!(r.isotropy_residual < 1e-12);
        let (_, r) = bob_channel(&build_optimal(0.2, 0.1).unwrap().optimal_strategy());
        assert!((r.d_xy - 0.2).abs() < 1e-12 && (r.d_uv - 0.1).abs() < 1e-12);
        assert!(r.isotropy_residual > 1e-3);
    }

    #[test]
    fn asymmetric_optimum_symmetrizes_to_average() {
        let base = build_optimal(0.2, 0.1).unwrap().optimal_strategy();
        let sym = symmetrize(&base);
        let r = sym.report();
        assert!((r.d_xy - 0.15).abs() < 1e-12, "{r:?}");
        assert!((r.d_uv - 0.15).abs() < 1e-12);
        assert!(r.isotropy_residual < 1e-10);
        assert!((r.i_avg - average_information(&base)).abs() < 1e-10);
    }

    #[test]
    fn symmetric_optimum_is_a_fixed_point() {
        let base = build_optimal(0.1, 0.1).unwrap().optimal_strategy();
        let sym = symmetrize(&base);
        let (d, res) = damneq_check(&sym);
        assert!((d - 0.1).abs() < 1e-12 && res < 1e-10);
        assert!((sym.average_information() - average_information(&base)).abs() < 1e-12);
    }

    #[test]
    fn dummy_qubit_attack() {
        let ch = BobChannel::of(&Strategy::keep_qubit());
        for s in Signal::ALL {
            let out = ch.apply_operator(&signal_projector(s));
            assert!(out.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-15);
        }
        let (d, res) = damneq_fit(&ch);
        assert!((d - 0.5).abs() < 1e-15 && res < 1e-15);
    }

    #[test]
    fn circular_component_is_removed() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let s = Strategy::random(2, 2, &mut rng);
        let (m, t) = BobChannel::of(&s).affine();
        assert!(t[2].abs() > 1e-3 || m[2][0].abs() > 1e-3 || m[2][1].abs() > 1e-3);
        let sym = symmetrize(&s);
        let ch = sym.channel();
        let (m, t) = ch.affine();
        assert!(t[2].abs() < 1e-12 && m[2][0].abs() < 1e-12 && m[2][1].abs() < 1e-12);
        assert!(damneq_fit(&ch).1 < 1e-10);
    }

    #[test]
    fn random_strategies() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..10 {
            let dim = if trial % 2 == 0 { 2 } else { 4 };
            let s = Strategy::random(dim, dim, &mut rng);
            let (_, before) = bob_channel(&s);
            let sym = symmetrize(&s);
            let after = sym.report();
            assert!((after.i_avg - before.i_avg).abs() < 1e-10);
            assert!(after.d_avg <= before.d_avg + 1e-12);
            assert!(after.isotropy_residual < 1e-10);
            assert!(commutes_with_quarter_turns(&sym.channel(), 1e-10));
        }
    }

    #[test]
    fn affine_form_reproduces_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = BobChannel::of(&Strategy::random(4, 4, &mut rng));
        let (m, t) = ch.affine();
        let n = BlochVector { n1: 0.3, n2: -0.5, n3: 0.2 };
        let out = bloch_of_operator(&ch.apply_operator(&state_operator(&n)));
        let pred = [
            m[0][0] * n.n1 + m[0][1] * n.n2 + m[0][2] * n.n3 + t[0],
            m[1][0] * n.n1 + m[1][1] * n.n2 + m[1][2] * n.n3 + t[1],
            m[2][0] * n.n1 + m[2][1] * n.n2 + m[2][2] * n.n3 + t[2],
        ];
        assert!((out.n1 - pred[0]).abs() < 1e-14 && (out.n2 - pred[1]).abs() < 1e-14 && (out.n3 - pred[2]).abs() < 1e-14);
    }
}
