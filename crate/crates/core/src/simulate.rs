//! Seeded Monte Carlo run of the protocol with an eavesdropper in the line.
//!
//! Rounds are sampled from exact joint outcome tables rather than by
//! collapsing state vectors. Each worker owns one ChaCha8 stream selected
//! by its index, so a summary is reproducible for a fixed `(seed, workers)`
//! pair and changes with the worker count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{signal_projector, signal_vector, Basis};
use crate::error::{invalid, Result};
use crate::hilbert::{tensor, Operator, StateVector};
use crate::measurement::{optimal_povm, outcome_guess, MeasurementStats, Povm};
use crate::probe::{build_optimal, unitary_extension, PostInteraction, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_signals: u64,
    pub d: f64,
    pub attack_enabled: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { n_signals: 1_000_000, d: 0.1, attack_enabled: true, seed: 0, workers: 1 }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_signals == 0 {
            return invalid("n_signals must be at least 1");
        }
        if !(0.0..=0.5).contains(&self.d) {
            return invalid(format!("d must lie in [0, 0.5], got {}", self.d));
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1");
        }
        Ok(())
    }
}

/// Exact probabilities of (Eve outcome, Alice bit, Bob bit) for rounds in
/// which Alice and Bob both used `basis`. Alice's bit carries prior ½.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub basis: Basis,
    /// `p[λ][alice][bob]`
    pub p: Vec<[[f64; 2]; 2]>,
}

impl JointTable {
    fn from_states(basis: Basis, states: [&StateVector; 2], probe_dim: usize, povm: &Povm) -> Self {
        let bob = basis.signals().map(signal_projector);
        let p = povm
            .elements()
            .iter()
            .map(|e| {
                let mut row = [[0.0; 2]; 2];
                for (a, s) in states.iter().enumerate() {
                    for (b, proj) in bob.iter().enumerate() {
                        row[a][b] = 0.5 * sandwich(s, proj, e, probe_dim).max(0.0);
                    }
                }
                row
            })
            .collect();
        Self { basis, p }
    }

    pub fn outcomes(&self) -> usize {
        self.p.len()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().flatten().sum()
    }

    /// Marginal probability of Eve's outcome.
    pub fn q(&self, lambda: usize) -> f64 {
        self.p[lambda].iter().flatten().sum()
    }

    /// Probability that Bob's bit differs from Alice's.
    pub fn disturbance(&self) -> f64 {
        self.p.iter().map(|r| r[0][1] + r[1][0]).sum()
    }

    /// Bob's error rate conditioned on Alice's bit and Eve's outcome.
    pub fn conditional_error(&self, alice: usize, lambda: usize) -> Option<f64> {
        let [ok, err] = if alice == 0 { [self.p[lambda][0][0], self.p[lambda][0][1]] } else { [self.p[lambda][1][1], self.p[lambda][1][0]] };
        let tot = ok + err;
        (tot > 0.0).then(|| err / tot)
    }

    /// Eve's view of the round, for choosing her guesses.
    pub fn eve_stats(&self) -> MeasurementStats {
        let lik = self.p.iter().map(|r| [2.0 * (r[0][0] + r[0][1]), 2.0 * (r[1][0] + r[1][1])]).collect();
        MeasurementStats::from_likelihood(self.basis, lik)
    }

    /// Eve's bit guess for each outcome.
    pub fn guesses(&self) -> Vec<usize> {
        let stats = self.eve_stats();
        (0..self.outcomes()).map(|l| outcome_guess(&stats, l).bit()).collect()
    }
}

/// `⟨S| B ⊗ E |S⟩` for `S` on signal ⊗ probe.
fn sandwich(s: &StateVector, b: &Operator, e: &Operator, p: usize) -> f64 {
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let bij = b[(i, j)];
            if bij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..p {
                let lhs = s[i * p + k].conj() * bij;
                for l in 0..p {
                    acc += lhs * e[(k, l)] * s[j * p + l];
                }
            }
        }
    }
    acc.re
}

/// Table for the optimal attack at error rate `d` in both bases, built by
/// running the signal through the unitary extension of the interaction.
pub fn joint_distribution(d: f64, basis: Basis) -> Result<JointTable> {
    joint_distribution_with(d, basis, basis)
}

/// Like [`joint_distribution`] but Eve measures as if `eve_basis` had been
/// announced. With `eve_basis` the conjugate of `basis`, Bob's error rate
/// given any Eve outcome is `d` for the optimal attack.
pub fn joint_distribution_with(d: f64, basis: Basis, eve_basis: Basis) -> Result<JointTable> {
    if !(0.0..=0.5).contains(&d) {
        return invalid(format!("d must lie in [0, 0.5], got {d}"));
    }
    let interaction = build_optimal(d, d)?;
    let p = interaction.probe_dim();
    let u = unitary_extension(&interaction)?;
    let states = basis.signals().map(|s| {
        let input = tensor(&signal_vector(s), &StateVector::basis(p, 0));
        u.apply(&input)
    });
    Ok(JointTable::from_states(basis, [&states[0], &states[1]], p, &optimal_povm(eve_basis)))
}

/// Table for an arbitrary strategy.
pub fn strategy_table(s: &Strategy, basis: Basis) -> JointTable {
    let [a, b] = basis.signals();
    JointTable::from_states(basis, [s.post(a), s.post(b)], s.probe_dim(), s.measurement(basis))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisSummary {
    pub basis: Basis,
    pub n_sifted: u64,
    pub bob_error_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_guess_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_mi_plugin_nats: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptSummary {
    pub n_signals: u64,
    pub n_sifted: u64,
    pub bob_error_rate: f64,
    /// Absent without an eavesdropper.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_guess_accuracy: Option<f64>,
    /// Plug-in estimate from the counts of (Alice bit, announced basis,
    /// Eve outcome).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_mi_plugin_nats: Option<f64>,
    pub per_basis: Vec<BasisSummary>,
}

#[derive(Clone, Debug, Default)]
struct Counts {
    sifted: u64,
    bob_errors: u64,
    eve_correct: u64,
    /// `joint[λ][alice]`
    joint: Vec<[u64; 2]>,
}

impl Counts {
    fn new(outcomes: usize) -> Self {
        Self { joint: vec![[0; 2]; outcomes], ..Self::default() }
    }

    fn merge(&mut self, o: &Counts) {
        self.sifted += o.sifted;
        self.bob_errors += o.bob_errors;
        self.eve_correct += o.eve_correct;
        for (a, b) in self.joint.iter_mut().zip(&o.joint) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }
}

/// Per-basis sampler: cumulative distribution over `(λ, bob)` for each
/// Alice bit.
struct Sampler {
    cumulative: [Vec<(f64, usize, usize)>; 2],
    guesses: Vec<usize>,
}

impl Sampler {
    fn new(t: &JointTable) -> Self {
        let cumulative = [0, 1].map(|a| {
            let mass: f64 = t.p.iter().map(|r| r[a][0] + r[a][1]).sum();
            let mut acc = 0.0;
            let mut out = Vec::new();
            for (l, r) in t.p.iter().enumerate() {
                for (b, &pr) in r[a].iter().enumerate() {
                    if pr > 0.0 {
                        acc += pr / mass;
                        out.push((acc, l, b));
                    }
                }
            }
            out
        });
        Self { cumulative, guesses: t.guesses() }
    }

    fn draw(&self, alice: usize, u: f64) -> (usize, usize) {
        let c = &self.cumulative[alice];
        let (_, l, b) = c.iter().find(|e| u < e.0).unwrap_or(&c[c.len() - 1]);
        (*l, *b)
    }
}

fn worker_counts(cfg: &ProtocolConfig, samplers: Option<&[Sampler; 2]>, outcomes: [usize; 2], w: usize) -> [Counts; 2] {
    let n = cfg.n_signals / cfg.workers as u64 + u64::from((w as u64) < cfg.n_signals % cfg.workers as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(w as u64);
    let mut counts = outcomes.map(Counts::new);
    for _ in 0..n {
        let r = rng.next_u32();
        let basis = (r & 1) as usize;
        let alice = ((r >> 1) & 1) as usize;
        if (r >> 2) & 1 != basis as u32 {
            continue;
        }
        let c = &mut counts[basis];
        c.sifted += 1;
        if let Some(s) = samplers {
            let s = &s[basis];
            let (lambda, bob) = s.draw(alice, rng.random::<f64>());
            c.bob_errors += u64::from(bob != alice);
            c.eve_correct += u64::from(s.guesses[lambda] == alice);
            c.joint[lambda][alice] += 1;
        }
    }
    counts
}

/// Plug-in mutual information of a count table, in nats.
pub fn plugin_mi(joint: &[[u64; 2]]) -> f64 {
    let total: u64 = joint.iter().map(|r| r[0] + r[1]).sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let col = [0, 1].map(|a| joint.iter().map(|r| r[a]).sum::<u64>() as f64);
    let mut mi = 0.0;
    for r in joint {
        let row = (r[0] + r[1]) as f64;
        for a in 0..2 {
            if r[a] > 0 {
                let c = r[a] as f64;
                mi += c / n * (c * n / (row * col[a])).ln();
            }
        }
    }
    mi.max(0.0)
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

fn simulate(cfg: &ProtocolConfig, tables: Option<[JointTable; 2]>) -> Result<TranscriptSummary> {
    cfg.validate()?;
    let samplers = tables.as_ref().map(|t| [Sampler::new(&t[0]), Sampler::new(&t[1])]);
    let outcomes = tables.as_ref().map_or([0, 0], |t| [t[0].outcomes(), t[1].outcomes()]);
    let parts: Vec<[Counts; 2]> = (0..cfg.workers)
        .into_par_iter()
        .map(|w| worker_counts(cfg, samplers.as_ref(), outcomes, w))
        .collect();
    let mut total = outcomes.map(Counts::new);
    for p in &parts {
        total[0].merge(&p[0]);
        total[1].merge(&p[1]);
    }
    let attacked = tables.is_some();
    let per_basis: Vec<BasisSummary> = Basis::ALL
        .iter()
        .zip(&total)
        .map(|(&basis, c)| BasisSummary {
            basis,
            n_sifted: c.sifted,
            bob_error_rate: ratio(c.bob_errors, c.sifted),
            eve_guess_accuracy: attacked.then(|| ratio(c.eve_correct, c.sifted)),
            eve_mi_plugin_nats: attacked.then(|| plugin_mi(&c.joint)),
        })
        .collect();
    let n_sifted = total[0].sifted + total[1].sifted;
    let both: Vec<[u64; 2]> = total[0].joint.iter().chain(&total[1].joint).copied().collect();
    Ok(TranscriptSummary {
        n_signals: cfg.n_signals,
        n_sifted,
        bob_error_rate: ratio(total[0].bob_errors + total[1].bob_errors, n_sifted),
        eve_guess_accuracy: attacked.then(|| ratio(total[0].eve_correct + total[1].eve_correct, n_sifted)),
        eve_mi_plugin_nats: attacked.then(|| plugin_mi(&both)),
        per_basis,
    })
}

/// Runs the protocol with the optimal attack at `cfg.d`, or with a clean
/// channel when the attack is disabled.
pub fn run(cfg: &ProtocolConfig) -> Result<TranscriptSummary> {
    cfg.validate()?;
    let tables = if cfg.attack_enabled {
        Some([joint_distribution(cfg.d, Basis::XY)?, joint_distribution(cfg.d, Basis::UV)?])
    } else {
        None
    };
    simulate(cfg, tables)
}

/// Runs the protocol with `strategy` in the line; `cfg.d` is ignored.
pub fn run_with_strategy(cfg: &ProtocolConfig, strategy: &Strategy) -> Result<TranscriptSummary> {
    let tables = cfg.attack_enabled.then(|| [strategy_table(strategy, Basis::XY), strategy_table(strategy, Basis::UV)]);
    simulate(cfg, tables)
}

/// Exact plug-in limit of [`TranscriptSummary::eve_mi_plugin_nats`] for the
/// optimal attack.
pub fn exact_eve_information(d: f64) -> Result<f64> {
    let mut mi = 0.0;
    for b in Basis::ALL {
        let stats = joint_distribution(d, b)?.eve_stats();
        mi += 0.5 * crate::measurement::mutual_information(&stats);
    }
    Ok(mi)
}
