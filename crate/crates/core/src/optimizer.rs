//! Brute-force search over general interactions and probe measurements.
//!
//! A candidate is a raw real vector: two unconstrained complex vectors in
//! signal ⊗ probe (orthonormalized into the images of `x` and `y`), then
//! for each announced basis `probe_dim` unconstrained complex vectors that
//! are orthonormalized into the measurement. With `outcomes > probe_dim`
//! the orthonormalized vectors are rows of an isometry whose columns give
//! rank-one POVM elements. Amplitudes may be restricted to real values.
//!
//! The search maximizes `I_avg − w (D_avg − d)²` with restarted
//! Nelder–Mead from random starts, then polishes at `100 w`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::Basis;
use crate::bounds::{info_bound_folded, phi_clamped};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{eig_hermitian, StateVector, C64};
use crate::measurement::Povm;
use crate::probe::{PostInteraction, Strategy};
use crate::simplex::{self, SimplexOptions};
use crate::tolerance::{DEPENDENCE_THRESHOLD, TOL};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Shape of the parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub probe_dim: usize,
    /// Outcomes per measurement; `probe_dim` means projective.
    pub outcomes: usize,
    /// Restrict every amplitude to be real.
    #[serde(default)]
    pub real: bool,
}

impl Layout {
    pub fn projective(probe_dim: usize) -> Self {
        Self { probe_dim, outcomes: probe_dim, real: false }
    }

    fn reals_per_amplitude(&self) -> usize {
        if self.real { 1 } else { 2 }
    }

    fn validate(&self) -> Result<()> {
        if self.probe_dim == 0 || self.outcomes < self.probe_dim {
            return invalid(format!(
                "need probe_dim ≥ 1 and outcomes ≥ probe_dim, got {} and {}",
                self.probe_dim, self.outcomes
            ));
        }
        Ok(())
    }

    fn isometry_len(&self) -> usize {
        4 * self.probe_dim * self.reals_per_amplitude()
    }

    fn measurement_len(&self) -> usize {
        self.probe_dim * self.outcomes * self.reals_per_amplitude()
    }

    /// `8p + 4pm` reals for complex amplitudes (`8p + 4p²` when
    /// projective), half that for real ones.
    pub fn param_len(&self) -> usize {
        self.isometry_len() + 2 * self.measurement_len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamStrategy {
    pub layout: Layout,
    pub params: Vec<f64>,
}

fn complex_chunks(raw: &[f64], dim: usize, real: bool) -> Vec<Vec<C64>> {
    if real {
        return raw.chunks_exact(dim).map(|c| c.iter().map(|&r| C64::new(r, 0.0)).collect()).collect();
    }
    raw.chunks_exact(2 * dim)
        .map(|c| c.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
        .collect()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Modified Gram–Schmidt with reorthogonalization, same dependence rule as
/// [`crate::hilbert::orthonormalize`].
fn gram_schmidt(mut vs: Vec<Vec<C64>>) -> Result<Vec<Vec<C64>>> {
    for k in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(k);
        let w = &mut rest[0];
        let scale = norm_sqr(w).sqrt();
        for _pass in 0..2 {
            for e in done.iter() {
                let c = inner(e, w);
                w.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm_sqr(w).sqrt();
        if scale == 0.0 || n <= DEPENDENCE_THRESHOLD * scale.max(1.0) {
            return Err(Error::Degenerate);
        }
        w.iter_mut().for_each(|a| *a /= n);
    }
    Ok(vs)
}

/// Decoded candidate in plain arrays, for fast evaluation.
struct Decoded {
    probe_dim: usize,
    /// Images of `x` and `y`, index `signal·p + probe`.
    images: [Vec<C64>; 2],
    /// Unnormalized rank-one POVM vectors per basis (xy, uv).
    povm: [Vec<Vec<C64>>; 2],
}

fn decode_raw(layout: Layout, params: &[f64]) -> Result<Decoded> {
    layout.validate()?;
    if params.len() != layout.param_len() {
        return invalid(format!("expected {} parameters, got {}", layout.param_len(), params.len()));
    }
    let p = layout.probe_dim;
    let m = layout.outcomes;
    let (iso, meas) = params.split_at(layout.isometry_len());
    let mut images = gram_schmidt(complex_chunks(iso, 2 * p, layout.real))?;
    let iy = images.pop().expect("two images");
    let ix = images.pop().expect("two images");
    let decode_meas = |raw: &[f64]| -> Result<Vec<Vec<C64>>> {
        let rows = gram_schmidt(complex_chunks(raw, m, layout.real))?;
        if m == p {
            return Ok(rows);
        }
        Ok((0..m).map(|k| (0..p).map(|j| rows[j][k].conj()).collect()).collect())
    };
    let (mx, mu) = meas.split_at(layout.measurement_len());
    Ok(Decoded { probe_dim: p, images: [ix, iy], povm: [decode_meas(mx)?, decode_meas(mu)?] })
}

/// Information and disturbance of one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub i_xy: f64,
    pub i_uv: f64,
    pub d_xy: f64,
    pub d_uv: f64,
}

impl Evaluation {
    pub fn i_avg(&self) -> f64 {
        0.5 * (self.i_xy + self.i_uv)
    }

    pub fn d_avg(&self) -> f64 {
        0.5 * (self.d_xy + self.d_uv)
    }

    pub fn objective(&self, d_target: f64, weight: f64) -> f64 {
        self.i_avg() - weight * (self.d_avg() - d_target).powi(2)
    }

    /// `I_avg − info_bound(D_avg)`; never positive beyond rounding.
    pub fn bound_excess(&self) -> f64 {
        self.i_avg() - info_bound_folded(self.d_avg())
    }
}

impl Decoded {
    fn evaluate(&self) -> Evaluation {
        let p = self.probe_dim;
        let [x, y] = &self.images;
        let u: Vec<C64> = x.iter().zip(y).map(|(a, b)| (a + b) * SQRT_HALF).collect();
        let v: Vec<C64> = x.iter().zip(y).map(|(a, b)| (a - b) * SQRT_HALF).collect();
        let lower = |s: &[C64]| norm_sqr(&s[p..]);
        let upper = |s: &[C64]| norm_sqr(&s[..p]);
        // weight of a state on |v⟩ (or |u⟩) in the signal factor
        let along = |s: &[C64], sign: f64| -> f64 {
            s[..p].iter().zip(&s[p..]).map(|(a, b)| ((a + b * sign) * SQRT_HALF).norm_sqr()).sum()
        };
        let d_xy = 0.5 * (lower(x) + upper(y));
        let d_uv = 0.5 * (along(&u, -1.0) + along(&v, 1.0));
        let likelihood = |s: &[C64], a: &[C64]| inner(a, &s[..p]).norm_sqr() + inner(a, &s[p..]).norm_sqr();
        let info = |povm: &[Vec<C64>], s0: &[C64], s1: &[C64]| -> f64 {
            let mut i = 0.0;
            for a in povm {
                let (p0, p1) = (likelihood(s0, a), likelihood(s1, a));
                let total = p0 + p1;
                if total > 0.0 {
                    i += 0.5 * total * phi_clamped((p0 - p1).abs() / total);
                }
            }
            0.5 * i
        };
        Evaluation { i_xy: info(&self.povm[0], x, y), i_uv: info(&self.povm[1], &u, &v), d_xy, d_uv }
    }

    fn strategy(&self) -> Result<Strategy> {
        let povm = |vs: &[Vec<C64>]| -> Result<Povm> {
            let ops = vs
                .iter()
                .map(|a| Ok(StateVector::unnormalized(a.clone())?.projector()))
                .collect::<Result<Vec<_>>>()?;
            Povm::new(ops)
        };
        Strategy::from_isometry(
            StateVector::unnormalized(self.images[0].clone())?,
            StateVector::unnormalized(self.images[1].clone())?,
            povm(&self.povm[0])?,
            povm(&self.povm[1])?,
        )
    }
}

impl ParamStrategy {
    pub fn new(layout: Layout, params: Vec<f64>) -> Result<Self> {
        layout.validate()?;
        if params.len() != layout.param_len() {
            return invalid(format!("expected {} parameters, got {}", layout.param_len(), params.len()));
        }
        Ok(Self { layout, params })
    }

    /// Standard normal parameters.
    pub fn random<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> Self {
        let params = (0..layout.param_len()).map(|_| rng.sample(StandardNormal)).collect();
        Self { layout, params }
    }

    pub fn evaluate(&self) -> Result<Evaluation> {
        Ok(decode_raw(self.layout, &self.params)?.evaluate())
    }

    pub fn decode(&self) -> Result<Strategy> {
        decode(self.layout, &self.params)
    }
}

/// Deterministic decoding into a validated [`Strategy`]. Near-dependent
/// raw vectors give [`Error::Degenerate`]; callers should resample.
pub fn decode(layout: Layout, params: &[f64]) -> Result<Strategy> {
    decode_raw(layout, params)?.strategy()
}

/// Parameters that decode to `s`, for strategies with rank-one projective
/// measurements of `probe_dim` outcomes.
pub fn encode(s: &Strategy) -> Result<ParamStrategy> {
    let p = s.probe_dim();
    let layout = Layout::projective(p);
    let mut params = Vec::with_capacity(layout.param_len());
    let mut push = |v: &StateVector| {
        for z in v.amps() {
            params.push(z.re);
            params.push(z.im);
        }
    };
    push(&s.images()[0]);
    push(&s.images()[1]);
    for b in Basis::ALL {
        let m = s.measurement(b);
        if m.len() != p {
            return invalid("only projective measurements with probe_dim outcomes can be encoded");
        }
        for e in m.elements() {
            let eig = eig_hermitian(e)?;
            if (eig.values[0] - 1.0).abs() > TOL.spectral || eig.values.get(1).is_some_and(|l| l.abs() > TOL.spectral) {
                return invalid("measurement element is not a rank-one projector");
            }
            push(&eig.vectors[0]);
        }
    }
    ParamStrategy::new(layout, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub probe_dim: usize,
    pub d_target: f64,
    pub penalty_weight: f64,
    pub restarts: usize,
    /// Iteration cap for each simplex run.
    pub max_iters: usize,
    pub seed: u64,
    /// Convergence tolerance on the objective.
    pub tolerance: f64,
    /// Rank-one POVMs with this many outcomes; `None` for projective.
    pub outcomes: Option<usize>,
    /// Search real amplitudes only.
    #[serde(default)]
    pub real_amplitudes: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            probe_dim: 4,
            d_target: 0.1,
            penalty_weight: 100.0,
            restarts: 20,
            max_iters: 100_000,
            seed: 0,
            tolerance: 1e-12,
            outcomes: None,
            real_amplitudes: false,
        }
    }
}

impl SearchConfig {
    pub fn layout(&self) -> Layout {
        Layout {
            probe_dim: self.probe_dim,
            outcomes: self.outcomes.unwrap_or(self.probe_dim),
            real: self.real_amplitudes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layout().validate()?;
        if !(0.0..=0.5).contains(&self.d_target) {
            return invalid(format!("d_target must lie in [0, 0.5], got {}", self.d_target));
        }
        if !(self.penalty_weight > 0.0 && self.tolerance > 0.0) {
            return invalid("penalty_weight and tolerance must be positive");
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return invalid("restarts and max_iters must be positive");
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, Serialize)]
pub struct RestartOutcome {
    pub index: usize,
    /// Final objective, at the polishing weight.
    pub objective: f64,
    pub evaluation: Evaluation,
    pub converged: bool,
    pub evaluations: usize,
    /// Largest `I_avg − info_bound(D_avg)` seen among evaluated candidates.
    pub max_bound_excess: f64,
    #[serde(skip)]
    params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best: Strategy,
    pub params: ParamStrategy,
    pub i_achieved: f64,
    pub d_achieved: f64,
    /// `info_bound(d_achieved) − i_achieved`.
    pub gap_to_bound: f64,
    pub evaluation: Evaluation,
    pub best_restart: usize,
    pub best_objective: f64,
    pub converged: bool,
    pub max_bound_excess: f64,
    pub restarts: Vec<RestartOutcome>,
}

/// Serializable summary of a search.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: SearchConfig,
    pub i_achieved: f64,
    pub d_achieved: f64,
    pub d_xy: f64,
    pub d_uv: f64,
    pub gap_to_bound: f64,
    pub converged: bool,
    pub best_restart: usize,
    pub restart_objectives: Vec<f64>,
    pub max_bound_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl SearchResult {
    pub fn report(&self, config: &SearchConfig, wall_time_s: Option<f64>) -> RunReport {
        RunReport {
            config: config.clone(),
            i_achieved: self.i_achieved,
            d_achieved: self.d_achieved,
            d_xy: self.evaluation.d_xy,
            d_uv: self.evaluation.d_uv,
            gap_to_bound: self.gap_to_bound,
            converged: self.converged,
            best_restart: self.best_restart,
            restart_objectives: self.restarts.iter().map(|r| r.objective).collect(),
            max_bound_excess: self.max_bound_excess,
            wall_time_s,
        }
    }
}

/// Repeated simplex runs from the current best until a run stops improving.
fn climb(
    layout: Layout,
    x0: Vec<f64>,
    d_target: f64,
    weight: f64,
    cfg: &SearchConfig,
    max_excess: &mut f64,
    evaluations: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let mut objective = |x: &[f64]| -> f64 {
        match decode_raw(layout, x) {
            Ok(d) => {
                let e = d.evaluate();
                *max_excess = max_excess.max(e.bound_excess());
                -e.objective(d_target, weight)
            }
            Err(_) => f64::INFINITY,
        }
    };
    let opts = SimplexOptions { max_iters: cfg.max_iters, f_tol: cfg.tolerance, x_tol: 1e-7 };
    let mut x = x0;
    let mut f = objective(&x);
    let mut step = 0.5;
    let mut converged = false;
    for _round in 0..50 {
        let r = simplex::minimize(&mut objective, &x, step, opts);
        *evaluations += r.evaluations;
        let improvement = f - r.f;
        if r.f <= f {
            x = r.x;
            f = r.f;
        }
        converged = r.converged;
        if improvement <= cfg.tolerance.max(1e-14) && r.converged {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    (x, -f, converged)
}

fn run_restart(cfg: &SearchConfig, index: usize) -> RestartOutcome {
    let layout = cfg.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let start = loop {
        let cand = ParamStrategy::random(layout, &mut rng);
        if decode_raw(layout, &cand.params).is_ok() {
            break cand.params;
        }
    };
    let mut max_excess = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let (x, _, c1) = climb(layout, start, cfg.d_target, cfg.penalty_weight, cfg, &mut max_excess, &mut evaluations);
    let polish = cfg.penalty_weight * 100.0;
    let (x, objective, c2) = climb(layout, x, cfg.d_target, polish, cfg, &mut max_excess, &mut evaluations);
    let evaluation = decode_raw(layout, &x).expect("simplex keeps finite points").evaluate();
    RestartOutcome {
        index,
        objective,
        evaluation,
        converged: c1 && c2,
        evaluations,
        max_bound_excess: max_excess,
        params: x,
    }
}

/// Best strategy over `cfg.restarts` independent restarts. Restarts run in
/// parallel; restart `k` draws from stream `k` of a generator seeded with
/// `cfg.seed`, so the result does not depend on the thread count.
pub fn search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts).into_par_iter().map(|k| run_restart(cfg, k)).collect();
    // ties go to the lower index because max_by keeps the later maximum
    let best = outcomes
        .iter()
        .rev()
        .max_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("at least one restart");
    let params = ParamStrategy::new(cfg.layout(), best.params.clone())?;
    let evaluation = best.evaluation;
    let d = evaluation.d_avg();
    Ok(SearchResult {
        best: params.decode()?,
        params,
        i_achieved: evaluation.i_avg(),
        d_achieved: d,
        gap_to_bound: info_bound_folded(d) - evaluation.i_avg(),
        evaluation,
        best_restart: best.index,
        best_objective: best.objective,
        converged: best.converged,
        max_bound_excess: outcomes.iter().map(|r| r.max_bound_excess).fold(f64::NEG_INFINITY, f64::max),
        restarts: outcomes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationRow {
    pub d_target: f64,
    pub d_achieved: f64,
    pub i_achieved: f64,
    pub i_bound: f64,
    pub gap_to_bound: f64,
    pub converged: bool,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationTable {
    pub rows: Vec<SaturationRow>,
    pub tolerance: f64,
}

impl SaturationTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.gap_to_bound <= self.tolerance)
    }
}

/// Runs [`search`] at each grid point with `base` settings otherwise.
pub fn verify_saturation(d_grid: &[f64], base: &SearchConfig) -> Result<SaturationTable> {
    let mut rows = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let cfg = SearchConfig { d_target: d, ..base.clone() };
        let t0 = Instant::now();
        let r = search(&cfg)?;
        rows.push(SaturationRow {
            d_target: d,
            d_achieved: r.d_achieved,
            i_achieved: r.i_achieved,
            i_bound: info_bound_folded(r.d_achieved),
            gap_to_bound: r.gap_to_bound,
            converged: r.converged,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(SaturationTable { rows, tolerance: TOL.optimization })
}
