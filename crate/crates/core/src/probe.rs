//! Eavesdropping interactions.
//!
//! Eve's probe starts in the first probe basis vector `|ψ₀⟩` and interacts
//! unitarily with the signal; only the four post-interaction states
//! `|X⟩, |Y⟩, |U⟩, |V⟩` (the images of `|s⟩ ⊗ |ψ₀⟩`) matter. The signal
//! qubit is factor 0 of the joint space and the probe follows it.
//!
//! [`ProbeInteraction`] carries the Schmidt-form description: for every
//! signal `s` with partner `s̄`,
//! `|S⟩ = √(1−D) |s⟩|ξ_s⟩ + √D |s̄⟩|ζ_s⟩`, with `D` the error rate of the
//! basis of `s`. [`Strategy`] is the general form used everywhere else: any
//! inner-product-preserving map of the signals plus one probe measurement
//! per announced basis.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bases::{bell_basis, signal_projector, signal_vector, Basis, Signal};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{
    complete_basis, orthonormalize, reduced_first, reduced_second, tensor, tensor_all, Operator,
    StateVector, C64,
};
use crate::measurement::{optimal_povm, Povm};
use crate::tolerance::TOL;

/// Anything that assigns a post-interaction state to each signal.
pub trait PostInteraction {
    fn probe_dim(&self) -> usize;

    /// `|S⟩` for signal `s`, a unit vector in signal ⊗ probe.
    fn post(&self, s: Signal) -> &StateVector;

    /// Eve's reduced state `Tr_signal |S⟩⟨S|`.
    fn probe_state(&self, s: Signal) -> Operator {
        reduced_second(self.post(s), 2)
    }

    /// Bob's reduced state `Tr_probe |S⟩⟨S|`.
    fn bob_state(&self, s: Signal) -> Operator {
        reduced_first(self.post(s), 2)
    }

    /// Probability that Bob, measuring in the basis of the signal sent,
    /// reads the wrong value; averaged over the two signals of `basis`.
    fn disturbance(&self, basis: Basis) -> f64 {
        let [s0, s1] = basis.signals();
        let err0 = signal_projector(s1).matmul(&self.bob_state(s0)).trace().re;
        let err1 = signal_projector(s0).matmul(&self.bob_state(s1)).trace().re;
        0.5 * (err0 + err1)
    }

    /// Basis-averaged disturbance.
    fn average_disturbance(&self) -> f64 {
        0.5 * (self.disturbance(Basis::XY) + self.disturbance(Basis::UV))
    }

    /// Largest deviation of `⟨S|T⟩` from `⟨s|t⟩` over all signal pairs.
    fn inner_product_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in Signal::ALL {
            for b in Signal::ALL {
                let want = signal_vector(a).inner(&signal_vector(b));
                let got = self.post(a).inner(self.post(b));
                worst = worst.max((got - want).norm());
            }
        }
        worst
    }
}

fn check_disturbance(d: f64, name: &str) -> Result<()> {
    if !(0.0..=0.5).contains(&d) {
        return invalid(format!("{name} must lie in [0, 0.5], got {d}"));
    }
    Ok(())
}

/// Post-interaction states in Schmidt form together with the relative
/// probe states `ξ_s`, `ζ_s` (two-qubit probe).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeInteraction {
    pub d_xy: f64,
    pub d_uv: f64,
    /// `ξ_s`, indexed by [`Signal::index`].
    pub xi: [StateVector; 4],
    /// `ζ_s`, indexed by [`Signal::index`].
    pub zeta: [StateVector; 4],
    /// `|S⟩`, indexed by [`Signal::index`].
    pub post: [StateVector; 4],
}

impl PostInteraction for ProbeInteraction {
    fn probe_dim(&self) -> usize {
        4
    }

    fn post(&self, s: Signal) -> &StateVector {
        &self.post[s.index()]
    }
}

/// `√(1−D)|s⟩|ξ⟩ + √D|s̄⟩|ζ⟩`.
fn schmidt_state(s: Signal, d: f64, xi: &StateVector, zeta: &StateVector) -> StateVector {
    let a = &tensor(&signal_vector(s), xi).scale_real((1.0 - d).sqrt());
    let b = &tensor(&signal_vector(s.partner()), zeta).scale_real(d.sqrt());
    a + b
}

impl ProbeInteraction {
    /// Assembles an interaction from relative states without validating it;
    /// [`verify_constraints`] reports what holds.
    pub fn from_relative_states(d_xy: f64, d_uv: f64, xi: [StateVector; 4], zeta: [StateVector; 4]) -> Self {
        let post = Signal::ALL.map(|s| {
            let d = if s.basis() == Basis::XY { d_xy } else { d_uv };
            schmidt_state(s, d, &xi[s.index()], &zeta[s.index()])
        });
        Self { d_xy, d_uv, xi, zeta, post }
    }

    pub fn xi(&self, s: Signal) -> &StateVector {
        &self.xi[s.index()]
    }

    pub fn zeta(&self, s: Signal) -> &StateVector {
        &self.zeta[s.index()]
    }

    /// The conjugate-side relative states predicted by linearity of the
    /// interaction, in the scaled form
    /// `[2√(1−D_uv) ξ_u, 2√D_uv ζ_u, 2√(1−D_uv) ξ_v, 2√D_uv ζ_v]`.
    pub fn linearity_prediction(&self) -> [StateVector; 4] {
        let (a, b) = ((1.0 - self.d_xy).sqrt(), self.d_xy.sqrt());
        let (xx, xy) = (self.xi(Signal::X), self.xi(Signal::Y));
        let (zx, zy) = (self.zeta(Signal::X), self.zeta(Signal::Y));
        let xi_sum = xx + xy;
        let xi_diff = xx - xy;
        let zeta_sum = zx + zy;
        let zeta_diff = zy - zx;
        [
            &xi_sum.scale_real(a) + &zeta_sum.scale_real(b),
            &xi_diff.scale_real(a) + &zeta_diff.scale_real(b),
            &xi_sum.scale_real(a) - &zeta_sum.scale_real(b),
            &xi_diff.scale_real(a) - &zeta_diff.scale_real(b),
        ]
    }

    /// Largest deviation between the stored uv-side relative states and
    /// the linearity prediction.
    pub fn linearity_residual(&self) -> f64 {
        let pred = self.linearity_prediction();
        let (a, b) = (2.0 * (1.0 - self.d_uv).sqrt(), 2.0 * self.d_uv.sqrt());
        let stored = [
            self.xi(Signal::U).scale_real(a),
            self.zeta(Signal::U).scale_real(b),
            self.xi(Signal::V).scale_real(a),
            self.zeta(Signal::V).scale_real(b),
        ];
        pred.iter().zip(&stored).map(|(p, s)| p.max_abs_diff(s)).fold(0.0, f64::max)
    }

    /// Strategy using this interaction with the given measurements.
    pub fn to_strategy(&self, meas_xy: Povm, meas_uv: Povm) -> Result<Strategy> {
        Strategy::new(4, self.post.clone(), meas_xy, meas_uv)
    }

    /// Strategy using the product-basis measurements that are optimal for
    /// [`build_optimal`] interactions.
    pub fn optimal_strategy(&self) -> Strategy {
        self.to_strategy(optimal_povm(Basis::XY), optimal_povm(Basis::UV))
            .expect("interaction from build_optimal is isometric")
    }
}

/// The two-qubit-probe interaction that saturates both conjugate-basis
/// information bounds at error rates `d_xy` and `d_uv`.
///
/// In the Bell bases of the probe,
/// `ξ_x, ξ_y = √(1−D_uv) Φ⁺ ± √D_uv Φ⁻` and
/// `ζ_x, ζ_y = √(1−D_uv) Ψ⁺ ∓ √D_uv Ψ⁻` (xy Bell basis), and the same with
/// `D_xy` and the uv Bell basis for `u`, `v`.
pub fn build_optimal(d_xy: f64, d_uv: f64) -> Result<ProbeInteraction> {
    check_disturbance(d_xy, "d_xy")?;
    check_disturbance(d_uv, "d_uv")?;
    let side = |basis: Basis, d: f64| {
        let [phi_p, phi_m, psi_p, psi_m] = bell_basis(basis);
        let (a, b) = ((1.0 - d).sqrt(), d.sqrt());
        let xi0 = &phi_p.scale_real(a) + &phi_m.scale_real(b);
        let xi1 = &phi_p.scale_real(a) - &phi_m.scale_real(b);
        let zeta0 = &psi_p.scale_real(a) - &psi_m.scale_real(b);
        let zeta1 = &psi_p.scale_real(a) + &psi_m.scale_real(b);
        ([xi0, xi1], [zeta0, zeta1])
    };
    let ([xi_x, xi_y], [zeta_x, zeta_y]) = side(Basis::XY, d_uv);
    let ([xi_u, xi_v], [zeta_u, zeta_v]) = side(Basis::UV, d_xy);
    Ok(ProbeInteraction::from_relative_states(
        d_xy,
        d_uv,
        [xi_x, xi_y, xi_u, xi_v],
        [zeta_x, zeta_y, zeta_u, zeta_v],
    ))
}

/// Error rate produced by the two-angle ansatz,
/// `(1 − cos α)/(2 − cos α + cos β)`.
pub fn ansatz_disturbance(alpha: f64, beta: f64) -> f64 {
    (1.0 - alpha.cos()) / (2.0 - alpha.cos() + beta.cos())
}

/// Symmetric two-angle interaction with equal error rates in both bases:
/// `ξ_x = |xx⟩`, `ζ_x = |xy⟩`, `ξ_y = (cos α|x⟩ + sin α|y⟩)|x⟩`,
/// `ζ_y = (cos β|x⟩ + sin β|y⟩)|y⟩`, with the uv side fixed by linearity.
pub fn build_ansatz(alpha: f64, beta: f64) -> Result<ProbeInteraction> {
    let range = 0.0..=std::f64::consts::FRAC_PI_2;
    if !range.contains(&alpha) || !range.contains(&beta) {
        return invalid(format!("ansatz angles must lie in [0, π/2], got ({alpha}, {beta})"));
    }
    let d = ansatz_disturbance(alpha, beta);
    let x = signal_vector(Signal::X);
    let y = signal_vector(Signal::Y);
    let tilt = |t: f64| &x.scale_real(t.cos()) + &y.scale_real(t.sin());
    let xi_x = tensor(&x, &x);
    let zeta_x = tensor(&x, &y);
    let xi_y = tensor(&tilt(alpha), &x);
    let zeta_y = tensor(&tilt(beta), &y);

    // (ξ_x − ξ_y)/√D in closed form, finite at D = 0.
    let k = 2.0 - alpha.cos() + beta.cos();
    let half = 0.5 * alpha;
    let xi_diff_over_sqrt_d = (&tensor(&x, &x).scale_real(half.sin()) - &tensor(&y, &x).scale_real(half.cos()))
        .scale_real((2.0 * k).sqrt());

    let (a, b) = ((1.0 - d).sqrt(), d.sqrt());
    let xi_sum = &xi_x + &xi_y;
    let zeta_sum = &zeta_x + &zeta_y;
    let xi_u = (&xi_sum.scale_real(a) + &zeta_sum.scale_real(b)).scale_real(0.5 / a);
    let xi_v = (&xi_sum.scale_real(a) - &zeta_sum.scale_real(b)).scale_real(0.5 / a);
    let lead = xi_diff_over_sqrt_d.scale_real(a);
    let zeta_u = (&lead + &(&zeta_y - &zeta_x)).scale_real(0.5);
    let zeta_v = (&lead + &(&zeta_x - &zeta_y)).scale_real(0.5);

    Ok(ProbeInteraction::from_relative_states(
        d,
        d,
        [xi_x, xi_y, xi_u, xi_v],
        [zeta_x, zeta_y, zeta_u, zeta_v],
    ))
}

/// Named residuals of the constraints a Schmidt-form interaction must obey.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    pub tolerance: f64,
    pub residuals: Vec<(String, f64)>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|(_, r)| *r <= self.tolerance)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|(_, r)| *r > self.tolerance)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

pub fn verify_constraints(p: &ProbeInteraction) -> ConstraintReport {
    let mut residuals = Vec::new();
    let mut push = |name: &str, r: f64| residuals.push((name.to_string(), r));
    for s in Signal::ALL {
        push(&format!("norm_xi_{s}"), (p.xi(s).norm_sqr() - 1.0).abs());
        push(&format!("norm_zeta_{s}"), (p.zeta(s).norm_sqr() - 1.0).abs());
        push(&format!("xi_zeta_orthogonal_{s}"), p.xi(s).inner(p.zeta(s)).norm());
    }
    let (xx, xy) = (p.xi(Signal::X), p.xi(Signal::Y));
    let (zx, zy) = (p.zeta(Signal::X), p.zeta(Signal::Y));
    let a = xx.inner(zy);
    let b = zx.inner(xy);
    push("xy_orthogonality", (a + b).norm());
    push("real_part", (a - b).re.abs());
    push(
        "imaginary_part",
        ((1.0 - p.d_xy) * xy.inner(xx).im + p.d_xy * zx.inner(zy).im).abs(),
    );
    push("xi_x_zeta_y", a.norm());
    push("zeta_x_xi_y", b.norm());
    push("post_xy_orthogonal", p.post(Signal::X).inner(p.post(Signal::Y)).norm());
    push("post_uv_orthogonal", p.post(Signal::U).inner(p.post(Signal::V)).norm());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (u, v) = (p.post(Signal::U), p.post(Signal::V));
    push("post_x_linearity", p.post(Signal::X).max_abs_diff(&(h * &(u + v))));
    push("post_y_linearity", p.post(Signal::Y).max_abs_diff(&(h * &(u - v))));
    push("uv_relations", p.linearity_residual());
    ConstraintReport { tolerance: TOL.algebraic, residuals }
}

/// General eavesdropping strategy: post-interaction states for all four
/// signals plus a probe measurement for each announced basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    probe_dim: usize,
    images: [StateVector; 4],
    meas_xy: Povm,
    meas_uv: Povm,
}

impl PostInteraction for Strategy {
    fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    fn post(&self, s: Signal) -> &StateVector {
        &self.images[s.index()]
    }
}

impl Strategy {
    /// Validates dimensions and that the images preserve all signal inner
    /// products (to the spectral tolerance).
    pub fn new(probe_dim: usize, images: [StateVector; 4], meas_xy: Povm, meas_uv: Povm) -> Result<Self> {
        if probe_dim == 0 {
            return invalid("probe dimension must be positive");
        }
        for im in &images {
            if im.dim() != 2 * probe_dim {
                return Err(Error::DimensionMismatch { expected: 2 * probe_dim, found: im.dim() });
            }
        }
        for m in [&meas_xy, &meas_uv] {
            if m.dim() != probe_dim {
                return Err(Error::DimensionMismatch { expected: probe_dim, found: m.dim() });
            }
        }
        let s = Self { probe_dim, images, meas_xy, meas_uv };
        let res = s.inner_product_residual();
        if res > TOL.spectral {
            return Err(Error::NotIsometric(res));
        }
        Ok(s)
    }

    /// Strategy from the images of `x` and `y`; the images of `u` and `v`
    /// follow by linearity.
    pub fn from_isometry(image_x: StateVector, image_y: StateVector, meas_xy: Povm, meas_uv: Povm) -> Result<Self> {
        if image_x.dim() != image_y.dim() || !image_x.dim().is_multiple_of(2) {
            return invalid("images of x and y must share an even dimension");
        }
        let probe_dim = image_x.dim() / 2;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let image_u = h * &(&image_x + &image_y);
        let image_v = h * &(&image_x - &image_y);
        Self::new(probe_dim, [image_x, image_y, image_u, image_v], meas_xy, meas_uv)
    }

    pub fn images(&self) -> &[StateVector; 4] {
        &self.images
    }

    pub fn measurement(&self, basis: Basis) -> &Povm {
        match basis {
            Basis::XY => &self.meas_xy,
            Basis::UV => &self.meas_uv,
        }
    }

    pub fn with_measurements(&self, meas_xy: Povm, meas_uv: Povm) -> Result<Self> {
        Self::new(self.probe_dim, self.images.clone(), meas_xy, meas_uv)
    }

    /// Random isometry with random measurements of `outcomes` elements
    /// each; reproducible for a seeded `rng`.
    pub fn random<R: Rng + ?Sized>(probe_dim: usize, outcomes: usize, rng: &mut R) -> Self {
        loop {
            let raw: Vec<StateVector> = (0..2).map(|_| random_vector(2 * probe_dim, rng)).collect();
            let Ok(basis) = orthonormalize(&raw) else { continue };
            let meas_xy = Povm::random(probe_dim, outcomes, rng);
            let meas_uv = Povm::random(probe_dim, outcomes, rng);
            let [ix, iy]: [StateVector; 2] = basis.try_into().expect("two vectors");
            return Self::from_isometry(ix, iy, meas_xy, meas_uv).expect("orthonormal images");
        }
    }

    /// Eve keeps Alice's qubit and sends Bob half of a Bell pair: Bob sees
    /// a maximally mixed state and Eve's second probe qubit holds the
    /// signal. Measured on that qubit in the announced basis.
    pub fn keep_qubit() -> Self {
        let [phi_plus, ..] = bell_basis(Basis::XY);
        // phi_plus occupies (signal, probe qubit 1); the signal moves to
        // probe qubit 2
        let image = |s: Signal| tensor(&phi_plus, &signal_vector(s));
        Self::from_isometry(
            image(Signal::X),
            image(Signal::Y),
            crate::measurement::second_qubit_povm(Basis::XY),
            crate::measurement::second_qubit_povm(Basis::UV),
        )
        .expect("keep-qubit images are orthonormal")
    }

    /// Eve does nothing: the probe stays in `|ψ₀⟩`.
    pub fn identity(probe_dim: usize) -> Self {
        let psi0 = StateVector::basis(probe_dim, 0);
        let image = |s: Signal| tensor(&signal_vector(s), &psi0);
        let trivial = Povm::trivial(probe_dim);
        Self::from_isometry(image(Signal::X), image(Signal::Y), trivial.clone(), trivial)
            .expect("identity images are orthonormal")
    }

    /// Eve measures in a uniformly random basis and resends her result.
    /// The basis choice and outcome are recorded in a two-qubit probe
    /// `(basis, outcome)`, read out in the computational basis.
    pub fn intercept_resend() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let image = |s: Signal| {
            let mut acc = StateVector::zeros(8);
            for (b_index, basis) in Basis::ALL.into_iter().enumerate() {
                for (k, outcome) in basis.signals().into_iter().enumerate() {
                    let amp = signal_vector(outcome).inner(&signal_vector(s)) * h;
                    let record = tensor(&StateVector::basis(2, b_index), &StateVector::basis(2, k));
                    let term = tensor_all(&[&signal_vector(outcome), &record]).scale(amp);
                    acc = &acc + &term;
                }
            }
            acc
        };
        let readout = Povm::computational(4);
        Self::from_isometry(image(Signal::X), image(Signal::Y), readout.clone(), readout)
            .expect("intercept-resend images are orthonormal")
    }
}

pub(crate) fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let amps = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::unnormalized(amps).expect("positive dimension")
}

/// Full unitary on signal ⊗ probe whose columns for `|x⟩⊗|ψ₀⟩` and
/// `|y⟩⊗|ψ₀⟩` are the stored images. Remaining columns come from
/// orthonormal completion against the standard basis in index order.
pub fn unitary_extension(s: &impl PostInteraction) -> Result<Operator> {
    let res = s.inner_product_residual();
    if res > TOL.spectral {
        return Err(Error::NotIsometric(res));
    }
    let p = s.probe_dim();
    let dim = 2 * p;
    let fixed = [s.post(Signal::X).clone(), s.post(Signal::Y).clone()];
    let basis = complete_basis(&fixed, dim);
    if basis.len() != dim {
        return Err(Error::Degenerate);
    }
    let mut rest = basis.into_iter().skip(2);
    let columns: Vec<StateVector> = (0..dim)
        .map(|col| match col {
            0 => fixed[0].clone(),
            c if c == p => fixed[1].clone(),
            _ => rest.next().expect("completion supplies remaining columns"),
        })
        .collect();
    Operator::from_columns(&columns)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexArray {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexArray {
    fn from_vector(v: &StateVector) -> Self {
        Self { re: v.amps().iter().map(|a| a.re).collect(), im: v.amps().iter().map(|a| a.im).collect() }
    }

    fn to_vector(&self) -> Result<StateVector> {
        if self.re.len() != self.im.len() {
            return invalid("real and imaginary parts differ in length");
        }
        StateVector::unnormalized(self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    fn from_operator(op: &Operator) -> Self {
        let n = op.dim();
        let rows = |f: fn(&C64) -> f64| (0..n).map(|i| (0..n).map(|j| f(&op[(i, j)])).collect()).collect();
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    fn to_operator(&self) -> Result<Operator> {
        let n = self.re.len();
        if self.im.len() != n || self.re.iter().chain(&self.im).any(|r| r.len() != n) {
            return invalid("POVM element is not a square matrix");
        }
        Operator::from_rows(
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| C64::new(self.re[i][j], self.im[i][j]))
                .collect(),
        )
    }
}

/// Serialized form of a [`Strategy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub probe_dim: usize,
    /// Keyed by signal name (`x`, `y`, `u`, `v`).
    pub images: BTreeMap<String, ComplexArray>,
    pub meas_xy: Vec<MatrixDoc>,
    pub meas_uv: Vec<MatrixDoc>,
}

impl From<&Strategy> for StrategyDoc {
    fn from(s: &Strategy) -> Self {
        Self {
            probe_dim: s.probe_dim,
            images: Signal::ALL
                .iter()
                .map(|&sig| (sig.name().to_string(), ComplexArray::from_vector(s.post(sig))))
                .collect(),
            meas_xy: s.meas_xy.elements().iter().map(MatrixDoc::from_operator).collect(),
            meas_uv: s.meas_uv.elements().iter().map(MatrixDoc::from_operator).collect(),
        }
    }
}

impl TryFrom<&StrategyDoc> for Strategy {
    type Error = Error;

    fn try_from(doc: &StrategyDoc) -> Result<Self> {
        let image = |s: Signal| -> Result<StateVector> {
            doc.images
                .get(s.name())
                .ok_or_else(|| Error::InvalidInput(format!("missing image for signal {s}")))?
                .to_vector()
        };
        let povm = |elems: &[MatrixDoc]| -> Result<Povm> {
            Povm::new(elems.iter().map(MatrixDoc::to_operator).collect::<Result<_>>()?)
        };
        Strategy::new(
            doc.probe_dim,
            [image(Signal::X)?, image(Signal::Y)?, image(Signal::U)?, image(Signal::V)?],
            povm(&doc.meas_xy)?,
            povm(&doc.meas_uv)?,
        )
    }
}

impl Strategy {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StrategyDoc::from(self)).expect("strategy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StrategyDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("strategy JSON: {e}")))?;
        Strategy::try_from(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{partial_trace, DensityMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn assert_invariants(p: &ProbeInteraction) {
        let report = verify_constraints(p);
        assert!(report.passed(), "({}, {}): {:?}", p.d_xy, p.d_uv, report.failures());
        for s in Signal::ALL {
            let d = if s.basis() == Basis::XY { p.d_xy } else { p.d_uv };
            let bob = p.bob_state(s);
            let expect = &signal_projector(s).scale_real(1.0 - d) + &signal_projector(s.partner()).scale_real(d);
            assert!(bob.max_abs_diff(&expect) < EPS, "Bob marginal for {s}");
        }
        assert!(p.inner_product_residual() < EPS);
    }

    #[test]
    fn zero_disturbance_leaves_signal_untouched() {
        let p = build_optimal(0.0, 0.0).unwrap();
        let [phi_plus, ..] = bell_basis(Basis::XY);
        let expect = tensor(&signal_vector(Signal::X), &phi_plus);
        assert!(p.post(Signal::X).max_abs_diff(&expect) < EPS);
        assert!(p.bob_state(Signal::X).max_abs_diff(&signal_projector(Signal::X)) < EPS);
    }

    #[test]
    fn bob_marginal_at_one_tenth() {
        let p = build_optimal(0.1, 0.1).unwrap();
        let rho = DensityMatrix::pure(p.post(Signal::X)).unwrap();
        let bob = partial_trace(&rho, &[2, 2, 2], &[0]).unwrap();
        assert!(bob.as_operator().max_abs_diff(&Operator::diag_real(&[0.9, 0.1])) < EPS);
    }

    #[test]
    fn asymmetric_constraints_hold() {
        let report = verify_constraints(&build_optimal(0.2, 0.1).unwrap());
        for name in ["xy_orthogonality", "real_part", "imaginary_part"] {
            assert!(report.get(name).unwrap() < EPS, "{name}");
        }
        assert!(verify_constraints(&build_optimal(0.1, 0.3).unwrap()).passed());
    }

    #[test]
    fn invariants_on_grid() {
        for i in 0..=20 {
            for j in 0..=20 {
                assert_invariants(&build_optimal(i as f64 / 40.0, j as f64 / 40.0).unwrap());
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(build_optimal(-0.1, 0.1).is_err());
        assert!(build_optimal(0.1, 0.51).is_err());
        assert!(build_ansatz(-0.1, 0.0).is_err());
        assert!(build_ansatz(0.0, 1.6).is_err());
    }

    #[test]
    fn injected_violation_is_reported() {
        let p = build_optimal(0.1, 0.1).unwrap();
        let mut zeta = p.zeta.clone();
        // ξ_x ⊥ ζ_y, so this keeps ζ_y normalized with ⟨ξ_x|ζ_y⟩ = 0.1
        let bent = &zeta[Signal::Y.index()].scale_real((1.0f64 - 0.01).sqrt()) + &p.xi(Signal::X).scale_real(0.1);
        zeta[Signal::Y.index()] = bent;
        let hand = ProbeInteraction::from_relative_states(0.1, 0.1, p.xi.clone(), zeta);
        let report = verify_constraints(&hand);
        assert!((report.get("xi_x_zeta_y").unwrap() - 0.1).abs() < 1e-12);
        assert!(!report.passed());
        assert!(report.failures().contains(&"xi_x_zeta_y"));
    }

    #[test]
    fn ansatz_disturbance_endpoints() {
        assert_eq!(ansatz_disturbance(0.0, 0.0), 0.0);
        let half = std::f64::consts::FRAC_PI_2;
        assert!((ansatz_disturbance(half, half) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ansatz_satisfies_constraints() {
        assert_invariants(&build_ansatz(0.3, 0.5).unwrap());
        let half = std::f64::consts::FRAC_PI_2;
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (half, half), (1.2, 0.4), (0.7, 0.7)] {
            assert_invariants(&build_ansatz(a, b).unwrap());
        }
    }

    #[test]
    fn unitary_extension_reproduces_images() {
        for (dxy, duv) in [(0.0, 0.0), (0.1, 0.1), (0.2, 0.1), (0.5, 0.3)] {
            let p = build_optimal(dxy, duv).unwrap();
            let u = unitary_extension(&p).unwrap();
            assert!(u.unitarity_residual() < 1e-10);
            let psi0 = StateVector::basis(4, 0);
            for s in Signal::ALL {
                let out = u.apply(&tensor(&signal_vector(s), &psi0));
                assert!(out.max_abs_diff(p.post(s)) < 1e-10, "{s}");
            }
        }
    }

    #[test]
    fn identity_strategy_extends_to_identity_on_inputs() {
        let s = Strategy::identity(2);
        let u = unitary_extension(&s).unwrap();
        let psi0 = StateVector::basis(2, 0);
        for sig in Signal::ALL {
            let input = tensor(&signal_vector(sig), &psi0);
            assert!(u.apply(&input).max_abs_diff(&input) < 1e-15);
        }
    }

    #[test]
    fn unitary_extension_rejects_non_isometry() {
        let p = build_optimal(0.1, 0.1).unwrap();
        let mut bad = p.clone();
        bad.post[1] = p.post[0].clone();
        assert!(matches!(unitary_extension(&bad), Err(Error::NotIsometric(_))));
    }

    #[test]
    fn strategy_json_round_trip_is_bit_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in [build_optimal(0.2, 0.1).unwrap().optimal_strategy(), Strategy::random(4, 4, &mut rng)] {
            let text = s.to_json();
            let back = Strategy::from_json(&text).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn strategy_json_rejects_garbage() {
        assert!(Strategy::from_json("{}").is_err());
        let mut doc = StrategyDoc::from(&Strategy::identity(2));
        doc.images.remove("u");
        assert!(Strategy::try_from(&doc).is_err());
    }

    #[test]
    fn special_strategies() {
        let keep = Strategy::keep_qubit();
        assert!((keep.disturbance(Basis::XY) - 0.5).abs() < EPS);
        assert!((keep.disturbance(Basis::UV) - 0.5).abs() < EPS);
        let ir = Strategy::intercept_resend();
        assert!((ir.average_disturbance() - 0.25).abs() < EPS);
        assert!(Strategy::identity(4).average_disturbance().abs() < EPS);
    }

    #[test]
    fn random_strategies_are_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2, 4] {
            for _ in 0..20 {
                assert!(Strategy::random(dim, dim, &mut rng).inner_product_residual() < 1e-12);
            }
        }
    }
}
