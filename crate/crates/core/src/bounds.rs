//! Information–disturbance bound formulas.
//!
//! With `φ(z) = (1+z)ln(1+z) + (1−z)ln(1−z)`, an eavesdropper who causes
//! error rate `D` in one basis can gain at most `2√(D(1−D))` and learn at
//! most `½ φ(2√(D(1−D)))` nats about signals sent in the conjugate basis.

use serde::Serialize;

use crate::error::{invalid, Result};

/// `φ(z)` for `z ∈ [0, 1]`, with `0·ln 0 = 0` at `z = 1`.
pub fn phi(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return invalid(format!("phi is defined on [0, 1], got {z}"));
    }
    Ok(phi_clamped(z))
}

/// `φ` with the argument clamped into `[0, 1]`; used where rounding may push
/// a computed gain a few ulps outside the interval.
pub(crate) fn phi_clamped(z: f64) -> f64 {
    let z = z.clamp(0.0, 1.0);
    let minus = if z >= 1.0 { 0.0 } else { (1.0 - z) * (-z).ln_1p() };
    (1.0 + z) * z.ln_1p() + minus
}

fn check_probability(d: f64, max: f64) -> Result<()> {
    if !(0.0..=max).contains(&d) {
        return invalid(format!("disturbance must lie in [0, {max}], got {d}"));
    }
    Ok(())
}

/// Largest information gain `G` compatible with disturbance `d` in the
/// conjugate basis: `2√(d(1−d))`.
pub fn gain_bound(d: f64) -> Result<f64> {
    check_probability(d, 1.0)?;
    Ok(gain_bound_unchecked(d))
}

pub(crate) fn gain_bound_unchecked(d: f64) -> f64 {
    (2.0 * (d * (1.0 - d)).max(0.0).sqrt()).min(1.0)
}

/// Largest mutual information (nats) compatible with disturbance `d`:
/// `½ φ(2√(d(1−d)))`, for `d ∈ [0, ½]`.
pub fn info_bound(d: f64) -> Result<f64> {
    check_probability(d, 0.5)?;
    Ok(info_bound_folded(d))
}

/// The same bound for any `d ∈ [0, 1]`. The expression is symmetric about
/// ½ and concave on the whole interval, so it also bounds strategies that
/// flip more than half of the bits.
pub fn info_bound_folded(d: f64) -> f64 {
    0.5 * phi_clamped(gain_bound_unchecked(d.clamp(0.0, 1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundPoint {
    pub d: f64,
    pub g_bound: f64,
    pub i_bound_nats: f64,
}

impl BoundPoint {
    pub fn at(d: f64) -> Result<Self> {
        Ok(Self { d, g_bound: gain_bound(d)?, i_bound_nats: info_bound(d)? })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    /// `(d, info_bound(d)/d)` pairs, from largest to smallest `d`.
    pub ratios: Vec<(f64, f64)>,
    pub monotone: bool,
    pub within_five_percent: bool,
}

impl SlopeReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.within_five_percent
    }
}

/// Checks that `info_bound(d)/d → 2` as `d → 0`.
pub fn small_d_slope_check() -> SlopeReport {
    let ratios: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&d| (d, info_bound_folded(d) / d))
        .collect();
    let monotone = ratios.windows(2).all(|w| (w[1].1 - 2.0).abs() < (w[0].1 - 2.0).abs());
    let within_five_percent = ratios.iter().all(|&(_, r)| (r - 2.0).abs() <= 0.1);
    SlopeReport { ratios, monotone, within_five_percent }
}

/// `φ(2√(x(1−x)))` without the ½.
fn phi_of_z(x: f64) -> f64 {
    phi_clamped(gain_bound_unchecked(x))
}

/// Second derivative of `φ(z(x))` in closed form, `(4/z³)(2z − ln((1+z)/(1−z)))`.
pub fn concavity_second_derivative(x: f64) -> f64 {
    let z = gain_bound_unchecked(x);
    4.0 / (z * z * z) * concavity_parenthesis(z)
}

/// `2z − ln((1+z)/(1−z))`, which vanishes at 0 and decreases for `0 < z < 1`.
pub fn concavity_parenthesis(z: f64) -> f64 {
    2.0 * z - (z.ln_1p() - (-z).ln_1p())
}

/// Derivative of [`concavity_parenthesis`]: `2 − 2/(1−z²)`.
pub fn concavity_parenthesis_slope(z: f64) -> f64 {
    2.0 - 2.0 / (1.0 - z * z)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub grid_step: f64,
    pub points: usize,
    pub max_second_difference: f64,
    pub max_closed_form: f64,
}

impl ConcavityReport {
    pub fn passed(&self) -> bool {
        self.max_second_difference <= 1e-8 && self.max_closed_form <= 0.0
    }
}

/// Second central differences of `x ↦ φ(2√(x(1−x)))` over the grid
/// `x = k·step` strictly inside `(0, ½)`, together with the closed-form
/// second derivative at the same points.
pub fn concavity_check(grid_step: f64) -> Result<ConcavityReport> {
    if !(grid_step > 0.0 && grid_step < 0.1) {
        return invalid(format!("grid step must lie in (0, 0.1), got {grid_step}"));
    }
    let h = grid_step;
    let n = (0.5 / h).floor() as usize;
    let mut max_diff = f64::NEG_INFINITY;
    let mut max_closed = f64::NEG_INFINITY;
    let mut points = 0;
    for k in 1..n {
        let x = k as f64 * h;
        if x + h > 0.5 + 1e-15 {
            break;
        }
        let d2 = (phi_of_z(x + h) - 2.0 * phi_of_z(x) + phi_of_z(x - h)) / (h * h);
        max_diff = max_diff.max(d2);
        max_closed = max_closed.max(concavity_second_derivative(x));
        points += 1;
    }
    Ok(ConcavityReport { grid_step, points, max_second_difference: max_diff, max_closed_form: max_closed })
}
