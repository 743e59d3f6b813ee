//! Cryptographic consequences of the optimal attack.

use std::f64::consts::{LN_2, SQRT_2};
use std::io::{self, Write};

use serde::Serialize;

use crate::bases::{polarization_observable, Basis};
use crate::bounds::{gain_bound, info_bound, info_bound_folded, phi};
use crate::error::{invalid, Result};
use crate::hilbert::{kron, Operator, StateVector};
use crate::measurement::{mutual_information, outcome_stats};
use crate::optimizer::{search, SearchConfig};
use crate::probe::{build_optimal, PostInteraction, Strategy};
use crate::symmetry::BobChannel;

fn check_half(d: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&d) {
        return invalid(format!("disturbance must lie in [0, 0.5], got {d}"));
    }
    Ok(())
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * x.ln() }
}

/// Alice–Bob information over a binary symmetric channel with error `d`,
/// `ln 2 + d ln d + (1−d) ln(1−d)`.
pub fn i_ab(d: f64) -> Result<f64> {
    check_half(d)?;
    Ok((LN_2 + xlnx(d) + xlnx(1.0 - d)).max(0.0))
}

/// The same quantity written as `½ φ(1 − 2d)`.
pub fn i_ab_phi_form(d: f64) -> Result<f64> {
    check_half(d)?;
    Ok(0.5 * phi(1.0 - 2.0 * d)?)
}

/// `2√2 (1 − 2d)`.
pub fn chsh_formula(d: f64) -> Result<f64> {
    check_half(d)?;
    Ok(2.0 * SQRT_2 * (1.0 - 2.0 * d))
}

/// Disturbance beyond which Eve knows at least as much as Bob.
pub const THRESHOLD: f64 = 0.5 - SQRT_2 / 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub closed_form: f64,
    /// Root of `i_ab(d) = info_bound(d)`.
    pub bisection: f64,
    /// Root of `chsh_formula(d) = 2`.
    pub chsh_root: f64,
}

impl Threshold {
    pub fn max_disagreement(&self) -> f64 {
        let v = [self.closed_form, self.bisection, self.chsh_root];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn threshold() -> Threshold {
    let bisection = bisect(1e-9, 0.5 - 1e-9, |d| i_ab(d).expect("in range") - info_bound(d).expect("in range"));
    let chsh_root = bisect(0.0, 0.5, |d| chsh_formula(d).expect("in range") - 2.0);
    Threshold { closed_form: THRESHOLD, bisection, chsh_root }
}

fn singlet() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_real(&[0.0, h, -h, 0.0]).expect("normalized")
}

/// Two-qubit state after Bob's half of `ρ_AB` passes through `ch`.
fn through_bob(rho: &Operator, ch: &BobChannel) -> Operator {
    let mut out = Operator::zeros(4);
    for a in 0..2 {
        for a2 in 0..2 {
            let block = Operator::from_fn(2, |i, j| rho[(2 * a + i, 2 * a2 + j)]);
            let mapped = ch.apply_operator(&block);
            for b in 0..2 {
                for b2 in 0..2 {
                    out[(2 * a + b, 2 * a2 + b2)] = mapped[(b, b2)];
                }
            }
        }
    }
    out
}

/// Polarizer angles (plane angles, radians): Alice's two settings then Bob's.
pub const CHSH_ANGLES: ([f64; 2], [f64; 2]) = (
    [std::f64::consts::FRAC_PI_4, 0.0],
    [std::f64::consts::FRAC_PI_8, 3.0 * std::f64::consts::FRAC_PI_8],
);

/// CHSH value when one half of a singlet reaches Bob through `ch`.
pub fn chsh_for_channel(ch: &BobChannel) -> f64 {
    let rho = through_bob(&singlet().projector(), ch);
    let corr = |a: f64, b: f64| {
        kron(&polarization_observable(a), &polarization_observable(b)).matmul(&rho).trace().re
    };
    let ([a1, a2], [b1, b2]) = CHSH_ANGLES;
    (corr(a1, b1) + corr(a1, b2) + corr(a2, b1) - corr(a2, b2)).abs()
}

/// CHSH value with Bob's half of a singlet intercepted by the optimal
/// attack at error rate `d` in both bases.
pub fn chsh_from_state(d: f64) -> Result<f64> {
    check_half(d)?;
    Ok(chsh_for_channel(&BobChannel::of(&build_optimal(d, d)?)))
}

/// One point of the information–disturbance curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub d: f64,
    pub g_bound: f64,
    pub i_eve_nats: f64,
    pub i_eve_bits: f64,
    pub i_ab_nats: f64,
    pub s_chsh: f64,
    pub secure: bool,
}

impl TradeoffRow {
    /// Row for the optimal attack, from the closed forms.
    pub fn optimal(d: f64) -> Result<Self> {
        let i_eve = info_bound(d)?;
        Ok(Self::assemble(d, i_eve, i_ab(d)?, chsh_formula(d)?))
    }

    fn assemble(d: f64, i_eve: f64, i_ab_nats: f64, s_chsh: f64) -> Self {
        Self {
            d,
            g_bound: gain_bound(d.clamp(0.0, 1.0)).expect("clamped"),
            i_eve_nats: i_eve,
            i_eve_bits: i_eve / LN_2,
            i_ab_nats,
            s_chsh,
            secure: i_ab_nats > i_eve,
        }
    }
}

/// Basis-averaged information and disturbance of a strategy, with the
/// CHSH value of its Bob channel.
pub fn strategy_row(s: &Strategy) -> Result<TradeoffRow> {
    let mut i = 0.0;
    for b in Basis::ALL {
        i += 0.5 * mutual_information(&outcome_stats(s, b, s.measurement(b))?);
    }
    let d = s.average_disturbance().clamp(0.0, 0.5);
    Ok(TradeoffRow::assemble(d, i, i_ab(d)?, chsh_for_channel(&BobChannel::of(s))))
}

/// Eve measures each signal in a random basis and resends what she saw.
pub fn intercept_resend() -> TradeoffRow {
    strategy_row(&Strategy::intercept_resend()).expect("fixed strategy is valid")
}

/// Rows at `d_min, d_min + step, …` up to `d_max`; the last row is
/// `d_max` itself when the step does not land on it.
pub fn tradeoff_curve(d_min: f64, d_max: f64, step: f64) -> Result<Vec<TradeoffRow>> {
    if !(0.0 <= d_min && d_min < d_max && d_max <= 0.5) {
        return invalid(format!("need 0 ≤ d_min < d_max ≤ 0.5, got [{d_min}, {d_max}]"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return invalid(format!("step must be positive, got {step}"));
    }
    let n = ((d_max - d_min) / step + 1e-9).floor() as usize;
    let mut ds: Vec<f64> = (0..=n).map(|k| (d_min + k as f64 * step).min(d_max)).collect();
    if d_max - ds[ds.len() - 1] > 1e-12 {
        ds.push(d_max);
    }
    ds.into_iter().map(TradeoffRow::optimal).collect()
}

/// Numerically optimized point for a restricted probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NumericalPoint {
    pub d: f64,
    pub i_eve_nats: f64,
    pub gap_to_bound: f64,
    pub label: &'static str,
}

/// Information–disturbance points found by the optimizer with `base`
/// settings at each target error rate.
pub fn numerical_curve(d_grid: &[f64], base: &SearchConfig) -> Result<Vec<NumericalPoint>> {
    d_grid
        .iter()
        .map(|&d| {
            let r = search(&SearchConfig { d_target: d, ..base.clone() })?;
            Ok(NumericalPoint {
                d: r.d_achieved,
                i_eve_nats: r.i_achieved,
                gap_to_bound: info_bound_folded(r.d_achieved) - r.i_achieved,
                label: "numerical",
            })
        })
        .collect()
}

/// C-style `%.{sig}g`.
pub fn format_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sig = sig.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to `sig` significant digits.
pub fn round_sig(x: f64, sig: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", sig.max(1) - 1, x).parse().expect("round trip")
}

pub const CSV_HEADER: &str = "d,g_bound,i_eve_nats,i_eve_bits,i_ab_nats,s_chsh,secure";

pub fn write_csv(rows: &[TradeoffRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let f = |x: f64| format_g(x, 12);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            f(r.d),
            f(r.g_bound),
            f(r.i_eve_nats),
            f(r.i_eve_bits),
            f(r.i_ab_nats),
            f(r.s_chsh),
            r.secure
        )?;
    }
    Ok(())
}

/// Rows with every number rounded to 12 significant digits.
pub fn rounded_rows(rows: &[TradeoffRow]) -> Vec<TradeoffRow> {
    rows.iter()
        .map(|r| TradeoffRow {
            d: round_sig(r.d, 12),
            g_bound: round_sig(r.g_bound, 12),
            i_eve_nats: round_sig(r.i_eve_nats, 12),
            i_eve_bits: round_sig(r.i_eve_bits, 12),
            i_ab_nats: round_sig(r.i_ab_nats, 12),
            s_chsh: round_sig(r.s_chsh, 12),
            secure: r.secure,
        })
        .collect()
}

pub fn write_json(rows: &[TradeoffRow], mut w: impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, &rounded_rows(rows))?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_ab_forms_agree() {
        assert!((i_ab(0.0).unwrap() - LN_2).abs() < 1e-15);
        assert!(i_ab(0.5).unwrap().abs() < 1e-15);
        for k in 0..=50 {
            let d = k as f64 / 100.0;
            assert!((i_ab(d).unwrap() - i_ab_phi_form(d).unwrap()).abs() < 1e-12);
        }
        assert!(i_ab(-0.1).is_err() && i_ab(0.6).is_err());
    }

    #[test]
    fn i_ab_at_threshold() {
        let d: f64 = 0.14644661;
        // ln 2 + d ln d + (1−d) ln(1−d) by hand
        let hand = LN_2 + d * d.ln() + (1.0 - d) * (1.0 - d).ln();
        assert!((i_ab(d).unwrap() - hand).abs() < 1e-15);
        assert!((i_ab(d).unwrap() - 0.2766516488).abs() < 1e-9);
        assert!((i_ab(d).unwrap() - info_bound(d).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn threshold_triple() {
        let t = threshold();
        assert!((t.closed_form - 0.14644661).abs() < 1e-8);
        assert!(t.max_disagreement() < 1e-10, "{t:?}");
        assert_eq!(format!("{:.6}", t.bisection), "0.146447");
    }

    #[test]
    fn chsh_values() {
        assert!((chsh_formula(0.0).unwrap() - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((chsh_formula(THRESHOLD).unwrap() - 2.0).abs() < 1e-14);
        assert!(chsh_formula(0.5).unwrap().abs() < 1e-15);
        assert!((chsh_from_state(0.0).unwrap() - 2.8284271247).abs() < 1e-10);
        assert!((chsh_from_state(0.1).unwrap() - 2.2627417).abs() < 1e-7);
        assert!((chsh_from_state(0.25).unwrap() - SQRT_2).abs() < 1e-10);
        assert!(chsh_from_state(0.7).is_err());
    }

    #[test]
    fn chsh_state_matches_formula_on_grid() {
        for k in 0..=50 {
            let d = k as f64 / 100.0;
            assert!((chsh_from_state(d).unwrap() - chsh_formula(d).unwrap()).abs() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn intercept_resend_point() {
        let r = intercept_resend();
        assert!((r.d - 0.25).abs() < 1e-12);
        assert!((r.i_eve_nats - 0.5 * LN_2).abs() < 1e-12);
        assert!(r.i_eve_nats < info_bound(0.25).unwrap());
        assert!((r.s_chsh - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn curve_rows() {
        let rows = tradeoff_curve(0.0, 0.5, 0.01).unwrap();
        assert_eq!(rows.len(), 51);
        let first = rows[0];
        assert_eq!((first.d, first.g_bound, first.i_eve_nats), (0.0, 0.0, 0.0));
        assert!((first.i_ab_nats - LN_2).abs() < 1e-15 && first.secure);
        let last = rows[50];
        assert!((last.i_eve_nats - LN_2).abs() < 1e-15 && last.i_ab_nats.abs() < 1e-15 && !last.secure);
        assert!(rows.windows(2).all(|w| w[1].i_eve_nats > w[0].i_eve_nats && w[1].s_chsh < w[0].s_chsh));
        let flips = rows.windows(2).filter(|w| w[0].secure != w[1].secure).count();
        assert_eq!(flips, 1);
        let at = TradeoffRow::optimal(0.146447).unwrap();
        assert!((at.i_eve_nats - at.i_ab_nats).abs() < 1e-5 && (at.s_chsh - 2.0).abs() < 1e-4);
    }

    #[test]
    fn curve_range_checks() {
        assert!(tradeoff_curve(0.3, 0.2, 0.01).is_err());
        assert!(tradeoff_curve(0.0, 0.6, 0.01).is_err());
        assert!(tradeoff_curve(0.0, 0.5, 0.0).is_err());
        let rows = tradeoff_curve(0.0, 0.25, 0.1).unwrap();
        let ds: Vec<f64> = rows.iter().map(|r| r.d).collect();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds[3], 0.25);
    }

    #[test]
    fn g_formatting_matches_c() {
        // reference strings from printf("%.12g")
        let cases = [
            (0.0, "0"),
            (0.1, "0.1"),
            (0.192744757032, "0.192744757032"),
            (std::f64::consts::LN_2, "0.69314718056"),
            (2.0 * SQRT_2, "2.82842712475"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (123456789012345.0, "1.23456789012e+14"),
            (-0.25, "-0.25"),
            (100.0, "100"),
            (0.0001, "0.0001"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g(x, 12), s, "{x}");
        }
    }

    #[test]
    fn csv_layout() {
        let rows = tradeoff_curve(0.0, 0.5, 0.25).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0,0,0,0.69314718056,2.82842712475,true");
        assert!(lines[3].ends_with(",false"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_rounding() {
        assert_eq!(round_sig(0.1234567890123456, 12), 0.123456789012);
        let rows = tradeoff_curve(0.1, 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        write_json(&rows, &mut buf).unwrap();
        let back: Vec<serde_json::Value> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0]["i_eve_nats"].as_f64().unwrap(), 0.192744757022);
    }
}
