//! The conjugate signal bases, their Bell bases, and the Poincaré-sphere
//! picture of qubit polarization states.
//!
//! The xy basis is the computational basis; `u = (x + y)/√2` and
//! `v = (x − y)/√2`. On the Poincaré sphere the two linear-polarization
//! bases lie on the equator, 90° apart, and circular polarizations sit at
//! the poles. Public rotation angles are Poincaré angles, twice the
//! corresponding rotation in the plane of polarization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hilbert::{tensor, DensityMatrix, Operator, StateVector, C64};
use crate::tolerance::TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    XY,
    UV,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::XY, Basis::UV];

    pub fn conjugate(self) -> Basis {
        match self {
            Basis::XY => Basis::UV,
            Basis::UV => Basis::XY,
        }
    }

    /// The two signals of this basis, bit 0 first.
    pub fn signals(self) -> [Signal; 2] {
        match self {
            Basis::XY => [Signal::X, Signal::Y],
            Basis::UV => [Signal::U, Signal::V],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::XY => "xy",
            Basis::UV => "uv",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Signal {
    X,
    Y,
    U,
    V,
}

impl Signal {
    pub const ALL: [Signal; 4] = [Signal::X, Signal::Y, Signal::U, Signal::V];

    pub fn basis(self) -> Basis {
        match self {
            Signal::X | Signal::Y => Basis::XY,
            Signal::U | Signal::V => Basis::UV,
        }
    }

    /// Key bit carried by the signal: x and u encode 0, y and v encode 1.
    pub fn bit(self) -> usize {
        match self {
            Signal::X | Signal::U => 0,
            Signal::Y | Signal::V => 1,
        }
    }

    pub fn from_basis_bit(basis: Basis, bit: usize) -> Signal {
        basis.signals()[bit & 1]
    }

    /// The other signal of the same basis.
    pub fn partner(self) -> Signal {
        match self {
            Signal::X => Signal::Y,
            Signal::Y => Signal::X,
            Signal::U => Signal::V,
            Signal::V => Signal::U,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Signal::X => "x",
            Signal::Y => "y",
            Signal::U => "u",
            Signal::V => "v",
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unit vector for a signal in the computational (xy) representation.
pub fn signal_vector(s: Signal) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match s {
        Signal::X => [1.0, 0.0],
        Signal::Y => [0.0, 1.0],
        Signal::U => [h, h],
        Signal::V => [h, -h],
    };
    StateVector::from_real(&amps).expect("signal vectors are normalized")
}

/// Projector `|s><s|`, Bob's outcome operator for signal `s`.
pub fn signal_projector(s: Signal) -> Operator {
    signal_vector(s).projector()
}

/// Bell basis of two qubits relative to a single-qubit basis `(a, b)`:
/// `[Φ⁺, Φ⁻, Ψ⁺, Ψ⁻]` with `Φ± = (aa ± bb)/√2` and `Ψ± = (ab ± ba)/√2`.
pub fn bell_basis(basis: Basis) -> [StateVector; 4] {
    let [s0, s1] = basis.signals();
    let (a, b) = (signal_vector(s0), signal_vector(s1));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (aa, bb, ab, ba) = (tensor(&a, &a), tensor(&b, &b), tensor(&a, &b), tensor(&b, &a));
    [
        h * &(&aa + &bb),
        h * &(&aa - &bb),
        h * &(&ab + &ba),
        h * &(&ab - &ba),
    ]
}

/// Point in the Poincaré ball. `n1` is the x/y (horizontal/vertical)
/// component, `n2` the u/v (diagonal) component, `n3` the circular
/// component along the polar axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl BlochVector {
    pub fn new(n1: f64, n2: f64, n3: f64) -> Result<Self> {
        let v = Self { n1, n2, n3 };
        if v.norm() > 1.0 + TOL.algebraic {
            return invalid(format!("Bloch vector norm {} exceeds one", v.norm()));
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        (self.n1 * self.n1 + self.n2 * self.n2 + self.n3 * self.n3).sqrt()
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.n1 * o.n1 + self.n2 * o.n2 + self.n3 * o.n3
    }

    /// Rotation about the polar axis by a Poincaré angle.
    pub fn rotated(&self, angle: f64) -> BlochVector {
        let (s, c) = angle.sin_cos();
        BlochVector { n1: c * self.n1 - s * self.n2, n2: s * self.n1 + c * self.n2, n3: self.n3 }
    }
}

/// Poincaré vector of a qubit state, `ρ = (1 + n1 σz + n2 σx + n3 σy)/2`.
pub fn bloch_of(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return invalid(format!("Poincaré vector needs a qubit state, got dimension {}", rho.dim()));
    }
    Ok(bloch_of_operator(rho.as_operator()))
}

pub(crate) fn bloch_of_operator(rho: &Operator) -> BlochVector {
    let off = rho[(0, 1)];
    BlochVector { n1: rho[(0, 0)].re - rho[(1, 1)].re, n2: 2.0 * off.re, n3: -2.0 * off.im }
}

/// Inverse of [`bloch_of`].
pub fn state_of(n: &BlochVector) -> Result<DensityMatrix> {
    if n.norm() > 1.0 + TOL.algebraic {
        return invalid(format!("Bloch vector norm {} exceeds one", n.norm()));
    }
    Ok(DensityMatrix::trusted(state_operator(n)))
}

pub(crate) fn state_operator(n: &BlochVector) -> Operator {
    let off = C64::new(n.n2, -n.n3) * 0.5;
    Operator::from_rows(vec![
        C64::new(0.5 * (1.0 + n.n1), 0.0),
        off,
        off.conj(),
        C64::new(0.5 * (1.0 - n.n1), 0.0),
    ])
    .expect("2×2")
}

/// Rotation of the Poincaré sphere about its polar axis by `angle`
/// radians. In the plane of polarization this is a rotation by
/// `angle / 2`; the global phase `e^{i angle/2}` makes the map a
/// representation with period 2π, so four quarter turns give exactly the
/// identity.
pub fn polar_rotation(angle: f64) -> Operator {
    plane_rotation(0.5 * angle).scale(C64::from_polar(1.0, 0.5 * angle))
}

/// Real rotation by `theta` in the plane of polarization.
pub fn plane_rotation(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_real_rows(&[&[c, -s], &[s, c]]).expect("2×2")
}

/// Single-qubit observable `|θ><θ| − |θ⊥><θ⊥|` for a polarizer at plane
/// angle `theta` from x.
pub fn polarization_observable(theta: f64) -> Operator {
    let (s, c) = (2.0 * theta).sin_cos();
    Operator::from_real_rows(&[&[c, s], &[s, -c]]).expect("2×2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{partial_trace, ONE, ZERO};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn signal_vectors() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(signal_vector(Signal::X).amps(), &[ONE, ZERO]);
        assert!(signal_vector(Signal::U).max_abs_diff(&StateVector::from_real(&[h, h]).unwrap()) == 0.0);
        let (u, v) = (signal_vector(Signal::U), signal_vector(Signal::V));
        assert_eq!(u.inner(&v), ZERO);
        // x = (u + v)/√2, y = (u − v)/√2
        let x = h * &(&u + &v);
        let y = h * &(&u - &v);
        assert!(x.max_abs_diff(&signal_vector(Signal::X)) < 1e-15);
        assert!(y.max_abs_diff(&signal_vector(Signal::Y)) < 1e-15);
    }

    #[test]
    fn bases_are_conjugate() {
        for i in [Signal::X, Signal::Y] {
            for j in [Signal::U, Signal::V] {
                let o = signal_vector(i).inner(&signal_vector(j)).norm_sqr();
                assert!((o - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_basis_vectors() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let xy = bell_basis(Basis::XY);
        assert!(xy[0].max_abs_diff(&StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap()) < 1e-15);
        assert!(xy[3].max_abs_diff(&StateVector::from_real(&[0.0, h, -h, 0.0]).unwrap()) < 1e-15);
        let uv = bell_basis(Basis::UV);
        assert!(uv[0].max_abs_diff(&xy[0]) < 1e-15);
        let half = Operator::identity(2).scale_real(0.5);
        for set in [&xy, &uv] {
            for (i, a) in set.iter().enumerate() {
                for (j, b) in set.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((a.inner(b).re - expect).abs() < 1e-12);
                }
                let rho = DensityMatrix::pure(a).unwrap();
                for keep in [0, 1] {
                    let r = partial_trace(&rho, &[2, 2], &[keep]).unwrap();
                    assert!(r.as_operator().max_abs_diff(&half) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn poincare_vectors_of_signals() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(bloch_of(&mixed).unwrap(), BlochVector { n1: 0.0, n2: 0.0, n3: 0.0 });
        let nx = bloch_of(&DensityMatrix::pure(&signal_vector(Signal::X)).unwrap()).unwrap();
        let nu = bloch_of(&DensityMatrix::pure(&signal_vector(Signal::U)).unwrap()).unwrap();
        assert!((nx.norm() - 1.0).abs() < 1e-12 && (nu.norm() - 1.0).abs() < 1e-12);
        assert!(nx.dot(&nu).abs() < 1e-12);
        assert!(nx.n3.abs() < 1e-15 && nu.n3.abs() < 1e-15);
        // the four signals sit at 90° spacing on the equator
        for s in Signal::ALL {
            let n = bloch_of(&DensityMatrix::pure(&signal_vector(s)).unwrap()).unwrap();
            assert!(n.n3.abs() < 1e-15);
            let rotated = n.rotated(FRAC_PI_2);
            let next = match s {
                Signal::X => Signal::U,
                Signal::U => Signal::Y,
                Signal::Y => Signal::V,
                Signal::V => Signal::X,
            };
            let m = bloch_of(&DensityMatrix::pure(&signal_vector(next)).unwrap()).unwrap();
            assert!((rotated.dot(&m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_state_poincare_norm() {
        let rho = DensityMatrix::new(Operator::diag_real(&[0.8, 0.2])).unwrap();
        let n = bloch_of(&rho).unwrap();
        assert!((n.norm() - 0.6).abs() < 1e-15 && n.n3 == 0.0);
    }

    #[test]
    fn state_of_rejects_outside_ball() {
        assert!(state_of(&BlochVector { n1: 1.0, n2: 0.1, n3: 0.0 }).is_err());
        assert!(BlochVector::new(0.0, 0.0, 1.1).is_err());
    }

    #[test]
    fn polar_rotations() {
        assert!(polar_rotation(0.0).max_abs_diff(&Operator::identity(2)) < 1e-15);
        let r = polar_rotation(FRAC_PI_2);
        assert!(r.is_unitary());
        let rotated = r.matmul(&signal_projector(Signal::X)).matmul(&r.adjoint());
        assert!(rotated.max_abs_diff(&signal_projector(Signal::U)) < 1e-15);
        let four = (0..4).fold(Operator::identity(2), |acc, _| acc.matmul(&r));
        assert!(four.max_abs_diff(&Operator::identity(2)) < 1e-12);
        assert!(polar_rotation(2.0 * PI).max_abs_diff(&Operator::identity(2)) < 1e-12);
        let sum = polar_rotation(0.3).matmul(&polar_rotation(0.9));
        assert!(sum.max_abs_diff(&polar_rotation(1.2)) < 1e-15);
        // circular states are fixed up to phase
        let circ = StateVector::new(vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)]).unwrap();
        let after = r.apply(&circ);
        assert!((after.inner(&circ).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_permutes_signal_projectors() {
        let set: Vec<Operator> = Signal::ALL.iter().map(|&s| signal_projector(s)).collect();
        for k in 0..4 {
            let r = polar_rotation(k as f64 * FRAC_PI_2);
            for p in &set {
                let q = r.matmul(p).matmul(&r.adjoint());
                assert!(set.iter().any(|s| s.max_abs_diff(&q) < 1e-12));
            }
        }
    }
}
