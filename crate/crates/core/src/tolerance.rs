/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Exact algebraic identities (normalization, orthogonality, linearity).
    pub algebraic: f64,
    /// Results that pass through an eigendecomposition or square root.
    pub spectral: f64,
    /// Results of numerical search.
    pub optimization: f64,
}

pub const TOL: Tolerances = Tolerances {
    algebraic: 1e-12,
    spectral: 1e-10,
    optimization: 1e-4,
};

/// Candidates whose residual norm falls below this during orthonormal
/// completion are treated as dependent and skipped.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-8;
