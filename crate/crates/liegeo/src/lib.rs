//! Normal sub-Riemannian geodesics on SO(n) from chains of Lie subalgebras.
//!
//! The crate is organized around a small stack of layers:
//!
//! * [`algebra`] — the real Lie algebra so(n) in the wedge basis
//!   `e_ij = e_i ∧ e_j`, with bracket, invariant scalar product, adjoint
//!   actions and the matrix exponential.
//! * [`filtration`] — nested chains of subalgebras `g_0 < … < g_n`, the
//!   orthogonal splittings `p_i`, bracket-generating hulls and a catalog of
//!   named chains (including the g2 chain on so(7)).
//! * [`flows`] — right-hand sides of the Euler/reconstruction systems and a
//!   fixed-step RK4 integrator with conservation monitors.
//! * [`geodesics`] — the closed-form product-of-exponentials solutions for
//!   normal geodesics and their homogeneous-space reductions.
//! * [`manakov`] — the Manakov operator, its polynomial integral family and
//!   the singular (sub-Riemannian) variants.
//! * [`integrals`] — conserved quantities and the polynomial first-integral
//!   search over graded monomial bases.

pub mod algebra;
pub mod filtration;
pub mod flows;
pub mod geodesics;
pub mod integrals;
pub mod manakov;

pub use algebra::{AlgebraElement, GroupElement, SoBasis};
pub use filtration::{Decomposition, Filtration, SrStructure};
pub use flows::Trajectory;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("level {0}: basis vectors are linearly dependent")]
    LinearlyDependent(usize),
    #[error("level {0} is not contained in level {1}")]
    NotNested(usize, usize),
    #[error("level {0} is not a subalgebra (closure defect {1:.3e})")]
    NotSubalgebra(usize, f64),
    #[error("level {0} does not strictly extend level {1}")]
    NotStrict(usize, usize),
    #[error("distribution is not bracket generating ({0} of {1} directions reached)")]
    NotBracketGenerating(usize, usize),
    #[error("consecutive parameters coincide: s_{0} = s_{1}")]
    EqualConsecutiveParameters(usize, usize),
    #[error("unknown catalog name `{0}`")]
    UnknownCatalog(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("integration diverged at t = {0}")]
    IntegrationDiverged(f64),
    #[error("initial momentum has a nonzero g_0 component (norm {0:.3e})")]
    InvalidMomentum(f64),
    #[error("unsupported homogeneous space `{0}`")]
    UnsupportedSpace(String),
    #[error("numerical rank is ambiguous (singular-value gap {0:.3e})")]
    NumericalRankAmbiguous(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Maps a closure over a slice, in parallel when the `parallel` feature is
/// enabled and sequentially otherwise.
pub(crate) fn map_batch<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use nalgebra::DVector;
    use rand::Rng;

    use crate::algebra::AlgebraElement;

    pub fn random_element(n: usize, rng: &mut impl Rng) -> AlgebraElement {
        let d = n * (n - 1) / 2;
        let coeffs = DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
        AlgebraElement::from_coeffs(n, coeffs).unwrap()
    }
}
