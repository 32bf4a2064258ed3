//! Desk-scale computational tools for "free" rational points on smooth
//! projective hypersurfaces.
//!
//! The crate provides the computational objects behind a circle-method
//! analysis of point counting weighted by lattice skewness:
//!
//! * exact lattice invariants (determinants, duals, quotients, successive
//!   minima via LLL-preprocessed Fincke–Pohst enumeration),
//! * the freeness statistic `ℓ̃(x)` of a rational point, built from the
//!   largest successive minimum of the gradient-orthogonal lattice `Λ_x`,
//! * enumeration of primitive points of bounded Euclidean height on a
//!   hypersurface (meet-in-the-middle for diagonal forms),
//! * Gaussian theta sums over lattices with certified truncation error and
//!   the Gaussian majorant of the skewness indicator,
//! * major-arc machinery: Dirichlet approximation, arc membership, the
//!   exponential sum `S(β)` evaluated by two independent routes, and the
//!   major-arc integral against its closed-form prediction,
//! * the shrinking-lemma and multilinear counting probes, and the explicit
//!   freeness threshold `c_{d,n}`,
//! * truncated local densities `σ_p`, `σ_∞` for growth-rate checks.
//!
//! Exactness policy: every quantity that feeds a threshold comparison
//! (norms, determinants, minima) is computed in exact integer or rational
//! arithmetic; floating point appears only in final statistics, theta-style
//! sums with certified tails, and search pruning with padded bounds.
//!
//! See the `examples/` directory for one runnable demonstration per major
//! capability; the `freepoints` binary exposes the same operations as
//! reproducible experiments with CSV/JSON outputs.

pub mod circle;
pub mod densities;
pub mod enumerate;
pub mod forms;
pub mod freeness;
pub mod lattice;
pub mod minima;
pub mod rat;
pub mod reduce;
pub mod runner;
pub mod theta;

use num_bigint::BigInt;

/// Default node cap for enumeration cores.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("vector is not primitive (content {content})")]
    NotPrimitive { content: BigInt },
    #[error("zero gradient at a nonzero point: form is singular there")]
    SingularPoint,
    #[error("form rejected: {0}")]
    InvalidForm(String),
    #[error("point does not lie on the hypersurface")]
    NotOnHypersurface,
    #[error("height too small: statistic undefined for |x| <= 1")]
    HeightTooSmall,
    #[error("enumeration budget exceeded ({limit} nodes)")]
    BudgetExceeded { limit: u64 },
    #[error("exact enumeration instance too large for 128-bit arithmetic")]
    Overflow,
    #[error("vector not in lattice, or not primitive in it")]
    NotInLattice,
    #[error("major arcs overlap: C_f too small for this configuration")]
    ArcOverlap,
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shared node counter for enumeration loops. Charged in batches; errors
/// once the cap is crossed so callers can shrink the instance.
#[derive(Debug)]
pub struct Budget {
    cap: u64,
    used: std::sync::atomic::AtomicU64,
}

impl Budget {
    pub fn new(cap: u64) -> Self {
        Budget {
            cap,
            used: std::sync::atomic::AtomicU64::new(0),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn used(&self) -> u64 {
        self.used.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Charge `n` nodes; `Err(BudgetExceeded)` once the cap is crossed.
    pub fn charge(&self, n: u64) -> Result<()> {
        let prev = self
            .used
            .fetch_add(n, std::sync::atomic::Ordering::Relaxed);
        if prev.saturating_add(n) > self.cap {
            Err(Error::BudgetExceeded { limit: self.cap })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}
