use std::env;

use crate::scalar::Real;

/// Environment variable consulted by [`PrecisionContext::from_env`].
pub const PRECISION_ENV: &str = "ZP_PRECISION_BITS";

pub const DEFAULT_BITS: u32 = 256;
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;

/// Working precision and acceptance tolerance for a computation.
///
/// `tol` is stored as an `f64`; every residual in the crate is reported as
/// an `f64` as well (2^-128 and far smaller are representable).
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionContext {
    pub bits: u32,
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::new(DEFAULT_BITS)
    }
}

impl PrecisionContext {
    /// `bits` is clamped to at least 64; `tol = 2^(-bits/2)`.
    pub fn new(bits: u32) -> Self {
        let bits = bits.max(64);
        PrecisionContext {
            bits,
            tol: 2f64.powi(-((bits / 2) as i32)),
            max_terms: DEFAULT_MAX_TERMS,
        }
    }

    /// Context suited to `f64` evaluation (tol = 2^-30).
    pub fn float64() -> Self {
        PrecisionContext {
            bits: 64,
            tol: 2f64.powi(-30),
            max_terms: DEFAULT_MAX_TERMS,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        self.tol = tol;
        self
    }

    pub fn from_env() -> Self {
        env::var(PRECISION_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .map(Self::new)
            .unwrap_or_default()
    }

    /// Same tolerance policy at twice the bits.
    pub fn doubled(&self) -> Self {
        let mut c = Self::new(self.bits * 2);
        c.max_terms = self.max_terms;
        c
    }

    pub fn sqrt_tol(&self) -> f64 {
        self.tol.sqrt()
    }

    /// Unit roundoff of the working precision for scalar type `R`.
    pub fn eps<R: Real>(&self) -> f64 {
        let b = R::from_i64_prec(0, self.bits).precision().min(self.bits);
        2f64.powi(-(b as i32))
    }

    /// `2^shift·eps` computed in `R`, so it stays nonzero past the `f64` range.
    pub fn eps_r<R: Real>(&self, shift: i32) -> R {
        let b = R::from_i64_prec(0, self.bits).precision().min(self.bits);
        R::pow2(shift - b as i32, self.bits)
    }

    /// `2^shift·tol` computed in `R`; falls back to `2^(shift − bits/2)` when
    /// `tol` underflowed as an `f64`.
    pub fn tol_r<R: Real>(&self, shift: i32) -> R {
        if self.tol > 1e-290 {
            self.lift::<R>(self.tol) * R::pow2(shift, self.bits)
        } else {
            R::pow2(shift - (self.bits / 2) as i32, self.bits)
        }
    }

    pub fn lift<R: Real>(&self, x: f64) -> R {
        R::from_f64_prec(x, self.bits)
    }

    pub fn int<R: Real>(&self, x: i64) -> R {
        R::from_i64_prec(x, self.bits)
    }

    pub fn pi<R: Real>(&self) -> R {
        R::pi(self.bits)
    }
}
