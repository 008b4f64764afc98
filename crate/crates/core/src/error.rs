use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root finding did not converge for k={k} at {precision_bits} bits: {detail}")]
    NonConvergence {
        k: usize,
        precision_bits: u32,
        detail: String,
    },

    #[error(
        "precision exhausted at n={n} with {precision_bits} bits \
         (rounding gap {rounding_gap:.3e}); try --precision {suggested_bits}"
    )]
    PrecisionExhausted {
        n: u64,
        precision_bits: u32,
        rounding_gap: f64,
        suggested_bits: u32,
    },

    #[error(
        "Vandermonde solve residual 2^{residual_log2:.1} exceeds tolerance 2^{tolerance_log2:.1}"
    )]
    IllConditioned {
        residual_log2: f64,
        tolerance_log2: f64,
    },

    #[error("diagonal calibration failed: {0}")]
    CalibrationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
