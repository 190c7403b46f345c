//! Global limits shared by the moment engines.

/// Default maximal X-degree accepted by the partition-sum engines.
pub const DEFAULT_DEGREE_CAP: usize = 16;

/// Maximal X-degree for the ladder-operator oracle when the algebra is not scalar.
pub const FOCK_MATRIX_DEGREE_CAP: usize = 8;

/// Environment variable overriding [`DEFAULT_DEGREE_CAP`].
pub const DEGREE_CAP_ENV: &str = "NCFREE_DEGREE_CAP";

/// Degree cap in effect: `NCFREE_DEGREE_CAP` when set to a positive integer,
/// otherwise [`DEFAULT_DEGREE_CAP`].
pub fn degree_cap() -> usize {
    std::env::var(DEGREE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DEGREE_CAP)
}

pub(crate) fn check_degree(degree: usize, cap: usize) -> crate::Result<()> {
    if degree > cap {
        Err(crate::NcError::DegreeCap { degree, cap })
    } else {
        Ok(())
    }
}
