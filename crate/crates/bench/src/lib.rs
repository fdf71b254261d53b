//! Shared fixtures for the benchmarks.

use parisi_core::Mixture;

/// `s^2` at zero field.
pub fn sk() -> Mixture {
    Mixture::pure(2, 0.0).expect("valid mixture")
}

/// `s^4` at zero field.
pub fn p4() -> Mixture {
    Mixture::pure(4, 0.0).expect("valid mixture")
}

/// `0.95 s^2 + 0.05 s^4` with field `h`.
pub fn frsb(h: f64) -> Mixture {
    Mixture::new([(2, 0.95), (4, 0.05)], h).expect("valid mixture")
}

/// The exemplars under a short label each.
pub fn exemplars() -> Vec<(&'static str, Mixture)> {
    vec![("sk", sk()), ("p4", p4()), ("frsb", frsb(0.0)), ("frsb_h0.1", frsb(0.1))]
}
