//! Stable seed derivation.
//!
//! Every randomized component derives its own seed from a master seed, a
//! domain tag and an index, so adding work items never perturbs the streams
//! of existing ones and results are reproducible across processes and thread
//! counts.

/// splitmix64 finalizer; a fixed, well-known bit mixer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(master, domain, index)`.
///
/// The domain tag keeps unrelated consumers (scenario noise, permutation
/// shuffles, fold shuffles, ...) on disjoint streams even for equal indices.
pub fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    let mut h = mix(master);
    for &b in domain.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ index)
}
