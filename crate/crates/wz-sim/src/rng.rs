//! Counter-based random number generation.
//!
//! Every draw is a pure function of `(seed, stream, level, index)`, so values
//! are independent of evaluation order and identical under parallel generation.
//! The mixer is splitmix64 applied in sequence over the key words; normals come
//! from a Box-Muller pair on the mixed bits.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapses the addressing tuple into one well-mixed 64-bit word.
#[inline]
fn mix_key(seed: u64, stream: u64, level: u64, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stream.wrapping_mul(GAMMA));
    h = splitmix64(h ^ level.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
    h = splitmix64(h ^ index.wrapping_mul(0x1656_67b1_9e37_79f9));
    h
}

/// Uniform in (0, 1]; the +1 offset keeps ln() finite.
#[inline]
fn to_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw addressed by `(seed, stream, level, index)`.
pub fn normal(seed: u64, stream: u64, level: u64, index: u64) -> f64 {
    let h = mix_key(seed, stream, level, index);
    let u1 = to_unit(h);
    let u2 = to_unit(splitmix64(h ^ 0x5851_f42d_4c95_7f2d));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Deterministic sub-seed derivation, e.g. one seed per Monte-Carlo path.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix_key(seed, 0xffff_ffff_ffff_fffe, 0, index)
}

/// Iterator-friendly uniform draw in [0, 1), same addressing scheme.
pub fn uniform(seed: u64, stream: u64, level: u64, index: u64) -> f64 {
    let h = mix_key(seed, stream, level, index ^ 0x0f0f_0f0f_0f0f_0f0f);
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}
