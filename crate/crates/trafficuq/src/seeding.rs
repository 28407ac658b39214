use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used to derive independent sub-seeds from a master seed.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for stream `stream` under `master`.
///
/// Parallel and serial execution derive identical seeds, so results do not
/// depend on scheduling.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut s = master ^ 0x6a09_e667_f3bc_c908;
    let a = splitmix64(&mut s);
    let mut t = a ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(&mut t)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
