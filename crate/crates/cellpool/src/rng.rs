//! Reproducible random streams.
//!
//! Everything random in this crate comes from ChaCha8, a counter-based
//! generator whose 64-bit stream id lets us carve one master seed into
//! independent substreams without any coordination. A substream is addressed
//! by a usage domain plus two indices (run, frame, sample number, ...), so
//! parallel workers can draw from disjoint streams and any evaluation order
//! reproduces the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Usage domains keep unrelated draws on unrelated streams even when their
/// indices collide.
#[derive(Debug, Clone, Copy)]
pub enum StreamDomain {
    McSample,
    Layout,
    UserPlacement,
    Shadowing,
    FastFading,
    PppSample,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::McSample => 1,
            StreamDomain::Layout => 2,
            StreamDomain::UserPlacement => 3,
            StreamDomain::Shadowing => 4,
            StreamDomain::FastFading => 5,
            StreamDomain::PppSample => 6,
        }
    }
}

/// A generator positioned on substream (domain, hi, lo) of `seed`.
pub fn substream(seed: u64, domain: StreamDomain, hi: u32, lo: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain.tag() << 56 | (hi as u64) << 32 | lo as u64);
    rng
}

/// Cheap re-targeting of an already keyed generator to a new substream.
/// Cloning an existing generator and moving its stream avoids re-running the
/// key schedule in per-sample hot loops.
pub fn retarget(base: &ChaCha8Rng, domain: StreamDomain, hi: u32, lo: u32) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(domain.tag() << 56 | (hi as u64) << 32 | lo as u64);
    rng.set_word_pos(0);
    rng
}
