use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cfg, EdgeLabel};

/// A random well-formed CFG with `blocks` statement blocks.
///
/// Branches keep one side on the next block in id order, so every block
/// reaches exit; the other side may point anywhere, including backwards.
/// Unconditional edges jump forward. Shapes that leave a block unreachable
/// are redrawn.
pub fn random_cfg(blocks: usize, seed: u64) -> Cfg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = blocks.max(1);
    let exit = n + 1;
    loop {
        let mut lines = Vec::with_capacity(n);
        for i in 1..=n {
            let count = rng.gen_range(1..=3u32);
            lines.push((0..count).map(|k| i as u32 * 10 + k).collect());
        }
        let mut edges = vec![(0, 1, EdgeLabel::Unconditional)];
        for i in 1..=n {
            if rng.gen_bool(0.5) {
                let other = rng.gen_range(1..=exit);
                let (t, f) = if rng.gen_bool(0.5) { (i + 1, other) } else { (other, i + 1) };
                edges.push((i, t, EdgeLabel::True));
                edges.push((i, f, EdgeLabel::False));
            } else {
                let to = if rng.gen_bool(0.7) { i + 1 } else { rng.gen_range(i + 1..=exit) };
                edges.push((i, to, EdgeLabel::Unconditional));
            }
        }
        if let Ok(cfg) = Cfg::from_parts("random", lines, edges) {
            return cfg;
        }
    }
}
