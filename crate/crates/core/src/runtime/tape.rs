//! Labeled randomness streams.
//!
//! Every stochastic draw an algorithm makes is labeled by (node, pass,
//! purpose) and goes through the [`Tape`] trait. The seeded implementation
//! derives one deterministic stream per label, so results do not depend on
//! the engine's evaluation order and replaying a seed reproduces every draw.
//! The recording implementation scripts draws, which lets
//! [`enumerate_outcomes`] walk every outcome path of a randomized algorithm
//! with its exact probability.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Identifies one logical randomness stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DrawLabel<'a> {
    pub node: u64,
    pub pass: u32,
    pub purpose: &'a str,
}

impl<'a> DrawLabel<'a> {
    pub fn new(node: u64, pass: u32, purpose: &'a str) -> Self {
        DrawLabel { node, pass, purpose }
    }
}

/// Source of labeled discrete draws. `probs` must be a normalized
/// distribution; the returned index always carries positive probability.
pub trait Tape {
    fn draw_index(&mut self, label: DrawLabel<'_>, probs: &[f64]) -> usize;
}

pub fn draw_bernoulli(tape: &mut dyn Tape, label: DrawLabel<'_>, p: f64) -> bool {
    debug_assert!((0.0..=1.0).contains(&p));
    tape.draw_index(label, &[1.0 - p, p]) == 1
}

/// 64-bit mix (splitmix64 finalizer).
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic seed derivation for sub-streams.
pub fn derive_seed(seed: u64, salt: &str) -> u64 {
    splitmix64(seed ^ fnv1a(salt.as_bytes()))
}

fn stream_seed(seed: u64, label: DrawLabel<'_>) -> u64 {
    let mut x = seed;
    x = splitmix64(x ^ label.node.wrapping_mul(0x9e3779b97f4a7c15));
    x = splitmix64(x ^ (label.pass as u64).wrapping_mul(0xd1b54a32d192ed03));
    splitmix64(x ^ fnv1a(label.purpose.as_bytes()))
}

fn pick_from_cdf(probs: &[f64], u: f64) -> usize {
    debug_assert!(
        (probs.iter().sum::<f64>() - 1.0).abs() < 1e-6,
        "draw on an unnormalized distribution"
    );
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = Some(i);
            if u < acc {
                return i;
            }
        }
    }
    last_positive.expect("draw on an all-zero distribution")
}

/// Per-(node, pass, purpose) deterministic streams derived from one global
/// seed. Streams for distinct labels are independent.
#[derive(Debug)]
pub struct SeededTape {
    seed: u64,
    streams: HashMap<(u64, u32, String), ChaCha8Rng>,
}

impl SeededTape {
    pub fn new(seed: u64) -> Self {
        SeededTape {
            seed,
            streams: HashMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Tape for SeededTape {
    fn draw_index(&mut self, label: DrawLabel<'_>, probs: &[f64]) -> usize {
        let key = (label.node, label.pass, label.purpose.to_string());
        let seed = self.seed;
        let rng = self
            .streams
            .entry(key)
            .or_insert_with(|| ChaCha8Rng::seed_from_u64(stream_seed(seed, label)));
        pick_from_cdf(probs, rng.gen::<f64>())
    }
}

/// Scripted tape used by the enumerator: replays a prefix of choices and
/// takes the first positive-probability option beyond it, logging every
/// draw's option probabilities.
struct RecordingTape<'a> {
    script: &'a [usize],
    pos: usize,
    log: Vec<(Vec<f64>, usize)>,
}

impl Tape for RecordingTape<'_> {
    fn draw_index(&mut self, _label: DrawLabel<'_>, probs: &[f64]) -> usize {
        let choice = if self.pos < self.script.len() {
            self.script[self.pos]
        } else {
            probs
                .iter()
                .position(|&p| p > 0.0)
                .expect("draw on an all-zero distribution")
        };
        debug_assert!(probs[choice] > 0.0, "scripted choice has zero probability");
        self.pos += 1;
        self.log.push((probs.to_vec(), choice));
        choice
    }
}

/// Cap on enumerated outcome paths before the caller must fall back to
/// Monte Carlo estimation.
pub const DEFAULT_TAPE_BUDGET: usize = 1 << 20;

/// Runs a randomized computation once per outcome path, returning each
/// result with its exact path probability. The computation must be a
/// deterministic function of its tape draws. Path probabilities sum to one
/// over the returned list (up to float rounding); zero-probability branches
/// are never explored.
pub fn enumerate_outcomes<T>(
    max_paths: usize,
    mut run: impl FnMut(&mut dyn Tape) -> Result<T>,
) -> Result<Vec<(T, f64)>> {
    let mut script: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    loop {
        if out.len() >= max_paths {
            return Err(Error::TapeBudgetExceeded { max_paths });
        }
        let mut tape = RecordingTape {
            script: &script,
            pos: 0,
            log: Vec::new(),
        };
        let result = run(&mut tape)?;
        let log = tape.log;
        let prob: f64 = log.iter().map(|(p, c)| p[*c]).product();
        out.push((result, prob));

        // Odometer step: advance the deepest draw that still has an
        // unexplored positive-probability option.
        let mut next = None;
        for k in (0..log.len()).rev() {
            let (probs, chosen) = &log[k];
            if let Some(nc) = (chosen + 1..probs.len()).find(|&i| probs[i] > 0.0) {
                let mut s: Vec<usize> = log[..k].iter().map(|(_, c)| *c).collect();
                s.push(nc);
                next = Some(s);
                break;
            }
        }
        match next {
            Some(s) => script = s,
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_tape_replays() {
        let draws = |seed: u64| {
            let mut tape = SeededTape::new(seed);
            (0..20)
                .map(|i| {
                    tape.draw_index(
                        DrawLabel::new(i % 3, (i % 2) as u32, "x"),
                        &[0.25, 0.25, 0.5],
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draws(7), draws(7));
        assert_ne!(draws(7), draws(8));
    }

    #[test]
    fn streams_are_label_independent() {
        // Drawing extra values on one label must not shift another label's
        // stream.
        let mut a = SeededTape::new(1);
        let la = DrawLabel::new(5, 1, "p");
        let lb = DrawLabel::new(6, 1, "p");
        let _ = a.draw_index(la, &[0.5, 0.5]);
        let b_after = a.draw_index(lb, &[0.5, 0.5]);

        let mut fresh = SeededTape::new(1);
        let b_fresh = fresh.draw_index(lb, &[0.5, 0.5]);
        assert_eq!(b_after, b_fresh);
    }

    #[test]
    fn enumeration_covers_all_paths() {
        // Two draws: 3 options then 2 options, one branch zeroed out.
        let runs = enumerate_outcomes(100, |tape| {
            let a = tape.draw_index(DrawLabel::new(0, 0, "a"), &[0.5, 0.0, 0.5]);
            let b = tape.draw_index(DrawLabel::new(1, 0, "b"), &[0.25, 0.75]);
            Ok((a, b))
        })
        .unwrap();
        assert_eq!(runs.len(), 4);
        let total: f64 = runs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(runs.iter().all(|((a, _), _)| *a != 1));
        let p00: f64 = runs
            .iter()
            .filter(|((a, b), _)| *a == 0 && *b == 0)
            .map(|(_, p)| *p)
            .sum();
        assert!((p00 - 0.125).abs() < 1e-12);
    }

    #[test]
    fn enumeration_budget() {
        let err = enumerate_outcomes(3, |tape| {
            let mut x = 0;
            for i in 0..4 {
                x = x * 2 + tape.draw_index(DrawLabel::new(i, 0, "bit"), &[0.5, 0.5]);
            }
            Ok(x)
        });
        assert!(matches!(err, Err(Error::TapeBudgetExceeded { max_paths: 3 })));
    }

    #[test]
    fn variable_depth_enumeration() {
        // Branch count depends on earlier draws; the odometer must follow.
        let runs = enumerate_outcomes(100, |tape| {
            let a = tape.draw_index(DrawLabel::new(0, 0, "a"), &[0.5, 0.5]);
            let b = if a == 0 {
                tape.draw_index(DrawLabel::new(1, 0, "b"), &[0.2, 0.3, 0.5])
            } else {
                0
            };
            Ok((a, b))
        })
        .unwrap();
        assert_eq!(runs.len(), 4);
        let total: f64 = runs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
