//! Counter-based random numbers (Philox4x64-10).
//!
//! Every random bit used by the crate is a pure function of a 128-bit seed and
//! a 256-bit counter, so results do not depend on how work is scheduled across
//! threads. Counter word 3 carries a domain tag separating independent uses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const M0: u64 = 0xD2E7_470E_E14C_6C93;
const M1: u64 = 0xCA5A_8263_9512_1157;
const W0: u64 = 0x9E37_79B9_7F4A_7C15;
const W1: u64 = 0xBB67_AE85_84CA_A73B;

/// Counter-word-3 tags.
pub const DOMAIN_SITES: u64 = 0;
pub const DOMAIN_WALKS: u64 = 1;
pub const DOMAIN_AUX: u64 = 2;

#[inline(always)]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = u128::from(a) * u128::from(b);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block.
#[inline]
pub fn philox4x64(ctr: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// 128-bit experiment seed. Parsed from decimal or `0x`-prefixed hex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Seed(pub u128);

impl Seed {
    #[inline]
    pub fn key(self) -> [u64; 2] {
        [self.0 as u64, (self.0 >> 64) as u64]
    }

    /// Derive an independent seed, e.g. for a replicate or a sub-experiment.
    pub fn derive(self, tag: u64) -> Seed {
        let out = philox4x64([tag, 0, 0, DOMAIN_AUX], self.key());
        Seed(u128::from(out[0]) | (u128::from(out[1]) << 64))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl FromStr for Seed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            Some(hex) => u128::from_str_radix(&hex.replace('_', ""), 16),
            None => t.replace('_', "").parse::<u128>(),
        };
        parsed.map(Seed).map_err(|e| format!("invalid seed `{s}`: {e}"))
    }
}

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Ok(Seed(u128::from(n))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// 256 site bits of row `j`, sample `sample_index`, covering lattice columns
/// `256·block .. 256·block + 255`.
#[inline]
pub fn site_block(seed: Seed, sample_index: u64, j: i32, block: i64) -> [u64; 4] {
    philox4x64([sample_index, j as i64 as u64, block as u64, DOMAIN_SITES], seed.key())
}

/// Sequential view of a counter-based stream; cheap to create at any offset.
#[derive(Clone, Debug)]
pub struct CounterStream {
    key: [u64; 2],
    ctr: [u64; 4],
    buf: [u64; 4],
    pos: usize,
}

impl CounterStream {
    /// Stream identified by `(a, b)` within `domain`.
    pub fn new(seed: Seed, a: u64, b: u64, domain: u64) -> Self {
        CounterStream { key: seed.key(), ctr: [a, b, 0, domain], buf: [0; 4], pos: 4 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.buf = philox4x64(self.ctr, self.key);
            self.ctr[2] = self.ctr[2].wrapping_add(1);
            self.pos = 0;
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift, without rejection;
    /// the bias is below 2^-58 for the tiny `n` used here).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }
}
