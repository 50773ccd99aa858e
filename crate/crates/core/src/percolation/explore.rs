//! Lazy per-sample cluster exploration.
//!
//! Site bits are generated on first touch, 256 sites of one row at a time, so
//! the cost of a sample is proportional to the part of the window the queries
//! actually visit. Connection queries grow both endpoint sets at once and stop
//! as soon as the two searches meet or the smaller one runs out.

use num_complex::Complex64;

use super::{BitConfig, Law};
use crate::lattice::{Region, SiteId, NO_SITE};
use crate::rng::{site_block, Seed};

enum Source {
    Lazy { seed: Seed, index: u64, law: Law },
    Fixed(Vec<u64>),
}

pub struct Explorer<'r> {
    region: &'r Region,
    j0: i32,
    /// Per row: (index of the first cache block, lattice block number of it).
    row_blocks: Vec<(u32, i64)>,
    cache: Vec<[u64; 4]>,
    stamp: Vec<u32>,
    epoch: u32,
    source: Source,
    mark: Vec<u64>,
    tag: u64,
    qa: Vec<SiteId>,
    qb: Vec<SiteId>,
}

impl<'r> Explorer<'r> {
    pub fn new(region: &'r Region) -> Self {
        let (j0, j1) = region.row_span();
        let mut row_blocks = Vec::with_capacity((j1 - j0 + 1) as usize);
        let mut total = 0u32;
        for j in j0..=j1 {
            let (lo, hi) = region.row_extent(j).expect("row in span");
            let (b_lo, b_hi) = (i64::from(lo).div_euclid(256), i64::from(hi).div_euclid(256));
            row_blocks.push((total, b_lo));
            if hi >= lo {
                total += (b_hi - b_lo + 1) as u32;
            }
        }
        Explorer {
            region,
            j0,
            row_blocks,
            cache: vec![[0; 4]; total as usize],
            stamp: vec![0; total as usize],
            epoch: 0,
            source: Source::Fixed(vec![0; region.len().div_ceil(64)]),
            mark: vec![0; region.len()],
            tag: 0,
            qa: Vec::new(),
            qb: Vec::new(),
        }
    }

    pub fn region(&self) -> &'r Region {
        self.region
    }

    /// Switch to sample `index` of the stream keyed by `seed`.
    pub fn set_sample(&mut self, seed: Seed, index: u64, law: Law) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.source = Source::Lazy { seed, index, law };
    }

    /// Explore a fixed configuration instead of a sampled one.
    pub fn set_config(&mut self, config: &BitConfig<'_>) {
        assert_eq!(config.len(), self.region.len(), "configuration belongs to another region");
        self.source = Source::Fixed(config.words().to_vec());
    }

    #[inline]
    pub fn is_open(&mut self, site: SiteId) -> bool {
        match &self.source {
            Source::Fixed(bits) => (bits[site as usize >> 6] >> (site & 63)) & 1 == 1,
            Source::Lazy { law: Law::AllOpen, .. } => true,
            &Source::Lazy { seed, index, law: Law::Critical } => {
                let c = self.region.coord(site);
                let (first, b_lo) = self.row_blocks[(c.j - self.j0) as usize];
                let b = i64::from(c.i).div_euclid(256);
                let slot = (first as i64 + b - b_lo) as usize;
                if self.stamp[slot] != self.epoch {
                    self.cache[slot] = site_block(seed, index, c.j, b);
                    self.stamp[slot] = self.epoch;
                }
                let k = c.i.rem_euclid(256) as usize;
                (self.cache[slot][k >> 6] >> (k & 63)) & 1 == 1
            }
        }
    }

    /// Whether an open path joins some site of `a` to some site of `b`.
    pub fn connected(&mut self, a: &[SiteId], b: &[SiteId]) -> bool {
        self.tag += 2;
        let (ta, tb) = (self.tag, self.tag + 1);
        let mut qa = std::mem::take(&mut self.qa);
        let mut qb = std::mem::take(&mut self.qb);
        qa.clear();
        qb.clear();
        let found = 'search: {
            for &s in a {
                if self.mark[s as usize] != ta && self.is_open(s) {
                    self.mark[s as usize] = ta;
                    qa.push(s);
                }
            }
            for &s in b {
                if self.mark[s as usize] == ta {
                    break 'search true;
                }
                if self.mark[s as usize] != tb && self.is_open(s) {
                    self.mark[s as usize] = tb;
                    qb.push(s);
                }
            }
            let (mut ha, mut hb) = (0usize, 0usize);
            loop {
                if ha == qa.len() || hb == qb.len() {
                    break 'search false;
                }
                let a_side = qa.len() <= qb.len();
                let (q, h, mine, other) =
                    if a_side { (&mut qa, &mut ha, ta, tb) } else { (&mut qb, &mut hb, tb, ta) };
                let x = q[*h];
                *h += 1;
                for &y in self.region.neighbor_slots(x) {
                    if y == NO_SITE {
                        continue;
                    }
                    let m = self.mark[y as usize];
                    if m == other {
                        break 'search true;
                    }
                    if m != mine && self.is_open(y) {
                        self.mark[y as usize] = mine;
                        q.push(y);
                    }
                }
            }
        };
        self.qa = qa;
        self.qb = qb;
        found
    }

    /// `C(a)`, in breadth-first order. The sites stay marked until the next
    /// query, see [`Explorer::in_last_cluster`].
    pub fn cluster(&mut self, a: &[SiteId]) -> Vec<SiteId> {
        self.tag += 2;
        let t = self.tag;
        let mut q = Vec::new();
        for &s in a {
            if self.mark[s as usize] != t && self.is_open(s) {
                self.mark[s as usize] = t;
                q.push(s);
            }
        }
        let mut h = 0;
        while h < q.len() {
            let x = q[h];
            h += 1;
            for &y in self.region.neighbor_slots(x) {
                if y != NO_SITE && self.mark[y as usize] != t && self.is_open(y) {
                    self.mark[y as usize] = t;
                    q.push(y);
                }
            }
        }
        q
    }

    #[inline]
    pub fn in_last_cluster(&self, site: SiteId) -> bool {
        self.mark[site as usize] == self.tag
    }

    /// Distance from `w` to the nearest site of `C(a)`: 0 when `w`'s own
    /// hexagon belongs to it, `+∞` if it is empty.
    pub fn distance_to_cluster(&mut self, w: Complex64, a: &[SiteId]) -> f64 {
        let c = self.cluster(a);
        if self.region.site_of_point(w).is_ok_and(|s| self.in_last_cluster(s)) {
            return 0.0;
        }
        c.iter().map(|&s| (self.region.position(s) - w).norm()).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_region;
    use crate::percolation::{label_clusters, sample_config};

    #[test]
    fn lazy_bits_match_eager_sampling() {
        let r = build_region(1.0 / 16.0, 1.5, Complex64::new(-3.0, 1.5)).unwrap();
        let mut ex = Explorer::new(&r);
        for k in 0..5 {
            ex.set_sample(Seed(42), k, Law::Critical);
            let c = sample_config(&r, Seed(42), k);
            for s in r.sites().rev() {
                assert_eq!(ex.is_open(s), c.is_open(s));
            }
        }
    }

    #[test]
    fn connected_and_cluster_agree_with_labels() {
        let r = build_region(0.25, 2.0, Complex64::new(0.0, 2.0)).unwrap();
        let mut ex = Explorer::new(&r);
        let n = r.len() as u64;
        let pick = |k: u64, m: u64| ((k.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 7) % n.max(1)) as SiteId + (m as SiteId) % 2;
        for k in 0..300 {
            let c = sample_config(&r, Seed(8), k);
            let labels = label_clusters(&c);
            if k % 2 == 0 {
                ex.set_sample(Seed(8), k, Law::Critical);
            } else {
                ex.set_config(&c);
            }
            let a: Vec<SiteId> = (0..3).map(|m| pick(k * 7 + m, m).min(n as SiteId - 1)).collect();
            let b: Vec<SiteId> = (3..5).map(|m| pick(k * 11 + m, m).min(n as SiteId - 1)).collect();
            assert_eq!(ex.connected(&a, &b), labels.connected(&a, &b));
            let mut cl = ex.cluster(&a);
            cl.sort_unstable();
            assert_eq!(cl, labels.cluster_of(&a));
            let w = Complex64::new(0.3, 1.1);
            let cl = labels.cluster_of(&a);
            let brute = if cl.contains(&r.site_of_point(w).unwrap()) {
                0.0
            } else {
                cl.iter().map(|&s| (r.position(s) - w).norm()).fold(f64::INFINITY, f64::min)
            };
            assert_eq!(ex.distance_to_cluster(w, &a), brute);
        }
    }

    #[test]
    fn all_open_law() {
        let r = build_region(0.25, 1.0, Complex64::new(0.0, 1.0)).unwrap();
        let mut ex = Explorer::new(&r);
        ex.set_sample(Seed(1), 0, Law::AllOpen);
        assert!(ex.connected(&[0], &[r.len() as SiteId - 1]));
        assert_eq!(ex.cluster(&[0]).len(), r.len());
        assert!(!ex.connected(&[], &[0]));
    }
}
