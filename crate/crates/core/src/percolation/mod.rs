//! Critical site percolation: sampling, cluster labels, exact enumeration.

mod enumerate;
mod explore;

pub use enumerate::{cylinder_event, enumerate_configs, EnumerateConfigs, EventPredicate, ENUMERATION_CAP_BITS};
pub use explore::Explorer;

use serde::{Deserialize, Serialize};

use crate::lattice::{Region, SiteId, NO_SITE};
use crate::rng::{site_block, Seed};

/// Site law. `AllOpen` is a diagnostic (p = 1) used for degenerate checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    #[default]
    Critical,
    AllOpen,
}

/// One configuration: an open/closed bit per site of the region.
#[derive(Clone, Debug)]
pub struct BitConfig<'r> {
    region: &'r Region,
    bits: Vec<u64>,
}

impl PartialEq for BitConfig<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.region, other.region) && self.bits == other.bits
    }
}

impl Eq for BitConfig<'_> {}

impl<'r> BitConfig<'r> {
    pub fn all_closed(region: &'r Region) -> Self {
        BitConfig { region, bits: vec![0; region.len().div_ceil(64)] }
    }

    pub fn all_open(region: &'r Region) -> Self {
        let mut c = Self::all_closed(region);
        for s in region.sites() {
            c.set(s, true);
        }
        c
    }

    pub fn from_fn(region: &'r Region, mut open: impl FnMut(SiteId) -> bool) -> Self {
        let mut c = Self::all_closed(region);
        for s in region.sites() {
            if open(s) {
                c.set(s, true);
            }
        }
        c
    }

    pub fn region(&self) -> &'r Region {
        self.region
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    #[inline]
    pub fn is_open(&self, site: SiteId) -> bool {
        (self.bits[site as usize >> 6] >> (site & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, site: SiteId, open: bool) {
        let w = &mut self.bits[site as usize >> 6];
        let m = 1u64 << (site & 63);
        if open {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn open_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bitwise `self ≤ other`.
    pub fn le(&self, other: &BitConfig<'_>) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}

/// Open bit of lattice site `(i, j)` under `(seed, sample_index)`. Keyed by
/// lattice coordinates so that nested windows see the same configuration.
#[inline]
pub fn site_bit(seed: Seed, sample_index: u64, i: i32, j: i32) -> bool {
    let block = site_block(seed, sample_index, j, i64::from(i).div_euclid(256));
    let k = i.rem_euclid(256) as usize;
    (block[k >> 6] >> (k & 63)) & 1 == 1
}

/// Sample `sample_index` of the critical configuration stream keyed by `seed`.
pub fn sample_config(region: &Region, seed: Seed, sample_index: u64) -> BitConfig<'_> {
    sample_config_with(region, seed, sample_index, Law::Critical)
}

pub fn sample_config_with(region: &Region, seed: Seed, sample_index: u64, law: Law) -> BitConfig<'_> {
    if law == Law::AllOpen {
        return BitConfig::all_open(region);
    }
    let mut c = BitConfig::all_closed(region);
    let (j0, j1) = region.row_span();
    for j in j0..=j1 {
        let Some((i_min, i_max)) = region.row_extent(j) else { continue };
        if i_max < i_min {
            continue;
        }
        let first = region.site_at(i_min, j).expect("row start");
        let mut cur_block = i64::MIN;
        let mut words = [0u64; 4];
        for i in i_min..=i_max {
            let b = i64::from(i).div_euclid(256);
            if b != cur_block {
                words = site_block(seed, sample_index, j, b);
                cur_block = b;
            }
            let k = i.rem_euclid(256) as usize;
            if (words[k >> 6] >> (k & 63)) & 1 == 1 {
                c.set(first + (i - i_min) as SiteId, true);
            }
        }
    }
    c
}

/// Null label for closed sites.
pub const NO_LABEL: u32 = u32::MAX;

/// Connected components of the open sites of a configuration.
#[derive(Clone, Debug)]
pub struct ClusterLabels<'r> {
    region: &'r Region,
    label: Vec<u32>,
    offsets: Vec<u32>,
    members: Vec<SiteId>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = parent[x as usize];
    }
    x
}

/// Union-find labeling (path halving, union by size). Labels are numbered in
/// order of each cluster's smallest site id, so they do not depend on the
/// order in which edges are merged.
pub fn label_clusters<'r>(config: &BitConfig<'r>) -> ClusterLabels<'r> {
    let region = config.region;
    let n = region.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut size = vec![1u32; n];
    for s in region.sites() {
        if !config.is_open(s) {
            continue;
        }
        for &t in region.neighbor_slots(s) {
            if t == NO_SITE || t < s || !config.is_open(t) {
                continue;
            }
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            if a == b {
                continue;
            }
            let (big, small) = if size[a as usize] >= size[b as usize] { (a, b) } else { (b, a) };
            parent[small as usize] = big;
            size[big as usize] += size[small as usize];
        }
    }
    let mut label = vec![NO_LABEL; n];
    let mut root_label = vec![NO_LABEL; n];
    let mut next = 0u32;
    for s in region.sites() {
        if !config.is_open(s) {
            continue;
        }
        let r = find(&mut parent, s) as usize;
        if root_label[r] == NO_LABEL {
            root_label[r] = next;
            next += 1;
        }
        label[s as usize] = root_label[r];
    }
    let mut offsets = vec![0u32; next as usize + 1];
    for &l in &label {
        if l != NO_LABEL {
            offsets[l as usize + 1] += 1;
        }
    }
    for k in 0..next as usize {
        offsets[k + 1] += offsets[k];
    }
    let mut fill = offsets.clone();
    let mut members = vec![0; offsets[next as usize] as usize];
    for s in region.sites() {
        let l = label[s as usize];
        if l != NO_LABEL {
            members[fill[l as usize] as usize] = s;
            fill[l as usize] += 1;
        }
    }
    ClusterLabels { region, label, offsets, members }
}

impl<'r> ClusterLabels<'r> {
    pub fn region(&self) -> &'r Region {
        self.region
    }

    #[inline]
    pub fn label(&self, site: SiteId) -> u32 {
        self.label[site as usize]
    }

    pub fn cluster_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Sites of cluster `label`, ascending.
    pub fn members(&self, label: u32) -> &[SiteId] {
        &self.members[self.offsets[label as usize] as usize..self.offsets[label as usize + 1] as usize]
    }

    /// Distinct labels of the open sites of `anchor`, ascending.
    pub fn labels_of(&self, anchor: &[SiteId]) -> Vec<u32> {
        let mut ls: Vec<u32> = anchor.iter().map(|&s| self.label(s)).filter(|&l| l != NO_LABEL).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    /// `C(anchor)`: union of the clusters of the open anchor sites.
    pub fn cluster_of(&self, anchor: &[SiteId]) -> Vec<SiteId> {
        let mut out: Vec<SiteId> = self.labels_of(anchor).into_iter().flat_map(|l| self.members(l).iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// Whether some open site of `a` and some open site of `b` share a cluster.
    pub fn connected(&self, a: &[SiteId], b: &[SiteId]) -> bool {
        let la = self.labels_of(a);
        b.iter().any(|&s| {
            let l = self.label(s);
            l != NO_LABEL && la.binary_search(&l).is_ok()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_region;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn region(mesh: f64, hw: f64) -> Region {
        build_region(mesh, hw, Complex64::new(0.0, hw)).unwrap()
    }

    fn bfs_labels(c: &BitConfig<'_>) -> Vec<u32> {
        let r = c.region();
        let mut lab = vec![NO_LABEL; r.len()];
        let mut next = 0;
        for s in r.sites() {
            if !c.is_open(s) || lab[s as usize] != NO_LABEL {
                continue;
            }
            lab[s as usize] = next;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for y in r.neighbors(x) {
                    if c.is_open(y) && lab[y as usize] == NO_LABEL {
                        lab[y as usize] = next;
                        q.push_back(y);
                    }
                }
            }
            next += 1;
        }
        lab
    }

    #[test]
    fn sampling_is_deterministic_and_keyed_by_coordinates() {
        let r = region(0.25, 1.0);
        let a = sample_config(&r, Seed(5), 17);
        assert_eq!(a, sample_config(&r, Seed(5), 17));
        assert_ne!(a, sample_config(&r, Seed(5), 18));
        let big = build_region(0.25, 2.0, Complex64::new(0.0, 2.0)).unwrap();
        let b = sample_config(&big, Seed(5), 17);
        for s in r.sites() {
            let c = r.coord(s);
            let t = big.site_at(c.i, c.j).unwrap();
            assert_eq!(a.is_open(s), b.is_open(t));
            assert_eq!(a.is_open(s), site_bit(Seed(5), 17, c.i, c.j));
        }
    }

    #[test]
    fn site_frequencies_and_correlation() {
        let r = region(0.5, 1.0);
        let (x, y) = (3, 4);
        let n = 100_000u64;
        let (mut cx, mut cy, mut cxy) = (0u64, 0u64, 0u64);
        for k in 0..n {
            let c = sample_config(&r, Seed(11), k);
            let (a, b) = (c.is_open(x), c.is_open(y));
            cx += a as u64;
            cy += b as u64;
            cxy += (a && b) as u64;
        }
        let nf = n as f64;
        let sigma = (0.25 / nf).sqrt();
        assert!((cx as f64 / nf - 0.5).abs() < 5.0 * sigma);
        assert!((cy as f64 / nf - 0.5).abs() < 5.0 * sigma);
        let cov = cxy as f64 / nf - (cx as f64 / nf) * (cy as f64 / nf);
        // Var of the product estimator is ≤ 1/(16 n) under independence.
        assert!(cov.abs() < 5.0 * (1.0 / (16.0 * nf)).sqrt());
    }

    #[test]
    fn trivial_labelings() {
        let r = region(0.25, 1.0);
        let open = label_clusters(&BitConfig::all_open(&r));
        assert_eq!(open.cluster_count(), 1);
        assert!(r.sites().all(|s| open.label(s) == 0));
        let closed = label_clusters(&BitConfig::all_closed(&r));
        assert_eq!(closed.cluster_count(), 0);
        assert!(r.sites().all(|s| closed.label(s) == NO_LABEL));
        let l = sample_config_with(&r, Seed(0), 0, Law::AllOpen);
        assert_eq!(l.open_count(), r.len());
    }

    #[test]
    fn labels_match_bfs_on_small_regions() {
        let r = build_region(1.0, 2.6, Complex64::new(0.0, 2.0)).unwrap();
        assert!(r.len() >= 20 && r.len() <= 40, "{}", r.len());
        for k in 0..500 {
            let c = sample_config(&r, Seed(3), k);
            let uf = label_clusters(&c);
            let bfs = bfs_labels(&c);
            for s in r.sites() {
                for t in r.sites() {
                    let same_uf = uf.label(s) != NO_LABEL && uf.label(s) == uf.label(t);
                    let same_bfs = bfs[s as usize] != NO_LABEL && bfs[s as usize] == bfs[t as usize];
                    assert_eq!(same_uf, same_bfs);
                }
            }
            let total: usize = (0..uf.cluster_count() as u32).map(|l| uf.members(l).len()).sum();
            assert_eq!(total, c.open_count());
        }
    }

    proptest! {
        #[test]
        fn labels_do_not_depend_on_id_order(bits in proptest::collection::vec(any::<bool>(), 64)) {
            // Relabel sites by reversing ids; the partition must be the same.
            let r = build_region(1.0, 3.1, Complex64::new(0.0, 3.0)).unwrap();
            let n = r.len() as u32;
            let c = BitConfig::from_fn(&r, |s| bits[s as usize % bits.len()]);
            let uf = label_clusters(&c);
            let mut parent: Vec<u32> = (0..n).collect();
            for s in (0..n).rev() {
                if !c.is_open(s) { continue; }
                for t in r.neighbors(s) {
                    if c.is_open(t) {
                        let (a, b) = (find(&mut parent, s), find(&mut parent, t));
                        if a != b { parent[a as usize] = b; }
                    }
                }
            }
            for s in 0..n {
                for t in 0..n {
                    let both = c.is_open(s) && c.is_open(t);
                    prop_assert_eq!(both && uf.label(s) == uf.label(t), both && find(&mut parent, s) == find(&mut parent, t));
                }
            }
        }
    }
}
