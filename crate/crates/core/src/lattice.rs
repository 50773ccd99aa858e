//! The η-mesh triangular lattice in the closed upper half-plane.
//!
//! Row `j ≥ 0` sits at height `η·j·√3/2` and is shifted right by `η·j/2`, so
//! lattice coordinate `(i, j)` embeds at `η·(i + j/2) + η·j·(√3/2)·𝐢`. Row 0 lies
//! on the real axis. A [`Region`] is the finite set of lattice sites inside a
//! square window, with flat neighbour tables so that cluster searches never
//! allocate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type SiteId = u32;

/// Sentinel used in neighbour tables for a missing neighbour.
pub const NO_SITE: SiteId = SiteId::MAX;

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Neighbour offsets `(di, dj)` in counter-clockwise order starting at +x.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Slack, in lattice units, for floor/ceil conversions of window edges.
const GRID_EPS: f64 = 1e-9;

/// Identifies the embedding in run manifests; bump when the embedding changes.
pub const EMBEDDING_ID: &str = "triangular-halfplane/row-offset-half/v1";

/// Lattice coordinates of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub i: i32,
    pub j: i32,
}

impl Coord {
    pub fn position(self, mesh: f64) -> Complex64 {
        Complex64::new(
            mesh * (f64::from(self.i) + 0.5 * f64::from(self.j)),
            mesh * f64::from(self.j) * SQRT3_2,
        )
    }
}

/// Region construction parameters, as they appear in run configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionParams {
    pub mesh: f64,
    pub halfwidth: f64,
    pub anchor: [f64; 2],
}

impl RegionParams {
    pub fn anchor(&self) -> Complex64 {
        Complex64::new(self.anchor[0], self.anchor[1])
    }

    pub fn build(&self) -> Result<Region> {
        build_region(self.mesh, self.halfwidth, self.anchor())
    }

    /// Same window, doubled halfwidth.
    pub fn doubled(&self) -> RegionParams {
        RegionParams { halfwidth: 2.0 * self.halfwidth, ..*self }
    }
}

#[derive(Clone, Copy, Debug)]
struct Row {
    j: i32,
    i_min: i32,
    i_max: i32,
    first: SiteId,
}

/// A square box `B_a(z)` intersected with the half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxSpec {
    pub center: Complex64,
    pub halfwidth: f64,
}

impl BoxSpec {
    pub fn new(center: Complex64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(Error::DegenerateBox(format!("halfwidth {halfwidth} must be positive")));
        }
        Ok(BoxSpec { center, halfwidth })
    }

    /// Open membership: points on the box edge are outside.
    #[inline]
    pub fn contains(&self, p: Complex64) -> bool {
        let d = p - self.center;
        d.re.abs() < self.halfwidth && d.im.abs() < self.halfwidth
    }
}

/// Sorted, duplicate-free list of sites of one region.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SiteSet(Vec<SiteId>);

impl SiteSet {
    pub fn new(mut sites: Vec<SiteId>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        SiteSet(sites)
    }

    pub fn empty() -> Self {
        SiteSet(Vec::new())
    }

    pub fn singleton(site: SiteId) -> Self {
        SiteSet(vec![site])
    }

    pub fn as_slice(&self) -> &[SiteId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: SiteId) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = SiteId> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SiteSet::new(v)
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        SiteSet(self.0.iter().copied().filter(|s| !other.contains(*s)).collect())
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        SiteSet(self.0.iter().copied().filter(|s| other.contains(*s)).collect())
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.0.iter().all(|s| other.contains(*s))
    }

    pub fn into_vec(self) -> Vec<SiteId> {
        self.0
    }
}

impl FromIterator<SiteId> for SiteSet {
    fn from_iter<T: IntoIterator<Item = SiteId>>(iter: T) -> Self {
        SiteSet::new(iter.into_iter().collect())
    }
}

/// Finite truncation of the η-mesh half-plane lattice. Immutable once built.
#[derive(Clone, Debug)]
pub struct Region {
    mesh: f64,
    halfwidth: f64,
    anchor: Complex64,
    rows: Vec<Row>,
    coords: Vec<Coord>,
    positions: Vec<Complex64>,
    neighbors: Vec<[SiteId; 6]>,
}

/// Build the region of all lattice sites in the closed square window of
/// halfwidth `halfwidth` around `anchor`, intersected with `Im ≥ 0`.
pub fn build_region(mesh: f64, halfwidth: f64, anchor: Complex64) -> Result<Region> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::InvalidRegion(format!("mesh {mesh} must be positive")));
    }
    if !(halfwidth > 0.0) || !halfwidth.is_finite() {
        return Err(Error::InvalidRegion(format!("halfwidth {halfwidth} must be positive")));
    }
    if !anchor.re.is_finite() || !anchor.im.is_finite() {
        return Err(Error::InvalidRegion("anchor must be finite".into()));
    }
    let row_height = mesh * SQRT3_2;
    let y_lo = (anchor.im - halfwidth).max(0.0);
    let y_hi = anchor.im + halfwidth;
    if y_hi < 0.0 {
        return Err(Error::InvalidRegion("window lies below the real axis".into()));
    }
    let j_lo = (y_lo / row_height - GRID_EPS).ceil().max(0.0) as i64;
    let j_hi = (y_hi / row_height + GRID_EPS).floor() as i64;
    let x_lo = (anchor.re - halfwidth) / mesh;
    let x_hi = (anchor.re + halfwidth) / mesh;

    let mut rows = Vec::new();
    let mut count: u64 = 0;
    for j in j_lo..=j_hi {
        let shift = 0.5 * j as f64;
        let i_min = (x_lo - shift - GRID_EPS).ceil() as i64;
        let i_max = (x_hi - shift + GRID_EPS).floor() as i64;
        // Empty rows are kept so that rows stay indexed by `j - j_lo`.
        let (i_min, i_max) = if i_max < i_min { (i_min, i_min - 1) } else { (i_min, i_max) };
        if j > i64::from(i32::MAX) || i_min < i64::from(i32::MIN) || i_max > i64::from(i32::MAX) {
            return Err(Error::InvalidRegion("window too large for 32-bit coordinates".into()));
        }
        rows.push(Row { j: j as i32, i_min: i_min as i32, i_max: i_max as i32, first: count as SiteId });
        count += (i_max - i_min + 1).max(0) as u64;
        if count >= u64::from(NO_SITE) {
            return Err(Error::InvalidRegion("too many sites".into()));
        }
    }
    if count == 0 {
        return Err(Error::InvalidRegion("window contains no lattice site".into()));
    }

    let n = count as usize;
    let mut coords = Vec::with_capacity(n);
    for row in &rows {
        for i in row.i_min..=row.i_max {
            coords.push(Coord { i, j: row.j });
        }
    }
    let positions = coords.iter().map(|c| c.position(mesh)).collect();
    let mut region = Region { mesh, halfwidth, anchor, rows, coords, positions, neighbors: Vec::new() };
    let neighbors = region
        .coords
        .iter()
        .map(|c| {
            let mut nb = [NO_SITE; 6];
            for (slot, (di, dj)) in nb.iter_mut().zip(DIRECTIONS) {
                if let Some(s) = region.site_at(c.i + di, c.j + dj) {
                    *slot = s;
                }
            }
            nb
        })
        .collect();
    region.neighbors = neighbors;
    Ok(region)
}

impl Region {
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    pub fn params(&self) -> RegionParams {
        RegionParams { mesh: self.mesh, halfwidth: self.halfwidth, anchor: [self.anchor.re, self.anchor.im] }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn sites(&self) -> std::ops::Range<SiteId> {
        0..self.coords.len() as SiteId
    }

    #[inline]
    pub fn position(&self, site: SiteId) -> Complex64 {
        self.positions[site as usize]
    }

    #[inline]
    pub fn coord(&self, site: SiteId) -> Coord {
        self.coords[site as usize]
    }

    /// Raw neighbour slots, [`NO_SITE`] where the neighbour is outside the window.
    #[inline]
    pub fn neighbor_slots(&self, site: SiteId) -> &[SiteId; 6] {
        &self.neighbors[site as usize]
    }

    pub fn neighbors(&self, site: SiteId) -> impl Iterator<Item = SiteId> + '_ {
        self.neighbors[site as usize].iter().copied().filter(|&s| s != NO_SITE)
    }

    pub fn degree(&self, site: SiteId) -> usize {
        self.neighbors(site).count()
    }

    #[inline]
    pub fn is_boundary(&self, site: SiteId) -> bool {
        self.coords[site as usize].j == 0
    }

    /// Row index range `(j_min, j_max)` present in the region.
    pub fn row_span(&self) -> (i32, i32) {
        (self.rows[0].j, self.rows[self.rows.len() - 1].j)
    }

    /// `(i_min, i_max)` of row `j`, if that row is present.
    pub fn row_extent(&self, j: i32) -> Option<(i32, i32)> {
        self.row(j).map(|r| (r.i_min, r.i_max))
    }

    fn row(&self, j: i32) -> Option<&Row> {
        let j0 = self.rows[0].j;
        let k = j.checked_sub(j0)?;
        if k < 0 {
            return None;
        }
        self.rows.get(k as usize)
    }

    pub fn site_at(&self, i: i32, j: i32) -> Option<SiteId> {
        let row = self.row(j)?;
        if i < row.i_min || i > row.i_max {
            return None;
        }
        Some(row.first + (i - row.i_min) as SiteId)
    }

    /// Closed window membership (with a relative slack of 1e-12).
    pub fn window_contains(&self, p: Complex64) -> bool {
        let slack = 1e-12 * self.halfwidth.max(1.0);
        let d = p - self.anchor;
        p.im >= -slack && d.re.abs() <= self.halfwidth + slack && d.im.abs() <= self.halfwidth + slack
    }

    /// Whether the box `B_margin(p)` (cut at the real axis) fits in the window.
    pub fn contains_with_margin(&self, p: Complex64, margin: f64) -> bool {
        let d = p - self.anchor;
        p.im >= 0.0
            && d.re.abs() + margin <= self.halfwidth
            && p.im + margin <= self.anchor.im + self.halfwidth
            && (p.im - margin).max(0.0) >= (self.anchor.im - self.halfwidth).max(0.0)
    }

    /// The site whose hexagon contains `p`: the nearest site, ties broken by
    /// the smallest id.
    pub fn site_of_point(&self, p: Complex64) -> Result<SiteId> {
        if !p.re.is_finite() || !p.im.is_finite() || !self.window_contains(p) {
            return Err(Error::OutsideWindow { re: p.re, im: p.im });
        }
        let jf = p.im / (self.mesh * SQRT3_2);
        let i_f = p.re / self.mesh - 0.5 * jf;
        let j0 = jf.floor() as i64;
        let i0 = i_f.floor() as i64;
        let tol = 1e-12 * self.mesh;
        let mut best: Option<(f64, SiteId)> = None;
        for j in (j0 - 1)..=(j0 + 2) {
            for i in (i0 - 2)..=(i0 + 3) {
                let (Ok(ii), Ok(jj)) = (i32::try_from(i), i32::try_from(j)) else { continue };
                let Some(s) = self.site_at(ii, jj) else { continue };
                let d = (self.position(s) - p).norm();
                best = match best {
                    None => Some((d, s)),
                    Some((bd, bs)) => {
                        if d < bd - tol || ((d - bd).abs() <= tol && s < bs) {
                            Some((d.min(bd), s))
                        } else {
                            Some((bd, bs))
                        }
                    }
                };
            }
        }
        // A point inside the window always has a site within one mesh step;
        // fall back to a scan for degenerate thin windows.
        match best {
            Some((_, s)) => Ok(s),
            None => self
                .sites()
                .map(|s| ((self.position(s) - p).norm(), s))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, s)| s)
                .ok_or(Error::OutsideWindow { re: p.re, im: p.im }),
        }
    }

    /// Boundary sites with real part in the closed interval `[a, b]`.
    pub fn boundary_interval_sites(&self, a: f64, b: f64) -> Result<SiteSet> {
        if !(a <= b) {
            return Err(Error::Domain(format!("interval [{a}, {b}] is reversed")));
        }
        for x in [a, b] {
            if !self.window_contains(Complex64::new(x, 0.0)) {
                return Err(Error::OutsideWindow { re: x, im: 0.0 });
            }
        }
        let Some(row) = self.row(0) else { return Ok(SiteSet::empty()) };
        let lo = ((a / self.mesh - GRID_EPS).ceil() as i64).max(i64::from(row.i_min));
        let hi = ((b / self.mesh + GRID_EPS).floor() as i64).min(i64::from(row.i_max));
        if hi < lo {
            return Ok(SiteSet::empty());
        }
        Ok(SiteSet((lo..=hi).map(|i| row.first + (i - i64::from(row.i_min)) as SiteId).collect()))
    }

    /// Sites strictly inside the box (open edges).
    pub fn box_sites(&self, bx: &BoxSpec) -> SiteSet {
        self.sites_where(bx.center, bx.halfwidth, |p| bx.contains(p))
    }

    /// `B_b(z) \ B_a(z)`: closed on the inner edge, open on the outer edge, so
    /// that annuli and inner boxes partition outer boxes exactly.
    pub fn annulus_sites(&self, z: Complex64, a: f64, b: f64) -> Result<SiteSet> {
        if !(a > 0.0) || !(a < b) {
            return Err(Error::DegenerateBox(format!("annulus radii must satisfy 0 < a < b, got a={a}, b={b}")));
        }
        let inner = BoxSpec { center: z, halfwidth: a };
        let outer = BoxSpec { center: z, halfwidth: b };
        Ok(self.sites_where(z, b, |p| outer.contains(p) && !inner.contains(p)))
    }

    fn sites_where(&self, z: Complex64, reach: f64, pred: impl Fn(Complex64) -> bool) -> SiteSet {
        let row_height = self.mesh * SQRT3_2;
        let (rj0, rj1) = self.row_span();
        let j_lo = (((z.im - reach) / row_height).floor() as i64 - 1).max(i64::from(rj0));
        let j_hi = (((z.im + reach) / row_height).ceil() as i64 + 1).min(i64::from(rj1));
        let mut out = Vec::new();
        for j in j_lo..=j_hi {
            let Some(row) = self.row(j as i32) else { continue };
            let shift = 0.5 * j as f64;
            let i_lo = (((z.re - reach) / self.mesh - shift).floor() as i64 - 1).max(i64::from(row.i_min));
            let i_hi = (((z.re + reach) / self.mesh - shift).ceil() as i64 + 1).min(i64::from(row.i_max));
            for i in i_lo..=i_hi {
                let s = row.first + (i - i64::from(row.i_min)) as SiteId;
                if pred(self.position(s)) {
                    out.push(s);
                }
            }
        }
        SiteSet(out)
    }

    /// Sites within open Euclidean distance `r` of `w`.
    pub fn disk_sites(&self, w: Complex64, r: f64) -> SiteSet {
        self.sites_where(w, r, |p| (p - w).norm() < r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_mesh_small_window_has_origin_on_boundary() {
        let r = build_region(1.0, 1.1, c(0.0, 0.0)).unwrap();
        let s = r.site_of_point(c(0.0, 0.0)).unwrap();
        assert!(r.is_boundary(s));
        assert_eq!(r.position(s), c(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_region(0.0, 1.0, c(0.0, 0.0)).is_err());
        assert!(build_region(-1.0, 10.0, c(0.0, 0.0)).is_err());
        assert!(build_region(1.0, 0.0, c(0.0, 0.0)).is_err());
        assert!(build_region(1.0, 0.3, c(0.5, 0.5)).is_err());
        assert!(build_region(1.0, 4.0, c(0.0, -10.0)).is_err());
    }

    #[test]
    fn quarter_mesh_unit_interval_has_five_boundary_sites() {
        let r = build_region(0.25, 1.0, c(0.5, 0.0)).unwrap();
        let sites = r.boundary_interval_sites(0.0, 1.0).unwrap();
        let xs: Vec<f64> = sites.iter().map(|s| r.position(s).re).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(sites.iter().all(|s| r.is_boundary(s)));
    }

    #[test]
    fn degenerate_interval_is_singleton_or_empty() {
        let r = build_region(0.25, 1.0, c(0.5, 0.0)).unwrap();
        assert_eq!(r.boundary_interval_sites(0.5, 0.5).unwrap().len(), 1);
        assert!(r.boundary_interval_sites(0.3, 0.4).unwrap().is_empty());
        assert!(r.boundary_interval_sites(0.6, 0.4).is_err());
        assert!(r.boundary_interval_sites(0.0, 10.0).is_err());
    }

    #[test]
    fn degrees_and_edge_lengths() {
        let r = build_region(0.125, 1.0, c(0.0, 0.5)).unwrap();
        let (j0, j1) = r.row_span();
        for s in r.sites() {
            let coord = r.coord(s);
            let deg = r.degree(s);
            assert!((2..=6).contains(&deg), "degree {deg}");
            let (lo, hi) = r.row_extent(coord.j).unwrap();
            let interior_row = coord.j > j0 && coord.j < j1;
            let strictly_inside = coord.i > lo + 1 && coord.i < hi - 1;
            if coord.j == 0 && strictly_inside {
                assert_eq!(deg, 4);
            } else if interior_row && strictly_inside {
                assert_eq!(deg, 6);
            }
            for t in r.neighbors(s) {
                assert_ne!(s, t);
                assert!(r.neighbors(t).any(|u| u == s), "asymmetric adjacency");
                let d = (r.position(s) - r.position(t)).norm();
                assert!((d - r.mesh()).abs() <= 1e-12 * r.mesh());
            }
            assert_eq!(r.is_boundary(s), r.position(s).im == 0.0);
        }
    }

    #[test]
    fn site_of_point_identity_and_tie_break() {
        let r = build_region(0.25, 2.0, c(0.0, 1.0)).unwrap();
        for s in r.sites() {
            assert_eq!(r.site_of_point(r.position(s)).unwrap(), s);
        }
        for s in r.sites() {
            for t in r.neighbors(s) {
                let mid = (r.position(s) + r.position(t)) * 0.5;
                assert_eq!(r.site_of_point(mid).unwrap(), s.min(t));
            }
        }
        assert!(r.site_of_point(c(0.0, -0.1)).is_err());
        assert!(r.site_of_point(c(5.0, 0.5)).is_err());
    }

    #[test]
    fn site_of_point_matches_brute_force_nearest() {
        let r = build_region(0.125, 1.0, c(0.0, 1.0)).unwrap();
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut unif = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = c(-1.0 + 2.0 * unif(), 2.0 * unif());
            let got = r.site_of_point(p).unwrap();
            let best = r.sites().map(|s| (r.position(s) - p).norm()).fold(f64::INFINITY, f64::min);
            assert!((r.position(got) - p).norm() <= best + 1e-12);
        }
    }

    #[test]
    fn annulus_smaller_than_mesh_is_empty() {
        let r = build_region(0.25, 2.0, c(0.0, 1.0)).unwrap();
        let z = r.position(r.site_of_point(c(0.0, 1.0)).unwrap()) + c(0.1, 0.05);
        assert!(r.annulus_sites(z, 0.05, 0.1).unwrap().is_empty());
        assert!(r.annulus_sites(z, 0.2, 0.1).is_err());
        assert!(r.annulus_sites(z, 0.0, 0.1).is_err());
    }

    #[test]
    fn ring_around_interior_site() {
        let r = build_region(0.125, 2.0, c(0.0, 1.0)).unwrap();
        let z = r.position(r.site_of_point(c(0.0, 1.0)).unwrap());
        let a = r.mesh();
        let ring = r.annulus_sites(z, a, 2.0 * a).unwrap();
        let inner = r.box_sites(&BoxSpec::new(z, a).unwrap());
        assert!(!ring.is_empty());
        assert!(ring.intersection(&inner).is_empty());
        let brute: SiteSet = r
            .sites()
            .filter(|&s| {
                let d = r.position(s) - z;
                let m = d.re.abs().max(d.im.abs());
                m >= a && m < 2.0 * a
            })
            .collect();
        assert_eq!(ring, brute);
    }

    #[test]
    fn box_on_boundary_stays_in_half_plane() {
        let r = build_region(0.125, 2.0, c(0.0, 1.0)).unwrap();
        let b = r.box_sites(&BoxSpec::new(c(0.0, 0.0), 0.5).unwrap());
        assert!(!b.is_empty());
        assert!(b.iter().all(|s| r.position(s).im >= 0.0));
        assert!(BoxSpec::new(c(0.0, 0.0), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn annulus_partitions_outer_box(zx in -1.0f64..1.0, zy in 0.0f64..2.0, a in 0.05f64..0.6, f in 1.1f64..2.5) {
            let r = build_region(0.125, 3.0, c(0.0, 1.0)).unwrap();
            let z = c(zx, zy);
            let b = a * f;
            let ann = r.annulus_sites(z, a, b).unwrap();
            let inner = r.box_sites(&BoxSpec::new(z, a).unwrap());
            let outer = r.box_sites(&BoxSpec::new(z, b).unwrap());
            prop_assert!(ann.intersection(&inner).is_empty());
            prop_assert_eq!(ann.union(&inner), outer);
        }

        #[test]
        fn interval_matches_scan(a in -1.5f64..1.5, len in 0.0f64..1.0) {
            let r = build_region(0.125, 2.0, c(0.0, 1.0)).unwrap();
            let b = (a + len).min(2.0);
            let got = r.boundary_interval_sites(a, b).unwrap();
            let scan: SiteSet = r.sites().filter(|&s| {
                let p = r.position(s);
                r.is_boundary(s) && p.re >= a - 1e-12 && p.re <= b + 1e-12
            }).collect();
            prop_assert_eq!(got, scan);
        }
    }
}
