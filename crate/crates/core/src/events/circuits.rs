//! Outermost and innermost open (semi-)circuits in square annuli.
//!
//! Existence follows from the self-matching property of the triangular
//! lattice: an open (semi-)circuit separating `B_a(z)` from the outside exists
//! iff no closed path crosses the annulus. The closed sites reachable from one
//! rim are flood-filled; the open interface with that set carries the circuit,
//! which is then extracted as a cycle of winding number one around `z`.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;

use crate::lattice::{BoxSpec, Region, SiteId, DIRECTIONS, NO_SITE};
use crate::percolation::BitConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Circuit {
    pub sites: Vec<SiteId>,
    pub is_semi: bool,
    pub annulus: (f64, f64, f64, f64),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Exterior,
    Annulus,
    Inner,
}

struct Annulus<'r> {
    region: &'r Region,
    class: Vec<Class>,
    inner: Vec<SiteId>,
    ring: Vec<SiteId>,
    z: Complex64,
}

impl<'r> Annulus<'r> {
    fn new(region: &'r Region, z: Complex64, a: f64, b: f64) -> Result<Self> {
        let ring = region.annulus_sites(z, a, b)?.into_vec();
        let inner = region.box_sites(&BoxSpec::new(z, a)?).into_vec();
        if ring.is_empty() {
            return Err(Error::DegenerateBox(format!("annulus A({z}; {a}, {b}) contains no site")));
        }
        if inner.is_empty() {
            return Err(Error::DegenerateBox(format!("inner box B_{a}({z}) contains no site")));
        }
        let mut class = vec![Class::Exterior; region.len()];
        for &s in &ring {
            class[s as usize] = Class::Annulus;
        }
        for &s in &inner {
            class[s as usize] = Class::Inner;
        }
        // Offset off the lattice so that no site or edge meets the ray.
        let eps = region.mesh() * 1e-7;
        Ok(Annulus { region, class, inner, ring, z: z + Complex64::new(eps * std::f64::consts::PI, eps * std::f64::consts::E) })
    }

    /// A missing neighbour above the real axis lies beyond the window, which
    /// counts as outside `B_b(z)`.
    fn touches_window(&self, s: SiteId) -> bool {
        let row0 = self.region.coord(s).j == 0;
        self.region.neighbor_slots(s).iter().zip(DIRECTIONS).any(|(&y, (_, dj))| y == NO_SITE && !(row0 && dj == -1))
    }

    fn touches_exterior(&self, s: SiteId) -> bool {
        self.touches_window(s) || self.region.neighbors(s).any(|y| self.class[y as usize] == Class::Exterior)
    }

    /// Closed annulus sites joined to one side by closed annulus paths,
    /// together with that side.
    fn flood(&self, config: &BitConfig<'_>, from_outside: bool) -> Vec<bool> {
        let side = if from_outside { Class::Exterior } else { Class::Inner };
        let mut mark: Vec<bool> = self.class.iter().map(|&c| c == side).collect();
        let mut q: VecDeque<SiteId> = VecDeque::new();
        for &s in &self.ring {
            let seed = if from_outside { self.touches_exterior(s) } else { self.region.neighbors(s).any(|y| mark[y as usize]) };
            if seed && !config.is_open(s) {
                mark[s as usize] = true;
                q.push_back(s);
            }
        }
        while let Some(x) = q.pop_front() {
            for y in self.region.neighbors(x) {
                if !mark[y as usize] && self.class[y as usize] == Class::Annulus && !config.is_open(y) {
                    mark[y as usize] = true;
                    q.push_back(y);
                }
            }
        }
        mark
    }

    fn crossing(&self, p: SiteId, q: SiteId) -> i32 {
        let (a, b) = (self.region.position(p), self.region.position(q));
        let x = self.z.re;
        if (a.re < x) == (b.re < x) {
            return 0;
        }
        let y = a.im + (b.im - a.im) * (x - a.re) / (b.re - a.re);
        if y <= self.z.im {
            0
        } else if a.re < x {
            1
        } else {
            -1
        }
    }
}

/// Open (semi-)circuit separating `B_a(z)` from the outside, closest to the
/// outer rim.
pub fn outermost_open_circuit(config: &BitConfig<'_>, z: Complex64, a: f64, b: f64) -> Result<Option<Circuit>> {
    extract(config, z, a, b, true)
}

/// Open (semi-)circuit separating `B_a(z)` from the outside, closest to the
/// inner box.
pub fn innermost_open_circuit(config: &BitConfig<'_>, z: Complex64, a: f64, b: f64) -> Result<Option<Circuit>> {
    extract(config, z, a, b, false)
}

fn extract(config: &BitConfig<'_>, z: Complex64, a: f64, b: f64, outermost: bool) -> Result<Option<Circuit>> {
    let region = config.region();
    let an = Annulus::new(region, z, a, b)?;
    let outer_fill = an.flood(config, true);
    let crossed = an.inner.iter().any(|&s| an.touches_window(s) || region.neighbors(s).any(|y| outer_fill[y as usize]));
    if crossed {
        return Ok(None);
    }
    let fill = if outermost { outer_fill } else { an.flood(config, false) };
    // The side of the interface away from the flood, grown from the opposite rim.
    let mut reach = vec![false; region.len()];
    let mut q: VecDeque<SiteId> = VecDeque::new();
    let starts: Vec<SiteId> = if outermost {
        an.inner.clone()
    } else {
        an.ring.iter().copied().filter(|&s| an.touches_exterior(s)).filter(|&s| !fill[s as usize]).collect()
    };
    for s in starts {
        reach[s as usize] = true;
        q.push_back(s);
    }
    while let Some(x) = q.pop_front() {
        for y in region.neighbors(x) {
            if !reach[y as usize] && !fill[y as usize] && an.class[y as usize] != Class::Exterior {
                reach[y as usize] = true;
                q.push_back(y);
            }
        }
    }
    let touches_fill = |s: SiteId| {
        region.neighbors(s).any(|y| fill[y as usize]) || (outermost && an.touches_window(s))
    };
    let interface: Vec<SiteId> = an
        .ring
        .iter()
        .copied()
        .filter(|&s| reach[s as usize] && config.is_open(s) && touches_fill(s))
        .collect();
    let cycle = winding_cycle(&an, &interface);
    let circuit = match cycle {
        Some((sites, is_semi)) => Circuit { sites, is_semi, annulus: (z.re, z.im, a, b) },
        None => {
            // Degenerate case: a single boundary site cuts the annulus.
            let s = interface
                .iter()
                .copied()
                .find(|&s| region.coord(s).j == 0 && separates_inner(&an, &[s]))
                .expect("a separating open set exists, so the interface carries a circuit");
            Circuit { sites: vec![s], is_semi: true, annulus: (z.re, z.im, a, b) }
        }
    };
    Ok(Some(circuit))
}

const MAX_WIND: i32 = 8;

/// Simple cycle of winding one around `z` in the subgraph induced by `nodes`
/// plus a virtual vertex below the real axis joined to every boundary site.
fn winding_cycle(an: &Annulus<'_>, nodes: &[SiteId]) -> Option<(Vec<SiteId>, bool)> {
    let region = an.region;
    let n = nodes.len();
    if n == 0 {
        return None;
    }
    let bottom = n;
    let mut index = std::collections::HashMap::with_capacity(n);
    for (k, &s) in nodes.iter().enumerate() {
        index.insert(s, k);
    }
    let mut adj: Vec<Vec<(usize, i32)>> = vec![Vec::new(); n + 1];
    for (k, &s) in nodes.iter().enumerate() {
        for y in region.neighbors(s) {
            if let Some(&m) = index.get(&y) {
                adj[k].push((m, an.crossing(s, y)));
            }
        }
        if region.coord(s).j == 0 {
            adj[k].push((bottom, 0));
            adj[bottom].push((k, 0));
        }
    }
    let width = (2 * MAX_WIND + 1) as usize;
    let state = |v: usize, w: i32| v * width + (w + MAX_WIND) as usize;
    let mut prev = vec![usize::MAX; (n + 1) * width];
    let starts = std::iter::once(bottom).chain(0..n);
    for v0 in starts {
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        let s0 = state(v0, 0);
        prev[s0] = s0;
        let mut q = VecDeque::from([(v0, 0i32)]);
        let mut hit = None;
        'bfs: while let Some((v, w)) = q.pop_front() {
            for &(u, c) in &adj[v] {
                let wu = w + c;
                if wu.abs() > MAX_WIND {
                    continue;
                }
                let su = state(u, wu);
                if prev[su] == usize::MAX {
                    prev[su] = state(v, w);
                    if u == v0 && wu.abs() == 1 {
                        hit = Some(su);
                        break 'bfs;
                    }
                    q.push_back((u, wu));
                }
            }
        }
        let Some(mut cur) = hit else { continue };
        let mut walk = vec![cur / width];
        while cur != s0 {
            cur = prev[cur];
            walk.push(cur / width);
        }
        walk.reverse();
        let walk = simple_odd_cycle(&walk, &adj);
        let is_semi = walk.contains(&bottom);
        let mut sites: Vec<usize> = walk[..walk.len() - 1].to_vec();
        if is_semi {
            let p = sites.iter().position(|&v| v == bottom).expect("contains bottom");
            sites.rotate_left(p);
            sites.remove(0);
        }
        return Some((sites.into_iter().map(|k| nodes[k]).collect(), is_semi));
    }
    None
}

/// Split a closed walk at repeated vertices, keeping a piece with odd winding,
/// until the piece is a simple cycle.
fn simple_odd_cycle(walk: &[usize], adj: &[Vec<(usize, i32)>]) -> Vec<usize> {
    let cross = |a: usize, b: usize| adj[a].iter().find(|&&(u, _)| u == b).map_or(0, |&(_, c)| c);
    let wind = |w: &[usize]| w.windows(2).map(|p| cross(p[0], p[1])).sum::<i32>();
    let mut cur = walk.to_vec();
    loop {
        let body = &cur[..cur.len() - 1];
        let mut seen = std::collections::HashMap::new();
        let mut split = None;
        for (k, &v) in body.iter().enumerate() {
            if let Some(&p) = seen.get(&v) {
                split = Some((p, k));
                break;
            }
            seen.insert(v, k);
        }
        let Some((p, q)) = split else { return cur };
        let inner: Vec<usize> = cur[p..=q].to_vec();
        let mut outer: Vec<usize> = cur[..=p].to_vec();
        outer.extend_from_slice(&cur[q + 1..]);
        cur = if wind(&inner) % 2 != 0 { inner } else { outer };
    }
}

fn separates_inner(an: &Annulus<'_>, cut: &[SiteId]) -> bool {
    separates_classes(an.region, &an.class, &an.inner, cut, |s| an.touches_window(s))
}

fn separates_classes(
    region: &Region,
    class: &[Class],
    inner: &[SiteId],
    cut: &[SiteId],
    touches_window: impl Fn(SiteId) -> bool,
) -> bool {
    let mut seen = vec![false; region.len()];
    for &c in cut {
        seen[c as usize] = true;
    }
    let mut q: VecDeque<SiteId> = VecDeque::new();
    for &s in inner {
        if !seen[s as usize] {
            seen[s as usize] = true;
            q.push_back(s);
        }
    }
    while let Some(x) = q.pop_front() {
        if class[x as usize] == Class::Exterior || touches_window(x) {
            return false;
        }
        for y in region.neighbors(x) {
            if !seen[y as usize] {
                seen[y as usize] = true;
                q.push_back(y);
            }
        }
    }
    true
}

/// Whether removing `cut` disconnects `B_a(z)` from the outside of `B_b(z)`
/// (the window edge counting as outside) in the half-plane lattice.
pub fn separates(region: &Region, z: Complex64, a: f64, b: f64, cut: &[SiteId]) -> Result<bool> {
    let an = Annulus::new(region, z, a, b)?;
    Ok(separates_inner(&an, cut))
}
