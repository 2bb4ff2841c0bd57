//! Front-chain sibling packing with a minimal enclosing circle.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Distances below this count as touching rather than overlapping.
pub const OVERLAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(x: f64, y: f64, r: f64) -> Circle {
        Circle { x, y, r }
    }

    pub fn distance(&self, other: &Circle) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// True when the two circles overlap by more than the tolerance.
    pub fn overlaps(&self, other: &Circle) -> bool {
        self.distance(other) < self.r + other.r - OVERLAP_TOLERANCE
    }
}

/// Places `c` tangent to both `a` and `b`.
fn place(b: &Circle, a: &Circle, c: &mut Circle) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let d2 = dx * dx + dy * dy;
    if d2 > 0.0 {
        let a2 = (a.r + c.r) * (a.r + c.r);
        let b2 = (b.r + c.r) * (b.r + c.r);
        if a2 > b2 {
            let x = (d2 + b2 - a2) / (2.0 * d2);
            let y = libm::sqrt(f64::max(0.0, b2 / d2 - x * x));
            c.x = b.x - x * dx - y * dy;
            c.y = b.y - x * dy + y * dx;
        } else {
            let x = (d2 + a2 - b2) / (2.0 * d2);
            let y = libm::sqrt(f64::max(0.0, a2 / d2 - x * x));
            c.x = a.x + x * dx - y * dy;
            c.y = a.y + x * dy + y * dx;
        }
    } else {
        c.x = a.x + c.r;
        c.y = a.y;
    }
}

fn intersects(a: &Circle, b: &Circle) -> bool {
    let dr = a.r + b.r - OVERLAP_TOLERANCE;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

/// Squared distance from the origin to the weighted midpoint of a chain link.
fn score(a: &Circle, b: &Circle) -> f64 {
    let ab = a.r + b.r;
    let dx = (a.x * b.r + b.x * a.r) / ab;
    let dy = (a.y * b.r + b.y * a.r) / ab;
    dx * dx + dy * dy
}

/// Packs circles of the given radii in input order so that none overlap,
/// then translates them so the enclosing circle is centered on the origin.
pub fn circle_pack(radii: &[f64]) -> Vec<Circle> {
    let n = radii.len();
    let mut c: Vec<Circle> = radii.iter().map(|&r| Circle::new(0.0, 0.0, r)).collect();
    if n == 0 {
        return c;
    }
    if n == 1 {
        return c;
    }
    c[0].x = -c[1].r;
    c[1].x = c[0].r;
    if n == 2 {
        let e = enclose(&c);
        return c.into_iter().map(|k| Circle::new(k.x - e.x, k.y - e.y, k.r)).collect();
    }
    let (c0, c1) = (c[0], c[1]);
    place(&c1, &c0, &mut c[2]);

    // Front chain as a circular doubly linked list over circle indices.
    let mut next = vec![usize::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let (mut a, mut b) = (0usize, 1usize);
    next[0] = 1;
    prev[1] = 0;
    next[1] = 2;
    prev[2] = 1;
    next[2] = 0;
    prev[0] = 2;

    let mut i = 3;
    'pack: while i < n {
        let (ca, cb) = (c[a], c[b]);
        place(&ca, &cb, &mut c[i]);
        let ci = c[i];

        let mut j = next[b];
        let mut k = prev[a];
        let mut sj = c[b].r;
        let mut sk = c[a].r;
        loop {
            if sj <= sk {
                if intersects(&c[j], &ci) {
                    b = j;
                    next[a] = b;
                    prev[b] = a;
                    continue 'pack;
                }
                sj += c[j].r;
                j = next[j];
            } else {
                if intersects(&c[k], &ci) {
                    a = k;
                    next[a] = b;
                    prev[b] = a;
                    continue 'pack;
                }
                sk += c[k].r;
                k = prev[k];
            }
            if j == next[k] {
                break;
            }
        }

        prev[i] = a;
        next[i] = b;
        next[a] = i;
        prev[b] = i;
        b = i;

        let mut best = score(&c[a], &c[next[a]]);
        let mut node = next[i];
        while node != b {
            let s = score(&c[node], &c[next[node]]);
            if s < best {
                a = node;
                best = s;
            }
            node = next[node];
        }
        b = next[a];
        i += 1;
    }

    let mut chain = vec![c[b]];
    let mut node = next[b];
    while node != b {
        chain.push(c[node]);
        node = next[node];
    }
    let e = enclose(&chain);
    c.into_iter().map(|k| Circle::new(k.x - e.x, k.y - e.y, k.r)).collect()
}

fn encloses_not(a: &Circle, b: &Circle) -> bool {
    let dr = a.r - b.r;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr < 0.0 || dr * dr < dx * dx + dy * dy
}

fn encloses_weak(a: &Circle, b: &Circle) -> bool {
    let dr = a.r - b.r + f64::max(f64::max(a.r, b.r), 1.0) * 1e-9;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

fn encloses_weak_all(a: &Circle, basis: &[Circle]) -> bool {
    basis.iter().all(|b| encloses_weak(a, b))
}

fn basis2(a: &Circle, b: &Circle) -> Circle {
    let (x21, y21, r21) = (b.x - a.x, b.y - a.y, b.r - a.r);
    let l = libm::sqrt(x21 * x21 + y21 * y21);
    if l == 0.0 {
        return if a.r >= b.r { *a } else { *b };
    }
    Circle::new(
        (a.x + b.x + x21 / l * r21) / 2.0,
        (a.y + b.y + y21 / l * r21) / 2.0,
        (l + a.r + b.r) / 2.0,
    )
}

fn basis3(a: &Circle, b: &Circle, c: &Circle) -> Circle {
    let (x1, y1, r1) = (a.x, a.y, a.r);
    let (x2, y2, r2) = (b.x, b.y, b.r);
    let (x3, y3, r3) = (c.x, c.y, c.r);
    let a2 = x1 - x2;
    let a3 = x1 - x3;
    let b2 = y1 - y2;
    let b3 = y1 - y3;
    let c2 = r2 - r1;
    let c3 = r3 - r1;
    let d1 = x1 * x1 + y1 * y1 - r1 * r1;
    let d2 = d1 - x2 * x2 - y2 * y2 + r2 * r2;
    let d3 = d1 - x3 * x3 - y3 * y3 + r3 * r3;
    let ab = a3 * b2 - a2 * b3;
    let xa = (b2 * d3 - b3 * d2) / (ab * 2.0) - x1;
    let xb = (b3 * c2 - b2 * c3) / ab;
    let ya = (a3 * d2 - a2 * d3) / (ab * 2.0) - y1;
    let yb = (a2 * c3 - a3 * c2) / ab;
    let qa = xb * xb + yb * yb - 1.0;
    let qb = 2.0 * (r1 + xa * xb + ya * yb);
    let qc = xa * xa + ya * ya - r1 * r1;
    let r = -(if libm::fabs(qa) > 1e-6 {
        (qb + libm::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
    } else {
        qc / qb
    });
    Circle::new(x1 + xa + xb * r, y1 + ya + yb * r, r)
}

fn enclose_basis(basis: &[Circle]) -> Circle {
    match basis {
        [a] => *a,
        [a, b] => basis2(a, b),
        [a, b, c] => basis3(a, b, c),
        _ => unreachable!("basis holds one to three circles"),
    }
}

fn extend_basis(basis: &[Circle], p: &Circle) -> Option<Vec<Circle>> {
    if encloses_weak_all(p, basis) {
        return Some(vec![*p]);
    }
    for bi in basis {
        if encloses_not(p, bi) && encloses_weak_all(&basis2(bi, p), basis) {
            return Some(vec![*bi, *p]);
        }
    }
    for (i, bi) in basis.iter().enumerate() {
        for bj in &basis[i + 1..] {
            if encloses_not(&basis2(bi, bj), p)
                && encloses_not(&basis2(bi, p), bj)
                && encloses_not(&basis2(bj, p), bi)
                && encloses_weak_all(&basis3(bi, bj, p), basis)
            {
                return Some(vec![*bi, *bj, *p]);
            }
        }
    }
    None
}

/// Conservative fallback: centered on the bounding box, reaching every circle.
fn bounding_enclosure(circles: &[Circle]) -> Circle {
    let min_x = circles.iter().map(|c| c.x - c.r).fold(f64::INFINITY, f64::min);
    let max_x = circles.iter().map(|c| c.x + c.r).fold(f64::NEG_INFINITY, f64::max);
    let min_y = circles.iter().map(|c| c.y - c.r).fold(f64::INFINITY, f64::min);
    let max_y = circles.iter().map(|c| c.y + c.r).fold(f64::NEG_INFINITY, f64::max);
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    let r = circles
        .iter()
        .map(|c| libm::hypot(c.x - cx, c.y - cy) + c.r)
        .fold(0.0, f64::max);
    Circle::new(cx, cy, r)
}

/// Smallest circle enclosing every input circle (Welzl-style move-to-front,
/// processed in input order).
pub fn enclose(circles: &[Circle]) -> Circle {
    if circles.is_empty() {
        return Circle::new(0.0, 0.0, 0.0);
    }
    let mut basis: Vec<Circle> = Vec::new();
    let mut e: Option<Circle> = None;
    let mut i = 0;
    let mut guard = 0usize;
    let limit = 64 * circles.len() * circles.len() + 64;
    while i < circles.len() {
        let p = &circles[i];
        if e.as_ref().is_some_and(|e| encloses_weak(e, p)) {
            i += 1;
            continue;
        }
        guard += 1;
        match extend_basis(&basis, p) {
            Some(b) if guard < limit => {
                e = Some(enclose_basis(&b));
                basis = b;
                i = 0;
            }
            _ => return bounding_enclosure(circles),
        }
    }
    e.unwrap_or_else(|| bounding_enclosure(circles))
}
