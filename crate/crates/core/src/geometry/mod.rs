//! Bounded open sets, their distance geometry, and the kappa-fat constructions
//! (corkscrew points, mutual scale, witness points) used by every estimate.

mod graph;
mod point;
mod shapes;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::StreamRng;

pub use graph::GraphDomain;
pub use point::{axpy, dist, dot, norm, norm2, sub, Point};
use shapes::*;

/// Geometric description of a bounded open set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Balls with pairwise disjoint interiors; tangency is allowed.
    BallUnion { centers: Vec<Vec<f64>>, radii: Vec<f64> },
    /// The box `(lo, hi)` minus the closed upper corner `[notch, hi]`.
    LShape { lo: Vec<f64>, hi: Vec<f64>, notch: Vec<f64> },
    Graph(GraphDomain),
}

/// Distance to the boundary paired with the side of the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDistance {
    pub distance: f64,
    pub inside: bool,
}

impl BoundaryDistance {
    /// Positive inside, negative outside.
    pub fn signed(&self) -> f64 {
        if self.inside {
            self.distance
        } else {
            -self.distance
        }
    }
}

/// A validated bounded open set with its bounding box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSpec {
    shape: Shape,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
}

fn check_finite(name: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(invalid(name, "entries must be finite"))
    }
}

fn check_box(name: &'static str, lo: &[f64], hi: &[f64]) -> Result<()> {
    check_finite(name, lo)?;
    check_finite(name, hi)?;
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
    }
    if lo.len() < 2 {
        return Err(invalid(name, "dimension must be at least 2"));
    }
    if lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Err(invalid(name, "need lo < hi in every coordinate"));
    }
    Ok(())
}

impl DomainSpec {
    pub fn new(shape: Shape) -> Result<Self> {
        let (bbox_lo, bbox_hi) = match &shape {
            Shape::Ball { center, radius } => {
                check_finite("center", center)?;
                if center.len() < 2 {
                    return Err(invalid("center", "dimension must be at least 2"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("radius", "must be positive"));
                }
                (
                    center.iter().map(|c| c - radius).collect(),
                    center.iter().map(|c| c + radius).collect(),
                )
            }
            Shape::Box { lo, hi } => {
                check_box("box", lo, hi)?;
                (lo.clone(), hi.clone())
            }
            Shape::BallUnion { centers, radii } => {
                if centers.is_empty() || centers.len() != radii.len() {
                    return Err(invalid("ball_union", "need matching non-empty centers and radii"));
                }
                let d = centers[0].len();
                if d < 2 {
                    return Err(invalid("ball_union", "dimension must be at least 2"));
                }
                for (c, r) in centers.iter().zip(radii) {
                    check_finite("centers", c)?;
                    if c.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: c.len() });
                    }
                    if !(*r > 0.0 && r.is_finite()) {
                        return Err(invalid("radii", "must be positive"));
                    }
                }
                for i in 0..centers.len() {
                    for j in i + 1..centers.len() {
                        let gap = dist(&centers[i], &centers[j]) - radii[i] - radii[j];
                        if gap < -1e-12 * (radii[i] + radii[j]) {
                            return Err(invalid(
                                "ball_union",
                                format!("balls {i} and {j} overlap"),
                            ));
                        }
                    }
                }
                let lo = (0..d)
                    .map(|k| centers.iter().zip(radii).map(|(c, r)| c[k] - r).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..d)
                    .map(|k| centers.iter().zip(radii).map(|(c, r)| c[k] + r).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                (lo, hi)
            }
            Shape::LShape { lo, hi, notch } => {
                check_box("l_shape", lo, hi)?;
                check_finite("notch", notch)?;
                if notch.len() != lo.len() {
                    return Err(Error::DimensionMismatch { expected: lo.len(), got: notch.len() });
                }
                if (0..lo.len()).any(|i| !(notch[i] > lo[i] && notch[i] < hi[i])) {
                    return Err(invalid("notch", "must lie strictly inside the outer box"));
                }
                (lo.clone(), hi.clone())
            }
            Shape::Graph(g) => {
                check_finite("graph base", &g.base_lo)?;
                check_finite("graph base", &g.base_hi)?;
                if g.base_lo.is_empty() || g.base_lo.len() != g.base_hi.len() {
                    return Err(invalid("graph base", "need matching non-empty base bounds"));
                }
                if g.base_lo.iter().zip(&g.base_hi).any(|(a, b)| a >= b) {
                    return Err(invalid("graph base", "need lo < hi in every coordinate"));
                }
                for (name, v) in [
                    ("bottom", g.bottom),
                    ("height", g.height),
                    ("amplitude", g.amplitude),
                    ("frequency", g.frequency),
                ] {
                    if !v.is_finite() {
                        return Err(invalid(name, "must be finite"));
                    }
                }
                if g.height <= g.bottom {
                    return Err(invalid("height", "must exceed bottom"));
                }
                if g.amplitude < 0.0 || g.frequency < 0.0 {
                    return Err(invalid("amplitude", "amplitude and frequency must be non-negative"));
                }
                let mut lo = g.base_lo.clone();
                let mut hi = g.base_hi.clone();
                lo.push(g.bottom);
                hi.push(g.top());
                (lo, hi)
            }
        };
        Ok(Self { shape, bbox_lo, bbox_hi })
    }

    pub fn unit_ball(d: usize) -> Self {
        Self::new(Shape::Ball { center: vec![0.0; d], radius: 1.0 }).expect("valid unit ball")
    }

    pub fn unit_cube(d: usize) -> Self {
        Self::new(Shape::Box { lo: vec![0.0; d], hi: vec![1.0; d] }).expect("valid unit cube")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.bbox_lo.len()
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.bbox_lo, &self.bbox_hi)
    }

    /// Diagonal of the bounding box; an upper bound on the diameter.
    /// Exact for balls, otherwise the bounding-box diagonal (an upper bound).
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            _ => dist(&self.bbox_lo, &self.bbox_hi),
        }
    }

    fn tol(&self) -> f64 {
        1e-9 * self.diameter()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => dist(x, center) < *radius,
            Shape::Box { lo, hi } => box_contains_open(x, lo, hi),
            Shape::BallUnion { centers, radii } => {
                centers.iter().zip(radii).any(|(c, r)| dist(x, c) < *r)
            }
            Shape::LShape { lo, hi, notch } => {
                box_contains_open(x, lo, hi) && !box_contains_closed(x, notch, hi)
            }
            Shape::Graph(g) => g.contains(x),
        }
    }

    /// Distance to the boundary together with the side of `x`.
    pub fn rho(&self, x: &[f64]) -> BoundaryDistance {
        match self.boundary_projection(x) {
            Ok((distance, _, inside)) => BoundaryDistance { distance, inside },
            // unreachable for finite input; keep the vertical bound as a fallback
            Err(_) => BoundaryDistance { distance: 0.0, inside: self.contains(x) },
        }
    }

    /// `dist(x, boundary)` irrespective of side.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.rho(x).distance
    }

    /// Distance, nearest boundary point and side.
    fn boundary_projection(&self, x: &[f64]) -> Result<(f64, Vec<f64>, bool)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let inside = self.contains(x);
        let (d, p) = match &self.shape {
            Shape::Ball { center, radius } => {
                ((dist(x, center) - radius).abs(), sphere_projection(x, center, *radius))
            }
            Shape::Box { lo, hi } => {
                if inside {
                    box_face_projection(x, lo, hi)
                } else {
                    let p = clamp_to_box(x, lo, hi);
                    if p.as_slice() == x {
                        // on the boundary already
                        (0.0, p)
                    } else {
                        (box_outer_distance(x, lo, hi), p)
                    }
                }
            }
            Shape::BallUnion { centers, radii } => {
                let mut best = (f64::INFINITY, 0usize);
                for (i, (c, r)) in centers.iter().zip(radii).enumerate() {
                    let e = (dist(x, c) - r).abs();
                    let own = dist(x, c) < *r;
                    if own {
                        best = (e, i);
                        break;
                    }
                    if e < best.0 {
                        best = (e, i);
                    }
                }
                (best.0, sphere_projection(x, &centers[best.1], radii[best.1]))
            }
            Shape::LShape { lo, hi, notch } => {
                if inside {
                    let (d1, p1) = box_face_projection(x, lo, hi);
                    let d2 = box_outer_distance(x, notch, hi);
                    if d1 <= d2 {
                        (d1, p1)
                    } else {
                        (d2, clamp_to_box(x, notch, hi))
                    }
                } else {
                    let mut best = (f64::INFINITY, Vec::new());
                    for i in 0..x.len() {
                        let mut top = hi.clone();
                        top[i] = notch[i];
                        let d = box_outer_distance(x, lo, &top);
                        if d < best.0 {
                            best = (d, clamp_to_box(x, lo, &top));
                        }
                    }
                    // zero only on the boundary itself; clamping then returns x
                    best
                }
            }
            Shape::Graph(g) => {
                if inside {
                    g.boundary_distance(x)?
                } else {
                    let v = g.dim() - 1;
                    // distance to the closed cross-section and to the middle box
                    let mut pt = vec![0.0; 2];
                    pt[0] = x[0];
                    pt[1] = x[v];
                    let in_section = x[0] >= g.base_lo[0]
                        && x[0] <= g.base_hi[0]
                        && x[v] >= g.bottom
                        && x[v] <= g.phi(x[0]);
                    let mut mid2 = 0.0;
                    for i in 1..v {
                        let e = (g.base_lo[i] - x[i]).max(x[i] - g.base_hi[i]).max(0.0);
                        mid2 += e * e;
                    }
                    let (dp, proj) = if in_section {
                        (0.0, (x[0], x[v]))
                    } else {
                        section_outer_projection(g, x[0], x[v])?
                    };
                    let mut p = x.to_vec();
                    p[0] = proj.0;
                    p[v] = proj.1;
                    for i in 1..v {
                        p[i] = x[i].clamp(g.base_lo[i], g.base_hi[i]);
                    }
                    if dp == 0.0 && mid2 == 0.0 {
                        // on the closure but not inside: boundary point
                        (0.0, x.to_vec())
                    } else {
                        ((dp * dp + mid2).sqrt(), p)
                    }
                }
            }
        };
        if !d.is_finite() {
            return Err(Error::Projection(format!("non-finite distance at {x:?}")));
        }
        Ok((d, p, inside))
    }

    /// Nearest boundary point to an interior point `x`.
    ///
    /// Symmetric ties go to the smallest axis, then the lower face; the centre
    /// of a ball maps along `-e_0`.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Result<Point> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain(format!("{x:?}")));
        }
        let (_, p, _) = self.boundary_projection(x)?;
        Ok(Point(p))
    }

    /// Unit vector pointing into `D` at the boundary point `q`, with the
    /// natural offset length scale used to seed the corkscrew search.
    fn inward_direction(&self, q: &[f64]) -> Result<Vec<Vec<f64>>> {
        let tol = self.tol();
        let dirs: Vec<Vec<f64>> = match &self.shape {
            Shape::Ball { center, radius } => {
                let p = sphere_projection(q, center, *radius);
                vec![sub(center, &p).iter().map(|v| v / radius).collect()]
            }
            Shape::Box { lo, hi } => box_inward_direction(q, lo, hi, tol).into_iter().collect(),
            Shape::BallUnion { centers, radii } => centers
                .iter()
                .zip(radii)
                .filter(|(c, r)| (dist(q, c) - *r).abs() <= tol)
                .take(1)
                .map(|(c, r)| {
                    let p = sphere_projection(q, c, *r);
                    sub(c, &p).iter().map(|v| v / r).collect()
                })
                .collect(),
            Shape::LShape { lo, hi, notch } => {
                let mut out = Vec::new();
                if let Some(n) = box_inward_direction(q, lo, hi, tol) {
                    out.push(n);
                }
                let mut n = vec![0.0; q.len()];
                let on_notch = (0..q.len()).all(|j| q[j] >= notch[j] - tol);
                if on_notch {
                    for i in 0..q.len() {
                        if (q[i] - notch[i]).abs() <= tol {
                            n[i] -= 1.0;
                        }
                    }
                }
                let l = norm(&n);
                if l > 0.0 {
                    out.push(n.iter().map(|v| v / l).collect());
                }
                out
            }
            Shape::Graph(g) => {
                let v = g.dim() - 1;
                let mut n = vec![0.0; q.len()];
                for i in 0..v {
                    if (q[i] - g.base_lo[i]).abs() <= tol {
                        n[i] += 1.0;
                    }
                    if (q[i] - g.base_hi[i]).abs() <= tol {
                        n[i] -= 1.0;
                    }
                }
                if (q[v] - g.bottom).abs() <= tol {
                    n[v] += 1.0;
                }
                if (q[v] - g.phi(q[0])).abs() <= tol {
                    n[v] -= 1.0;
                }
                let l = norm(&n);
                if l > 0.0 {
                    vec![n.iter().map(|c| c / l).collect()]
                } else {
                    vec![]
                }
            }
        };
        if dirs.is_empty() {
            return Err(Error::Degenerate(format!("{q:?} is not on the boundary")));
        }
        Ok(dirs)
    }

    /// Radius of the largest ball centred at `a` inside `D ∩ B(q, r)`.
    pub fn corkscrew_radius(&self, q: &[f64], r: f64, a: &[f64]) -> f64 {
        self.rho(a).signed().min(r - dist(a, q))
    }

    /// Best corkscrew centre found by a seeded pattern search, with its
    /// inscribed radius.
    pub fn corkscrew_search(&self, q: &[f64], r: f64) -> Result<(Point, f64)> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", "must be positive"));
        }
        let d = self.dim();
        let dirs = self.inward_direction(q)?;
        let lip = match &self.shape {
            Shape::Graph(g) => (1.0 + g.lipschitz_constant().powi(2)).sqrt(),
            _ => 1.0,
        };
        let mut best = (Point(q.to_vec()), f64::NEG_INFINITY);
        for n in &dirs {
            let k = n.iter().filter(|c| c.abs() > 1e-12).count().max(1) as f64;
            for t in [
                0.5 * r,
                r * k.sqrt() / (1.0 + k.sqrt()),
                r / (2.0 * lip),
                r * lip / (1.0 + lip),
            ] {
                let a = axpy(q, t, n);
                let s = self.corkscrew_radius(q, r, &a);
                if s > best.1 {
                    best = (Point(a), s);
                }
            }
        }
        let mut pattern: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = sgn;
                pattern.push(e);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..d {
            for j in i + 1..d {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut e = vec![0.0; d];
                    e[i] = si * h;
                    e[j] = sj * h;
                    pattern.push(e);
                }
            }
        }
        let mut step = r / 8.0;
        let mut evals = 0;
        while step > r * 1e-7 && evals < 20_000 {
            let mut improved = false;
            for e in &pattern {
                let a = axpy(&best.0, step, e);
                let s = self.corkscrew_radius(q, r, &a);
                evals += 1;
                if s > best.1 {
                    best = (Point(a), s);
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok(best)
    }

    /// Corkscrew point `A_r(Q)` with `B(A, kappa r) ⊆ D ∩ B(Q, r)`.
    pub fn corkscrew(&self, q: &[f64], r: f64, kfat: &KFatCharacteristics) -> Result<Point> {
        if r >= kfat.r_char {
            return Err(invalid("r", format!("{r} must be below R = {}", kfat.r_char)));
        }
        let (a, s) = self.corkscrew_search(q, r)?;
        if s < kfat.kappa * r * (1.0 - 1e-12) {
            return Err(Error::Containment { achieved: s / r, kappa: kfat.kappa, r });
        }
        Ok(a)
    }

    /// Uniform point of `D` by rejection from the bounding box.
    pub fn sample_uniform(&self, rng: &mut StreamRng) -> Point {
        loop {
            let x: Vec<f64> = (0..self.dim())
                .map(|i| rng.range(self.bbox_lo[i], self.bbox_hi[i]))
                .collect();
            if self.contains(&x) {
                return Point(x);
            }
        }
    }

    /// A boundary point, approximately area-weighted across pieces.
    pub fn sample_boundary(&self, rng: &mut StreamRng) -> Point {
        let d = self.dim();
        match &self.shape {
            Shape::Ball { center, radius } => Point(axpy(center, *radius, &rng.direction(d))),
            Shape::Box { lo, hi } => Point(sample_box_face(lo, hi, rng, |_| true)),
            Shape::BallUnion { centers, radii } => {
                let w: Vec<f64> = radii.iter().map(|r| r.powi(d as i32 - 1)).collect();
                let i = pick_weighted(&w, rng);
                Point(axpy(&centers[i], radii[i], &rng.direction(d)))
            }
            Shape::LShape { lo, hi, notch } => {
                let outer_area = box_surface(lo, hi);
                let notch_area = box_surface(notch, hi) / 2.0;
                loop {
                    if rng.uniform() * (outer_area + notch_area) < outer_area {
                        let p = sample_box_face(lo, hi, rng, |_| true);
                        if !box_contains_closed(&p, notch, hi) {
                            return Point(p);
                        }
                    } else {
                        // lower faces of the notch
                        let p = sample_box_face(notch, hi, rng, |(_, upper)| !upper);
                        return Point(p);
                    }
                }
            }
            Shape::Graph(g) => {
                let v = d - 1;
                let width = g.base_hi[0] - g.base_lo[0];
                let mid: f64 = (1..v).map(|i| g.base_hi[i] - g.base_lo[i]).product();
                let lip = g.lipschitz_constant();
                let section = width * (g.height - g.bottom + 0.5 * g.amplitude);
                let mut w = vec![
                    width * (1.0 + 0.5 * lip * lip).sqrt() * mid,
                    width * mid,
                    (g.phi(g.base_lo[0]) - g.bottom) * mid,
                    (g.phi(g.base_hi[0]) - g.bottom) * mid,
                ];
                for i in 1..v {
                    let a = section * mid / (g.base_hi[i] - g.base_lo[i]);
                    w.push(a);
                    w.push(a);
                }
                let piece = pick_weighted(&w, rng);
                let mut p: Vec<f64> = (0..d)
                    .map(|i| if i < v { rng.range(g.base_lo[i], g.base_hi[i]) } else { 0.0 })
                    .collect();
                match piece {
                    0 => p[v] = g.phi(p[0]),
                    1 => p[v] = g.bottom,
                    2 | 3 => {
                        p[0] = if piece == 2 { g.base_lo[0] } else { g.base_hi[0] };
                        p[v] = rng.range(g.bottom, g.phi(p[0]));
                    }
                    k => {
                        let i = 1 + (k - 4) / 2;
                        p[i] = if (k - 4) % 2 == 0 { g.base_lo[i] } else { g.base_hi[i] };
                        p[v] = rng.range(g.bottom, g.phi(p[0]));
                    }
                }
                Point(p)
            }
        }
    }

    /// Boundary points where the corkscrew condition is tightest: box
    /// corners, tangency points, reentrant corners and graph kinks.
    pub fn feature_points(&self) -> Vec<Point> {
        let d = self.dim();
        match &self.shape {
            Shape::Ball { center, radius } => {
                let mut p = center.clone();
                p[0] += radius;
                vec![Point(p)]
            }
            Shape::Box { lo, hi } => {
                let mut out = box_corners(lo, hi);
                let c: Vec<f64> = (0..d).map(|i| 0.5 * (lo[i] + hi[i])).collect();
                let mut m = c.clone();
                m[0] = lo[0];
                out.push(Point(m));
                out
            }
            Shape::BallUnion { centers, radii } => {
                let mut out = Vec::new();
                for i in 0..centers.len() {
                    for j in i + 1..centers.len() {
                        let gap = dist(&centers[i], &centers[j]) - radii[i] - radii[j];
                        if gap.abs() <= 1e-12 * (radii[i] + radii[j]) {
                            let t = radii[i] / (radii[i] + radii[j]);
                            out.push(Point(
                                (0..d)
                                    .map(|k| centers[i][k] + t * (centers[j][k] - centers[i][k]))
                                    .collect(),
                            ));
                        }
                    }
                }
                if out.is_empty() {
                    let mut p = centers[0].clone();
                    p[0] += radii[0];
                    out.push(Point(p));
                }
                out
            }
            Shape::LShape { lo, hi, notch } => {
                let mut out = vec![Point(notch.clone())];
                out.extend(
                    box_corners(lo, hi)
                        .into_iter()
                        .filter(|p| !box_contains_closed(p, notch, hi)),
                );
                out
            }
            Shape::Graph(g) => {
                let v = d - 1;
                let mut base: Vec<f64> = (0..v).map(|i| 0.5 * (g.base_lo[i] + g.base_hi[i])).collect();
                let mut out = Vec::new();
                if g.frequency > 0.0 && g.amplitude > 0.0 {
                    let period = std::f64::consts::PI / g.frequency;
                    let mut k = (g.base_lo[0] / period).floor() + 1.0;
                    while k * period < g.base_hi[0] && out.len() < 64 {
                        base[0] = k * period;
                        let mut p = base.clone();
                        p.push(g.phi(base[0]));
                        out.push(Point(p));
                        k += 1.0;
                    }
                }
                for t in [g.base_lo[0], g.base_hi[0]] {
                    for h in [g.bottom, g.phi(t)] {
                        base[0] = t;
                        let mut p = base.clone();
                        p.push(h);
                        out.push(Point(p));
                    }
                }
                out
            }
        }
    }
}

fn section_outer_projection(g: &GraphDomain, t: f64, h: f64) -> Result<(f64, (f64, f64))> {
    // nearest point of the closed cross-section to an exterior point
    let (lo, hi) = (g.base_lo[0], g.base_hi[0]);
    let take = |p: (f64, f64), best: &mut (f64, (f64, f64))| {
        let d = ((p.0 - t).powi(2) + (p.1 - h).powi(2)).sqrt();
        if d < best.0 {
            *best = (d, p);
        }
    };
    let mut best = (f64::INFINITY, (t, h));
    take((lo, h.clamp(g.bottom, g.phi(lo))), &mut best);
    take((hi, h.clamp(g.bottom, g.phi(hi))), &mut best);
    take((t.clamp(lo, hi), g.bottom), &mut best);
    let (s, _) = g.project_on_graph(t, h, best.0 * (1.0 + 1e-12))?;
    take((s, g.phi(s)), &mut best);
    Ok(best)
}

fn box_corners(lo: &[f64], hi: &[f64]) -> Vec<Point> {
    let d = lo.len();
    (0..1usize << d)
        .map(|mask| Point((0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect()))
        .collect()
}

fn box_surface(lo: &[f64], hi: &[f64]) -> f64 {
    let d = lo.len();
    (0..d)
        .map(|i| 2.0 * (0..d).filter(|&j| j != i).map(|j| hi[j] - lo[j]).product::<f64>())
        .sum()
}

fn pick_weighted(w: &[f64], rng: &mut StreamRng) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.uniform() * total;
    for (i, wi) in w.iter().enumerate() {
        if u < *wi {
            return i;
        }
        u -= wi;
    }
    w.len() - 1
}

/// Uniform point on the faces `(axis, upper)` of `[lo, hi]` accepted by `keep`.
fn sample_box_face<F: Fn((usize, bool)) -> bool>(
    lo: &[f64],
    hi: &[f64],
    rng: &mut StreamRng,
    keep: F,
) -> Vec<f64> {
    let d = lo.len();
    let mut faces = Vec::new();
    let mut w = Vec::new();
    for i in 0..d {
        let a: f64 = (0..d).filter(|&j| j != i).map(|j| hi[j] - lo[j]).product();
        for upper in [false, true] {
            if keep((i, upper)) {
                faces.push((i, upper));
                w.push(a);
            }
        }
    }
    let (i, upper) = faces[pick_weighted(&w, rng)];
    (0..d)
        .map(|j| {
            if j == i {
                if upper {
                    hi[j]
                } else {
                    lo[j]
                }
            } else {
                rng.range(lo[j], hi[j])
            }
        })
        .collect()
}

/// Characteristics `(R, kappa)` of a kappa-fat set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFatCharacteristics {
    pub r_char: f64,
    pub kappa: f64,
}

impl KFatCharacteristics {
    pub fn new(r_char: f64, kappa: f64) -> Result<Self> {
        if !(r_char > 0.0 && r_char.is_finite()) {
            return Err(invalid("R", "must be positive and finite"));
        }
        if !(kappa > 0.0 && kappa <= 0.5) {
            return Err(invalid("kappa", format!("{kappa} is outside (0, 1/2]")));
        }
        Ok(Self { r_char, kappa })
    }
}

/// One failed corkscrew check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyFailure {
    pub q: Point,
    pub r: f64,
    /// Inscribed radius divided by `r`.
    pub achieved_ratio: f64,
    pub containment_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub candidate: KFatCharacteristics,
    pub radii: Vec<f64>,
    pub n_boundary_points: usize,
    pub n_checks: usize,
    pub failures: Vec<CertifyFailure>,
    /// Smallest achieved ratio on the grid, capped at 1/2: the largest kappa
    /// that passed at every grid point.
    pub kappa_passed: f64,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Count sampled points of `B(a, radius)` that fall outside `D ∩ B(q, r)`.
pub fn containment_violations(
    domain: &DomainSpec,
    a: &[f64],
    radius: f64,
    q: &[f64],
    r: f64,
    n: usize,
    rng: &mut StreamRng,
) -> usize {
    (0..n)
        .filter(|_| {
            let p = axpy(a, 1.0, &rng.in_ball(domain.dim(), radius));
            !(domain.contains(&p) && dist(&p, q) < r)
        })
        .count()
}

/// Sampling-based check of the corkscrew condition over feature points plus
/// `n_boundary` random boundary points and `n_radii` radii in `(0, R)`.
pub fn kfat_certify(
    domain: &DomainSpec,
    candidate: &KFatCharacteristics,
    n_boundary: usize,
    n_radii: usize,
    containment_samples: usize,
    seed: u64,
) -> Result<CertifyReport> {
    KFatCharacteristics::new(candidate.r_char, candidate.kappa)?;
    if n_boundary == 0 || n_radii == 0 {
        return Err(invalid("n_boundary", "grid sizes must be at least 1"));
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut points = domain.feature_points();
    points.extend((0..n_boundary).map(|_| domain.sample_boundary(&mut rng)));
    let radii: Vec<f64> = (0..n_radii)
        .map(|j| candidate.r_char * (j + 1) as f64 / (n_radii + 1) as f64)
        .collect();
    let checks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..radii.len()).map(move |j| (i, j)))
        .collect();
    let outcomes = crate::stats::par_map(checks.len(), |k| {
        let (i, j) = checks[k];
        let (q, r) = (&points[i], radii[j]);
        let (a, s) = domain.corkscrew_search(q, r)?;
        let ratio = s / r;
        let mut violations = 0;
        if containment_samples > 0 && ratio >= candidate.kappa * (1.0 - 1e-12) {
            let mut crng = StreamRng::new(crate::rng::derive_key(seed, 1), k as u64);
            violations = containment_violations(
                domain,
                &a,
                candidate.kappa * r,
                q,
                r,
                containment_samples,
                &mut crng,
            );
        }
        Ok::<_, Error>((ratio, violations))
    });
    let mut failures = Vec::new();
    let mut kappa_passed = 0.5_f64;
    for (k, out) in outcomes.into_iter().enumerate() {
        let (ratio, violations) = out?;
        let (i, j) = checks[k];
        kappa_passed = kappa_passed.min(ratio);
        if ratio < candidate.kappa * (1.0 - 1e-12) || violations > 0 {
            failures.push(CertifyFailure {
                q: points[i].clone(),
                r: radii[j],
                achieved_ratio: ratio,
                containment_violations: violations,
            });
        }
    }
    Ok(CertifyReport {
        candidate: *candidate,
        radii,
        n_boundary_points: points.len(),
        n_checks: checks.len(),
        failures,
        kappa_passed: kappa_passed.max(0.0),
    })
}

/// Largest radius among `candidates` that passes certification with `kappa`,
/// halved as a safety margin.
pub fn fit_characteristic_radius(
    domain: &DomainSpec,
    kappa: f64,
    candidates: &[f64],
    n_boundary: usize,
    n_radii: usize,
    seed: u64,
) -> Result<Option<KFatCharacteristics>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for r in sorted {
        let c = KFatCharacteristics::new(r, kappa)?;
        if kfat_certify(domain, &c, n_boundary, n_radii, 0, seed)?.passed() {
            return Ok(Some(KFatCharacteristics::new(0.5 * r, kappa)?));
        }
    }
    Ok(None)
}

/// Interior anchor `z0`, normalisation point `x0` and the scales `eps1`, `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrame {
    pub z0: Point,
    pub x0: Point,
    pub eps1: f64,
    pub m: f64,
    pub kfat: KFatCharacteristics,
    /// Fitted Green constant of the upper bound, once calibrated.
    #[serde(default)]
    pub c0: Option<f64>,
}

impl ReferenceFrame {
    /// `M = 2/kappa`, `eps1 = R/(12M)`, and `z0` the deepest grid point with
    /// `2R/M < rho(z0) < R` (first in grid order on ties). `x0` defaults to `z0`.
    pub fn new(domain: &DomainSpec, kfat: KFatCharacteristics) -> Result<Self> {
        let m = 2.0 / kfat.kappa;
        let d = domain.dim();
        let n: usize = match d {
            2 => 128,
            3 => 32,
            _ => 12,
        };
        let (lo, hi) = domain.bounding_box();
        let (lo_rho, hi_rho) = (2.0 * kfat.r_char / m, kfat.r_char);
        let mut best: Option<(f64, Vec<f64>)> = None;
        let total = n.pow(d as u32);
        let mut x = vec![0.0; d];
        for idx in 0..total {
            let mut rem = idx;
            for i in 0..d {
                let k = rem % n;
                rem /= n;
                x[i] = lo[i] + (hi[i] - lo[i]) * (k as f64 + 0.5) / n as f64;
            }
            let bd = domain.rho(&x);
            if bd.inside && bd.distance > lo_rho && bd.distance < hi_rho {
                if best.as_ref().is_none_or(|(b, _)| bd.distance > *b) {
                    best = Some((bd.distance, x.clone()));
                }
            }
        }
        let (_, z0) = best.ok_or_else(|| {
            Error::Degenerate(format!(
                "no grid point with {lo_rho} < rho < {hi_rho}; R may be too large"
            ))
        })?;
        Ok(Self {
            x0: Point(z0.clone()),
            z0: Point(z0),
            eps1: kfat.r_char / (12.0 * m),
            m,
            kfat,
            c0: None,
        })
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(invalid("c0", "must be positive and finite"));
        }
        self.c0 = Some(c0);
        Ok(self)
    }

    pub fn with_x0(mut self, domain: &DomainSpec, x0: Point) -> Result<Self> {
        if !domain.contains(&x0) {
            return Err(Error::OutsideDomain(format!("x0 = {:?}", x0.0)));
        }
        self.x0 = x0;
        Ok(self)
    }
}

/// `r(x, y) = rho(x) ∨ rho(y) ∨ |x - y|`.
pub fn mutual_scale(domain: &DomainSpec, x: &[f64], y: &[f64]) -> f64 {
    domain.distance(x).max(domain.distance(y)).max(dist(x, y))
}

/// A point of the witness set: deep relative to `r(x, y)` and within
/// `5 r(x, y)` of both points. Far pairs get `z0`.
pub fn bset_witness(domain: &DomainSpec, frame: &ReferenceFrame, x: &[f64], y: &[f64]) -> Result<Point> {
    for p in [x, y] {
        if !domain.contains(p) {
            return Err(Error::OutsideDomain(format!("{p:?}")));
        }
    }
    let r = mutual_scale(domain, x, y);
    if r >= frame.eps1 {
        return Ok(frame.z0.clone());
    }
    let q = domain.nearest_boundary_point(x)?;
    let a = domain
        .corkscrew(&q, r, &frame.kfat)
        .map_err(|e| Error::Witness(format!("corkscrew failed: {e}")))?;
    let depth = domain.rho(&a);
    if !(depth.inside && depth.distance > r / frame.m) {
        return Err(Error::Witness(format!(
            "depth {} not above r/M = {}",
            depth.distance,
            r / frame.m
        )));
    }
    let (dx, dy) = (dist(x, &a), dist(y, &a));
    if dx > 2.0 * r * (1.0 + 1e-12) {
        return Err(Error::Witness(format!("|x - A| = {dx} exceeds 2r = {}", 2.0 * r)));
    }
    if dx.max(dy) >= 5.0 * r {
        return Err(Error::Witness(format!("max distance {} not below 5r", dx.max(dy))));
    }
    Ok(a)
}

#[cfg(test)]
mod tests;
