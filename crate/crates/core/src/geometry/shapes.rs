//! Distance primitives for balls and axis-aligned boxes.

use super::point::{dist, norm};

/// Distance from `x` to the closed box `[lo, hi]` (zero inside).
pub fn box_outer_distance(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            let e = (lo[i] - x[i]).max(x[i] - hi[i]).max(0.0);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

pub fn box_contains_open(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    (0..x.len()).all(|i| x[i] > lo[i] && x[i] < hi[i])
}

pub fn box_contains_closed(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    (0..x.len()).all(|i| x[i] >= lo[i] && x[i] <= hi[i])
}

pub fn clamp_to_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|i| x[i].clamp(lo[i], hi[i])).collect()
}

/// Projection of an interior point onto the nearest face. Ties go to the
/// smallest axis, then the lower face.
pub fn box_face_projection(x: &[f64], lo: &[f64], hi: &[f64]) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, 0usize, lo[0]);
    for i in 0..x.len() {
        for v in [lo[i], hi[i]] {
            let d = (x[i] - v).abs();
            if d < best.0 {
                best = (d, i, v);
            }
        }
    }
    let mut p = x.to_vec();
    p[best.1] = best.2;
    (best.0, p)
}

/// Inward unit normals of the faces of `[lo, hi]` within `tol` of `q`,
/// summed and normalised. `None` if `q` is on no face.
pub fn box_inward_direction(q: &[f64], lo: &[f64], hi: &[f64], tol: f64) -> Option<Vec<f64>> {
    let mut n = vec![0.0; q.len()];
    let mut any = false;
    for i in 0..q.len() {
        if (q[i] - lo[i]).abs() <= tol {
            n[i] += 1.0;
            any = true;
        }
        if (q[i] - hi[i]).abs() <= tol {
            n[i] -= 1.0;
            any = true;
        }
    }
    let l = norm(&n);
    (any && l > 0.0).then(|| n.iter().map(|v| v / l).collect())
}

/// Radial projection onto a sphere; the centre maps along `-e_0`.
pub fn sphere_projection(x: &[f64], centre: &[f64], radius: f64) -> Vec<f64> {
    let r = dist(x, centre);
    if r == 0.0 {
        let mut p = centre.to_vec();
        p[0] -= radius;
        return p;
    }
    (0..x.len())
        .map(|i| centre[i] + radius * (x[i] - centre[i]) / r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_distance_to_corner() {
        let d = box_outer_distance(&[2.0, 2.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn face_tie_prefers_lower_face_of_first_axis() {
        let (d, p) = box_face_projection(&[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(d, 0.5);
        assert_eq!(p, vec![0.0, 0.5]);
    }
}
