//! Exact convex hulls in one, two and three dimensions.
//!
//! Points lying on an edge or facet of the hull (within a scaled tolerance)
//! are not reported as vertices. Inputs whose affine span has lower dimension
//! than requested are projected onto that span and measured there.

use std::collections::HashMap;

use super::pca::pca_fit_transform;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct HullResult<T> {
    /// Sorted input indices of the hull vertices.
    pub vertex_indices: Vec<usize>,
    /// Length, area or volume, according to `dim_used`.
    pub measure: T,
    /// Affine dimension the hull was computed in.
    pub dim_used: usize,
}

/// Convex hull of `points` (row-major, `d` columns, `d` in 1..=3).
pub fn convex_hull<T: Scalar>(points: &[T], d: usize) -> HullResult<T> {
    assert!(
        (1..=3).contains(&d),
        "hulls are supported in 1 to 3 dimensions"
    );
    let n = points.len() / d;
    assert!(n >= 1, "hull of an empty set");
    if n == 1 {
        return point_hull();
    }
    let (model, scores) = pca_fit_transform(points, d, d);
    let rank = model.d;
    let (coords, r) = if rank == d {
        (points.to_vec(), d)
    } else {
        (scores, rank)
    };
    match r {
        0 => point_hull(),
        1 => hull_1d(&coords),
        2 => hull_2d(&coords),
        _ => hull_3d(&coords).unwrap_or_else(|| {
            // Numerically flat despite the rank test: measure in the top plane.
            let (_, flat) = pca_fit_transform(&coords, 3, 2);
            hull_2d(&flat)
        }),
    }
}

/// Hull measure of `points` taken in all `d` dimensions: zero when the
/// points span fewer than `d` dimensions.
pub fn hull_measure<T: Scalar>(points: &[T], d: usize) -> T {
    let h = convex_hull(points, d);
    if h.dim_used < d {
        T::zero()
    } else {
        h.measure
    }
}

fn point_hull<T: Scalar>() -> HullResult<T> {
    HullResult {
        vertex_indices: vec![0],
        measure: T::zero(),
        dim_used: 0,
    }
}

/// Both extremes of a set of scalars; ties resolve to the lower index.
pub fn hull_1d<T: Scalar>(xs: &[T]) -> HullResult<T> {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[lo] {
            lo = i;
        }
        if x > xs[hi] {
            hi = i;
        }
    }
    let mut v = vec![lo, hi];
    v.sort_unstable();
    v.dedup();
    HullResult {
        vertex_indices: v,
        measure: xs[hi] - xs[lo],
        dim_used: 1,
    }
}

#[inline]
fn cross2<T: Scalar>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain on row-major 2-D points.
pub fn hull_2d<T: Scalar>(pts: &[T]) -> HullResult<T> {
    let n = pts.len() / 2;
    let p = |i: usize| [pts[2 * i], pts[2 * i + 1]];
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (p(a), p(b));
        pa[0]
            .partial_cmp(&pb[0])
            .unwrap()
            .then(pa[1].partial_cmp(&pb[1]).unwrap())
            .then(a.cmp(&b))
    });
    idx.dedup_by(|b, a| p(*a) == p(*b));
    if idx.len() == 1 {
        return HullResult {
            vertex_indices: idx,
            measure: T::zero(),
            dim_used: 0,
        };
    }
    let extent = pts.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = T::geom_eps() * extent * extent;

    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross2(p(hull[hull.len() - 2]), p(hull[hull.len() - 1]), p(i)) <= tol
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // Collinear within tolerance.
        let (lo, hi) = (idx[0], idx[idx.len() - 1]);
        let len = crate::scalar::dist(&p(lo), &p(hi));
        let mut v = vec![lo, hi];
        v.sort_unstable();
        return HullResult {
            vertex_indices: v,
            measure: len,
            dim_used: 1,
        };
    }
    let mut area = T::zero();
    for k in 0..hull.len() {
        let a = p(hull[k]);
        let b = p(hull[(k + 1) % hull.len()]);
        area = area + a[0] * b[1] - a[1] * b[0];
    }
    let mut v = hull;
    v.sort_unstable();
    HullResult {
        vertex_indices: v,
        measure: area.abs() / T::of(2.0),
        dim_used: 2,
    }
}

#[derive(Clone, Copy)]
struct Face<T> {
    v: [usize; 3],
    normal: [T; 3],
    offset: T,
    alive: bool,
}

#[inline]
fn sub3<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross3<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot3<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Incremental 3-D hull. `None` when the points are flat within tolerance.
pub fn hull_3d<T: Scalar>(pts: &[T]) -> Option<HullResult<T>> {
    let n = pts.len() / 3;
    let p = |i: usize| [pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]];
    let extent = pts.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = T::geom_eps() * extent.max(T::min_positive_value());

    // Initial tetrahedron from extreme points.
    let i0 = (0..n)
        .min_by(|&a, &b| p(a)[0].partial_cmp(&p(b)[0]).unwrap().then(a.cmp(&b)))
        .unwrap();
    let far = |score: &dyn Fn(usize) -> T| -> (usize, T) {
        (0..n).fold((i0, T::zero()), |(bi, bs), i| {
            let s = score(i);
            if s > bs {
                (i, s)
            } else {
                (bi, bs)
            }
        })
    };
    let (i1, d1) = far(&|i| crate::scalar::dist(&p(i), &p(i0)));
    if d1 <= tol {
        return None;
    }
    let axis = sub3(p(i1), p(i0));
    let (i2, d2) = far(&|i| {
        let c = cross3(axis, sub3(p(i), p(i0)));
        dot3(c, c).sqrt() / d1
    });
    if d2 <= tol {
        return None;
    }
    let plane_n = cross3(axis, sub3(p(i2), p(i0)));
    let plane_len = dot3(plane_n, plane_n).sqrt();
    let (i3, d3) = far(&|i| (dot3(plane_n, sub3(p(i), p(i0))) / plane_len).abs());
    if d3 <= tol {
        return None;
    }
    let quarter = T::of(0.25);
    let interior = {
        let s = [p(i0), p(i1), p(i2), p(i3)];
        [
            (s[0][0] + s[1][0] + s[2][0] + s[3][0]) * quarter,
            (s[0][1] + s[1][1] + s[2][1] + s[3][1]) * quarter,
            (s[0][2] + s[1][2] + s[2][2] + s[3][2]) * quarter,
        ]
    };

    let make = |a: usize, b: usize, c: usize| -> Face<T> {
        let mut v = [a, b, c];
        let mut nrm = cross3(sub3(p(b), p(a)), sub3(p(c), p(a)));
        if dot3(nrm, sub3(interior, p(a))) > T::zero() {
            v = [b, a, c];
            nrm = [-nrm[0], -nrm[1], -nrm[2]];
        }
        let len = dot3(nrm, nrm).sqrt();
        let normal = if len > T::zero() {
            [nrm[0] / len, nrm[1] / len, nrm[2] / len]
        } else {
            nrm
        };
        Face {
            v,
            normal,
            offset: dot3(normal, p(v[0])),
            alive: true,
        }
    };

    let mut faces: Vec<Face<T>> = vec![
        make(i0, i1, i2),
        make(i0, i1, i3),
        make(i0, i2, i3),
        make(i1, i2, i3),
    ];
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let register = |edges: &mut HashMap<(usize, usize), usize>, f: &Face<T>, fi: usize| {
        for k in 0..3 {
            edges.insert((f.v[k], f.v[(k + 1) % 3]), fi);
        }
    };
    for (fi, f) in faces.iter().enumerate() {
        register(&mut edges, f, fi);
    }

    let seeds = [i0, i1, i2, i3];
    let mut visible: Vec<bool> = Vec::new();
    for i in 0..n {
        if seeds.contains(&i) {
            continue;
        }
        let q = p(i);
        visible.clear();
        visible.resize(faces.len(), false);
        let mut any = false;
        for (fi, f) in faces.iter().enumerate() {
            if f.alive && dot3(f.normal, q) - f.offset > tol {
                visible[fi] = true;
                any = true;
            }
        }
        if !any {
            continue;
        }
        let mut horizon = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if !visible[fi] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (f.v[k], f.v[(k + 1) % 3]);
                match edges.get(&(b, a)) {
                    Some(&nb) if visible[nb] => {}
                    _ => horizon.push((a, b)),
                }
            }
        }
        for fi in 0..visible.len() {
            if visible[fi] {
                let f = faces[fi];
                for k in 0..3 {
                    let key = (f.v[k], f.v[(k + 1) % 3]);
                    if edges.get(&key) == Some(&fi) {
                        edges.remove(&key);
                    }
                }
                faces[fi].alive = false;
            }
        }
        for (a, b) in horizon {
            let f = make(a, b, i);
            let fi = faces.len();
            register(&mut edges, &f, fi);
            faces.push(f);
        }
    }

    let mut verts: Vec<usize> = faces.iter().filter(|f| f.alive).flat_map(|f| f.v).collect();
    verts.sort_unstable();
    verts.dedup();
    let six = T::of(6.0);
    let volume = faces
        .iter()
        .filter(|f| f.alive)
        .map(|f| {
            let a = sub3(p(f.v[0]), interior);
            let b = sub3(p(f.v[1]), interior);
            let c = sub3(p(f.v[2]), interior);
            dot3(a, cross3(b, c)) / six
        })
        .fold(T::zero(), |s, v| s + v);
    Some(HullResult {
        vertex_indices: verts,
        measure: volume.abs(),
        dim_used: 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let pts = [0.0f64, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let h = convex_hull(&pts, 2);
        assert_eq!(h.vertex_indices, vec![0, 1, 2, 3]);
        assert!((h.measure - 1.0).abs() < 1e-12);
        assert_eq!(h.dim_used, 2);
    }

    #[test]
    fn unit_cube() {
        let mut pts = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    pts.extend([x as f64, y as f64, z as f64]);
                }
            }
        }
        pts.extend([0.5, 0.5, 0.5, 0.5, 0.5, 1.0]);
        let h = convex_hull(&pts, 3);
        assert_eq!(h.vertex_indices, (0..8).collect::<Vec<_>>());
        assert!((h.measure - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_with_edge_and_center_points() {
        let pts = [
            0.0f64, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 2.0, 1.0, 1.0, 1.0, 0.0,
        ];
        let h = convex_hull(&pts, 2);
        assert_eq!(h.vertex_indices, vec![0, 1, 2, 3]);
        assert!((h.measure - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_use_affine_span() {
        // Flat square in 3-D.
        let pts = [
            0.0f64, 0.0, 1.0, 2.0, 0.0, 1.0, 2.0, 2.0, 1.0, 0.0, 2.0, 1.0,
        ];
        let h = convex_hull(&pts, 3);
        assert_eq!(h.dim_used, 2);
        assert!((h.measure - 4.0).abs() < 1e-12);
        // Segment in 2-D.
        let seg = [0.0f64, 0.0, 1.0, 1.0, 3.0, 3.0];
        let h = convex_hull(&seg, 2);
        assert_eq!(h.dim_used, 1);
        assert_eq!(h.vertex_indices, vec![0, 2]);
        assert!((h.measure - 18f64.sqrt()).abs() < 1e-12);
        // Coincident points.
        let h = convex_hull(&[1.0f64, 1.0, 1.0, 1.0, 1.0, 1.0], 3);
        assert_eq!(h.dim_used, 0);
        assert_eq!(h.measure, 0.0);
    }

    #[test]
    fn one_dimensional() {
        let h = convex_hull(&[3.0f64, -1.0, 2.0, 7.0, 7.0], 1);
        assert_eq!(h.vertex_indices, vec![1, 3]);
        assert_eq!(h.measure, 8.0);
    }

    #[test]
    fn works_for_f32() {
        let pts = [0.0f32, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let h = convex_hull(&pts, 2);
        assert!((h.measure - 1.0).abs() < 1e-6);
    }
}
