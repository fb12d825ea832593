//! Structured triangulations of rectangles and their barycentric dual.
//!
//! Every triangle is split into three vertex subregions by the segments
//! joining its edge midpoints to its barycenter. The union of the subregions
//! attached to a node is that node's control volume.

use crate::{Error, Result, Scalar};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, x1: T, y0: T, y1: T) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::one())
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }
}

/// Primal triangulation. Triangles are counterclockwise.
#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    pub nodes: Vec<[T; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Sorted indices of nodes on the rectangle boundary.
    pub boundary_nodes: Vec<usize>,
    /// Longest edge over all elements.
    pub h_max: T,
    pub rect: Rect<T>,
    /// Grid subdivisions `(nx, ny)`; nodes are numbered `j * (nx + 1) + i`.
    pub grid: (usize, usize),
    is_boundary: Vec<bool>,
}

impl<T: Scalar> TriMesh<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.is_boundary
    }

    /// Signed area of triangle `k` (positive for counterclockwise).
    pub fn signed_area(&self, k: usize) -> T {
        let [a, b, c] = self.triangles[k];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    /// Node index at grid position `(i, j)`.
    pub fn node_at(&self, i: usize, j: usize) -> usize {
        j * (self.grid.0 + 1) + i
    }

    /// Node closest to `p` (ties resolved by lowest index).
    pub fn nearest_node(&self, p: [T; 2]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, x) in self.nodes.iter().enumerate() {
            let d = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

pub fn signed_area<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
}

/// Uniform `nx × ny` grid on `rect`, each cell split along its
/// lower-left to upper-right diagonal.
pub fn build_rect_mesh<T: Scalar>(nx: usize, ny: usize, rect: Rect<T>) -> Result<TriMesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!("subdivision counts must be positive, got {nx} x {ny}")));
    }
    if !(rect.width() > T::zero() && rect.height() > T::zero()) {
        return Err(Error::InvalidMesh(format!(
            "degenerate rectangle [{}, {}] x [{}, {}]",
            rect.x0, rect.x1, rect.y0, rect.y1
        )));
    }

    let dx = rect.width() / T::from_usize(nx).unwrap();
    let dy = rect.height() / T::from_usize(ny).unwrap();
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut is_boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // Pin the last row/column to the exact rectangle edge.
        let y = if j == ny { rect.y1 } else { rect.y0 + dy * T::from_usize(j).unwrap() };
        for i in 0..=nx {
            let x = if i == nx { rect.x1 } else { rect.x0 + dx * T::from_usize(i).unwrap() };
            nodes.push([x, y]);
            is_boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }

    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let mut h_max = T::zero();
    for t in &triangles {
        for k in 0..3 {
            let p = nodes[t[k]];
            let q = nodes[t[(k + 1) % 3]];
            let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            h_max = h_max.max(len);
        }
    }

    let boundary_nodes = is_boundary.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();

    Ok(TriMesh { nodes, triangles, boundary_nodes, h_max, rect, grid: (nx, ny), is_boundary })
}

/// Dual-mesh data attached to one triangle.
///
/// Local vertex `k` is `triangle[k]`; edge `k` joins local vertices `k` and
/// `k + 1 (mod 3)` and has midpoint `midpoints[k]`. The dual segment of edge
/// `k` runs from `midpoints[k]` to `barycenter` and separates the subregions
/// of local vertices `k` and `k + 1`.
#[derive(Clone, Debug)]
pub struct DualElement<T> {
    pub area: T,
    pub barycenter: [T; 2],
    pub midpoints: [[T; 2]; 3],
    /// Normal of dual segment `k`, scaled by the segment length, pointing
    /// out of the subregion of local vertex `k` (into that of `k + 1`).
    pub scaled_normals: [[T; 2]; 3],
    /// Global node whose control volume the normal above is outward for.
    pub normal_owner: [usize; 3],
    /// Gradients of the three local P1 basis functions.
    pub basis_gradients: [[T; 2]; 3],
}

#[derive(Clone, Debug)]
pub struct DualGeometry<T> {
    /// Control-volume area `|V_i|` per node.
    pub cv_area: Vec<T>,
    pub elements: Vec<DualElement<T>>,
}

impl<T: Scalar> DualGeometry<T> {
    pub fn num_nodes(&self) -> usize {
        self.cv_area.len()
    }

    pub fn total_area(&self) -> T {
        self.cv_area.iter().copied().sum()
    }
}

pub fn build_dual<T: Scalar>(mesh: &TriMesh<T>) -> Result<DualGeometry<T>> {
    let half = T::lit(0.5);
    let third = T::one() / T::lit(3.0);
    let mut cv_area = vec![T::zero(); mesh.num_nodes()];
    let mut elements = Vec::with_capacity(mesh.num_triangles());

    for (e, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|n| mesh.nodes[n]);
        let area = signed_area(p[0], p[1], p[2]);
        if !(area > T::zero()) {
            return Err(Error::DegenerateElement { element: e, area: area.to_f64_lossy() });
        }
        let barycenter = [(p[0][0] + p[1][0] + p[2][0]) * third, (p[0][1] + p[1][1] + p[2][1]) * third];
        let mut midpoints = [[T::zero(); 2]; 3];
        let mut scaled_normals = [[T::zero(); 2]; 3];
        let mut normal_owner = [0; 3];
        for k in 0..3 {
            let a = p[k];
            let b = p[(k + 1) % 3];
            let m = [(a[0] + b[0]) * half, (a[1] + b[1]) * half];
            midpoints[k] = m;
            let s = [barycenter[0] - m[0], barycenter[1] - m[1]];
            let mut n = [s[1], -s[0]];
            // Orient from vertex k towards vertex k + 1.
            if n[0] * (b[0] - a[0]) + n[1] * (b[1] - a[1]) < T::zero() {
                n = [-n[0], -n[1]];
            }
            scaled_normals[k] = n;
            normal_owner[k] = tri[k];
        }
        let two_area = area + area;
        let mut basis_gradients = [[T::zero(); 2]; 3];
        for k in 0..3 {
            let b = p[(k + 1) % 3];
            let c = p[(k + 2) % 3];
            basis_gradients[k] = [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area];
        }
        for &n in tri {
            cv_area[n] += area * third;
        }
        elements.push(DualElement { area, barycenter, midpoints, scaled_normals, normal_owner, basis_gradients });
    }

    Ok(DualGeometry { cv_area, elements })
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area<T: Scalar>(pts: &[[T; 2]]) -> T {
    let mut s = T::zero();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nx: usize, ny: usize) -> TriMesh<f64> {
        build_rect_mesh(nx, ny, Rect::unit()).unwrap()
    }

    #[test]
    fn one_by_one_grid() {
        let m = unit(1, 1);
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_triangles(), 2);
        let total: f64 = (0..2).map(|k| m.signed_area(k)).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn two_by_two_grid() {
        let m = unit(2, 2);
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.boundary_nodes.len(), 8);
        assert!(!m.is_boundary(4));
    }

    #[test]
    fn areas_partition_domain() {
        for (nx, ny) in [(1, 3), (4, 4), (7, 5), (16, 9)] {
            let m = unit(nx, ny);
            let total: f64 = (0..m.num_triangles()).map(|k| m.signed_area(k)).sum();
            assert!((total - 1.0).abs() < 1e-13, "{nx}x{ny}: {total}");
            assert!((0..m.num_triangles()).all(|k| m.signed_area(k) > 0.0));
        }
    }

    #[test]
    fn boundary_flags_match_geometry() {
        let r = Rect::new(-0.5, 0.5, -0.5, 0.5);
        let m = build_rect_mesh(6, 4, r).unwrap();
        for (i, x) in m.nodes.iter().enumerate() {
            let on_edge = x[0] == r.x0 || x[0] == r.x1 || x[1] == r.y0 || x[1] == r.y1;
            assert_eq!(on_edge, m.is_boundary(i), "node {i}");
        }
    }

    #[test]
    fn h_max_is_longest_edge() {
        let m = build_rect_mesh(4, 2, Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        let expected = (0.25f64.powi(2) + 0.5f64.powi(2)).sqrt();
        assert!((m.h_max - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_rect_mesh::<f64>(0, 3, Rect::unit()).is_err());
        assert!(build_rect_mesh::<f64>(3, 0, Rect::unit()).is_err());
        assert!(build_rect_mesh(3, 3, Rect::new(0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(build_rect_mesh(3, 3, Rect::new(0.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn two_triangle_control_volumes() {
        // Nodes 0 and 3 lie on the diagonal shared by both triangles.
        let m = unit(1, 1);
        let d = build_dual(&m).unwrap();
        let third = 1.0 / 3.0;
        let sixth = 1.0 / 6.0;
        assert!((d.cv_area[0] - third).abs() < 1e-15);
        assert!((d.cv_area[3] - third).abs() < 1e-15);
        assert!((d.cv_area[1] - sixth).abs() < 1e-15);
        assert!((d.cv_area[2] - sixth).abs() < 1e-15);
    }

    #[test]
    fn vertex_subregions_are_one_third() {
        let m = build_rect_mesh(5, 3, Rect::<f64>::new(0.0, 2.0, -1.0, 0.5)).unwrap();
        let d = build_dual(&m).unwrap();
        for (e, el) in d.elements.iter().enumerate() {
            let p = m.triangles[e].map(|n| m.nodes[n]);
            for k in 0..3 {
                let prev = (k + 2) % 3;
                let quad = [p[k], el.midpoints[k], el.barycenter, el.midpoints[prev]];
                let a = polygon_area(&quad);
                assert!((a - el.area / 3.0).abs() <= 1e-13 * el.area, "elem {e} vertex {k}");
            }
        }
    }

    #[test]
    fn dual_segments_meet_at_barycenter() {
        let m = unit(3, 2);
        let d = build_dual(&m).unwrap();
        for el in &d.elements {
            for k in 0..3 {
                // segment from midpoint along the direction perpendicular to the normal
                let s = [el.barycenter[0] - el.midpoints[k][0], el.barycenter[1] - el.midpoints[k][1]];
                let n = el.scaled_normals[k];
                assert!((s[0] * n[0] + s[1] * n[1]).abs() < 1e-15);
                assert!(((s[0].hypot(s[1])) - n[0].hypot(n[1])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_flux_closes_in_each_subregion() {
        // Subregion of vertex k: dual segment k (outward +n_k), dual segment
        // k-1 (outward -n_{k-1}) and the half-edges P_k M_k and M_{k-1} P_k.
        let m = build_rect_mesh(4, 3, Rect::new(0.0, 1.3, 0.0, 0.7)).unwrap();
        let d = build_dual(&m).unwrap();
        let f = [0.37, -1.21];
        let outward = |a: [f64; 2], b: [f64; 2]| [b[1] - a[1], a[0] - b[0]];
        for (e, el) in d.elements.iter().enumerate() {
            let p = m.triangles[e].map(|n| m.nodes[n]);
            for k in 0..3 {
                let prev = (k + 2) % 3;
                let e1 = outward(p[k], el.midpoints[k]);
                let e2 = outward(el.midpoints[prev], p[k]);
                let total = [
                    el.scaled_normals[k][0] - el.scaled_normals[prev][0] + e1[0] + e2[0],
                    el.scaled_normals[k][1] - el.scaled_normals[prev][1] + e1[1] + e2[1],
                ];
                let flux = f[0] * total[0] + f[1] * total[1];
                assert!(flux.abs() < 1e-13, "elem {e} vertex {k}: {flux}");
            }
        }
    }

    #[test]
    fn cv_areas_sum_to_domain() {
        for (nx, ny) in [(1, 1), (3, 7), (32, 32)] {
            let r = Rect::<f64>::new(0.0, 2.0, 0.0, 1.0);
            let m = build_rect_mesh(nx, ny, r).unwrap();
            let d = build_dual(&m).unwrap();
            assert!((d.total_area() - 2.0).abs() <= 1e-12 * 2.0);
        }
    }

    #[test]
    fn generic_over_f32() {
        let m = build_rect_mesh::<f32>(4, 4, Rect::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        assert!((d.total_area() - 1.0).abs() < 1e-5);
    }
}
