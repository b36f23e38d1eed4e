use std::collections::HashMap;

use rayon::prelude::*;

use crate::extension::ExtensionPlan;
use crate::geom::{self, Point};
use crate::{Error, Result};

/// Maximum number of local refinements of a degenerate simplex.
const MAX_REFINE: u32 = 4;

/// Kuhn triangulation of the grid cells inside the resolved region of a domain,
/// carrying the values of the mollified extension at its vertices.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    n: usize,
    h: f64,
    points: Vec<Point>,
    values: Vec<Point>,
    simplices: Vec<[u32; 4]>,
    boundary: Vec<[u32; 3]>,
    plan: ExtensionPlan,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
    }
}

fn det(n: usize, p: &[Point]) -> f64 {
    let a = geom::sub(p[1], p[0]);
    let b = geom::sub(p[2], p[0]);
    if n == 2 {
        geom::cross2(a, b)
    } else {
        geom::dot(a, geom::cross(b, geom::sub(p[3], p[0])))
    }
}

/// Barycentric coordinates of `y` in the simplex `p` (first `n + 1` points).
fn barycentric(n: usize, p: &[Point], y: Point, d: f64) -> [f64; 4] {
    let mut lam = [0.0; 4];
    let mut sum = 0.0;
    for i in 1..=n {
        let mut q: Vec<Point> = p[..=n].to_vec();
        q[i] = y;
        lam[i] = det(n, &q) / d;
        sum += lam[i];
    }
    lam[0] = 1.0 - sum;
    lam
}

enum Hit {
    Sign(i64),
    OnFace,
}

impl SimplicialMesh {
    /// Triangulates grid cells of side `h` whose corners lie at boundary distance
    /// greater than `collar`.
    pub fn build(plan: &ExtensionPlan, h: f64, collar: f64) -> Result<Self> {
        let dom = plan.domain().clone();
        let n = dom.dim();
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("mesh size must be positive".into()));
        }
        let collar = collar.max(2.0 * plan.resolved_distance());
        let (lo, hi) = dom.bbox();
        let dims: Vec<usize> = (0..n).map(|i| ((hi[i] - lo[i]) / h).ceil() as usize + 1).collect();
        let total: usize = dims.iter().product();
        let unflatten = |flat: usize| {
            let mut idx = [0usize; 3];
            let mut rem = flat;
            for i in 0..n {
                idx[i] = rem % dims[i];
                rem /= dims[i];
            }
            idx
        };
        let flatten = |idx: [usize; 3]| {
            let mut f = 0;
            let mut s = 1;
            for i in 0..n {
                f += idx[i] * s;
                s *= dims[i];
            }
            f
        };
        let position = |idx: [usize; 3]| {
            let mut x = [0.0; 3];
            for i in 0..n {
                x[i] = lo[i] + idx[i] as f64 * h;
            }
            x
        };
        let good: Vec<bool> =
            (0..total).into_par_iter().map(|f| dom.signed_distance(position(unflatten(f))) > collar).collect();
        let mut cells = Vec::new();
        for f in 0..total {
            let idx = unflatten(f);
            if (0..n).any(|i| idx[i] + 1 >= dims[i]) {
                continue;
            }
            let all = (0..(1usize << n)).all(|c| {
                let mut j = idx;
                for i in 0..n {
                    j[i] += (c >> i) & 1;
                }
                good[flatten(j)]
            });
            if all {
                cells.push(idx);
            }
        }
        let mut local: HashMap<usize, u32> = HashMap::new();
        let mut grid_ids = Vec::new();
        let mut simplices = Vec::new();
        let perms = permutations(n);
        for idx in &cells {
            for perm in &perms {
                let mut s = [0u32; 4];
                let mut cur = *idx;
                for k in 0..=n {
                    if k > 0 {
                        cur[perm[k - 1]] += 1;
                    }
                    let f = flatten(cur);
                    let id = *local.entry(f).or_insert_with(|| {
                        grid_ids.push(f);
                        (grid_ids.len() - 1) as u32
                    });
                    s[k] = id;
                }
                simplices.push(s);
            }
        }
        let points: Vec<Point> = grid_ids.iter().map(|&f| position(unflatten(f))).collect();
        let values: Vec<Point> = points.par_iter().map(|&x| plan.evaluate(x)).collect::<Result<_>>()?;
        let mut facets: HashMap<[u32; 3], (u32, [u32; 3])> = HashMap::new();
        for s in &simplices {
            for skip in 0..=n {
                let mut f = [u32::MAX; 3];
                let mut m = 0;
                for (k, &v) in s.iter().take(n + 1).enumerate() {
                    if k != skip {
                        f[m] = v;
                        m += 1;
                    }
                }
                let mut key = f;
                key[..n].sort_unstable();
                facets.entry(key).or_insert((0, f)).0 += 1;
            }
        }
        let mut boundary: Vec<[u32; 3]> = facets.into_values().filter(|(c, _)| *c == 1).map(|(_, f)| f).collect();
        boundary.sort_unstable();
        Ok(Self { n, h, points, values, simplices, boundary, plan: plan.clone() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    /// Image points of each simplex.
    pub fn simplex_images(&self) -> impl Iterator<Item = [Point; 4]> + '_ {
        self.simplices.iter().map(move |s| {
            let mut p = [[0.0; 3]; 4];
            for k in 0..=self.n {
                p[k] = self.values[s[k] as usize];
            }
            p
        })
    }

    /// Sign of the affine piece on each simplex (`0` for degenerate ones).
    pub fn simplex_signs(&self) -> impl Iterator<Item = i64> + '_ {
        self.simplices.iter().map(move |s| {
            let dom: Vec<Point> = s.iter().take(self.n + 1).map(|&i| self.points[i as usize]).collect();
            let img: Vec<Point> = s.iter().take(self.n + 1).map(|&i| self.values[i as usize]).collect();
            let r = det(self.n, &img) * det(self.n, &dom).signum();
            if r > 0.0 {
                1
            } else if r < 0.0 {
                -1
            } else {
                0
            }
        })
    }

    /// Image of the mesh boundary: segments in the plane, triangles in space.
    pub fn boundary_images(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        self.boundary.iter().map(move |f| {
            let mut p = [[0.0; 3]; 3];
            for k in 0..self.n {
                p[k] = self.values[f[k] as usize];
            }
            if self.n == 2 {
                p[2] = p[1];
            }
            p
        })
    }

    /// Distance from `y` to the image of the mesh boundary.
    pub fn boundary_image_distance(&self, y: Point) -> f64 {
        self.boundary_images()
            .map(|p| {
                if self.n == 2 {
                    geom::point_segment_distance(y, p[0], p[1])
                } else {
                    geom::point_triangle_distance(y, p[0], p[1], p[2])
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn hit(&self, dom: &[Point], img: &[Point], y: Point, depth: u32) -> Result<Option<Hit>> {
        let n = self.n;
        for i in 0..n {
            let mn = img[..=n].iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let mx = img[..=n].iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            if y[i] < mn || y[i] > mx {
                return Ok(None);
            }
        }
        let d_img = det(n, img);
        let d_dom = det(n, dom);
        let scale = img[..=n]
            .iter()
            .map(|p| geom::dist(*p, img[0]))
            .fold(0.0, f64::max)
            .powi(n as i32);
        if d_img.abs() <= 1e-12 * scale || scale == 0.0 {
            if depth >= MAX_REFINE {
                return Err(Error::Degenerate(depth));
            }
            let mut total = 0;
            for (cd, ci) in self.refine(dom)? {
                match self.hit(&cd, &ci, y, depth + 1)? {
                    Some(Hit::Sign(s)) => total += s,
                    Some(Hit::OnFace) => return Ok(Some(Hit::OnFace)),
                    None => {}
                }
            }
            return Ok(Some(Hit::Sign(total)));
        }
        let lam = barycentric(n, img, y, d_img);
        let min = lam[..=n].iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Ok(None);
        }
        if min <= 1e-12 {
            return Ok(Some(Hit::OnFace));
        }
        Ok(Some(Hit::Sign(if d_img * d_dom > 0.0 { 1 } else { -1 })))
    }

    /// Red refinement of a simplex, with the extension evaluated at the new vertices.
    fn refine(&self, dom: &[Point]) -> Result<Vec<(Vec<Point>, Vec<Point>)>> {
        let mid = |a: Point, b: Point| geom::scale(geom::add(a, b), 0.5);
        let children: Vec<Vec<Point>> = if self.n == 2 {
            let (a, b, c) = (dom[0], dom[1], dom[2]);
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            vec![vec![a, ab, ca], vec![ab, b, bc], vec![ca, bc, c], vec![ab, bc, ca]]
        } else {
            let (x0, x1, x2, x3) = (dom[0], dom[1], dom[2], dom[3]);
            let (x01, x02, x03, x12, x13, x23) = (mid(x0, x1), mid(x0, x2), mid(x0, x3), mid(x1, x2), mid(x1, x3), mid(x2, x3));
            vec![
                vec![x0, x01, x02, x03],
                vec![x01, x1, x12, x13],
                vec![x02, x12, x2, x23],
                vec![x03, x13, x23, x3],
                vec![x01, x02, x03, x23],
                vec![x01, x02, x12, x23],
                vec![x01, x03, x13, x23],
                vec![x01, x12, x13, x23],
            ]
        };
        children
            .into_iter()
            .map(|c| {
                let img = c.iter().map(|&x| self.plan.evaluate(x)).collect::<Result<Vec<_>>>()?;
                Ok((c, img))
            })
            .collect()
    }
}

/// Degree of the piecewise-affine interpolant of `ṽ` at `y`: the sum of
/// `sign det` over simplices whose image contains `y`.
pub fn simplicial_degree(mesh: &SimplicialMesh, y: Point, tol: f64) -> Result<i64> {
    let d = mesh.boundary_image_distance(y);
    if d <= tol {
        return Err(Error::Masked { distance: d });
    }
    let n = mesh.n;
    'attempt: for attempt in 0..4u32 {
        let mut yy = y;
        if attempt > 0 {
            let eps = 1e-9 * mesh.h * attempt as f64;
            yy[0] += eps * 0.754_877_666;
            yy[1] += eps * 0.569_840_291;
            if n == 3 {
                yy[2] += eps * 0.430_159_709;
            }
        }
        let mut total = 0i64;
        for s in &mesh.simplices {
            let dom: Vec<Point> = s.iter().take(n + 1).map(|&i| mesh.points[i as usize]).collect();
            let img: Vec<Point> = s.iter().take(n + 1).map(|&i| mesh.values[i as usize]).collect();
            match mesh.hit(&dom, &img, yy, 0)? {
                Some(Hit::Sign(v)) => total += v,
                Some(Hit::OnFace) => continue 'attempt,
                None => {}
            }
        }
        return Ok(total);
    }
    Err(Error::Degenerate(MAX_REFINE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::maps;
    use std::sync::Arc;

    fn disk_plan(map: crate::holder::MapFn) -> ExtensionPlan {
        ExtensionPlan::from_interior(Arc::new(DomainSpec::unit_ball(2).build().unwrap()), map)
    }

    #[test]
    fn identity_disk() {
        let mesh = SimplicialMesh::build(&disk_plan(maps::identity()), 0.05, 0.0).unwrap();
        assert_eq!(simplicial_degree(&mesh, [0.0; 3], 1e-9).unwrap(), 1);
        assert_eq!(simplicial_degree(&mesh, [1.5, 0.3, 0.0], 1e-9).unwrap(), 0);
    }

    #[test]
    fn complex_square() {
        let mesh = SimplicialMesh::build(&disk_plan(maps::complex_power(2)), 0.02, 0.0).unwrap();
        assert_eq!(simplicial_degree(&mesh, [0.25, 0.0, 0.0], 1e-9).unwrap(), 2);
    }

    #[test]
    fn grid_vertex_targets_are_perturbed() {
        // y coincides with a mesh vertex image: the face rule triggers a perturbation.
        let mesh = SimplicialMesh::build(&disk_plan(maps::identity()), 0.1, 0.0).unwrap();
        let v = mesh.values[mesh.values.len() / 2];
        assert_eq!(simplicial_degree(&mesh, v, 1e-9).unwrap(), 1);
    }

    #[test]
    fn degenerate_map_is_reported() {
        let mesh = SimplicialMesh::build(&disk_plan(maps::constant([0.2, 0.2, 0.0])), 0.2, 0.0).unwrap();
        // The target equals the constant value but also lies on the collapsed boundary image.
        assert!(simplicial_degree(&mesh, [0.2, 0.2, 0.0], 1e-9).is_err());
        // Away from the image every simplex is rejected by its bounding box.
        assert_eq!(simplicial_degree(&mesh, [0.5, 0.5, 0.0], 1e-9).unwrap(), 0);
    }

    #[test]
    fn identity_ball_in_space() {
        let plan = ExtensionPlan::from_interior(Arc::new(DomainSpec::unit_ball(3).build().unwrap()), maps::identity())
            .with_nodes(3);
        let mesh = SimplicialMesh::build(&plan, 0.2, 0.0).unwrap();
        assert_eq!(simplicial_degree(&mesh, [0.05, 0.02, -0.03], 1e-9).unwrap(), 1);
        assert_eq!(simplicial_degree(&mesh, [2.0, 0.0, 0.0], 1e-9).unwrap(), 0);
    }
}
