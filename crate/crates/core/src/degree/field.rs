use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solid_angle_degree_3d, winding_degree_2d, BoundaryImage, SimplicialMesh, SolidAngleOptions};
use crate::geom::{self, Point};
use crate::{Error, Result};

/// Uniform axis-aligned grid of cells of side `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    /// Lower corner of cell 0.
    pub origin: Point,
    pub h: f64,
    /// Cell counts per axis (unused axes are 1).
    pub dims: [usize; 3],
    /// Radius of the ball the grid was built to cover.
    pub radius: f64,
}

impl GridSpec {
    /// Grid covering the ball `B_R(center)`.
    pub fn covering_ball(n: usize, center: Point, radius: f64, h: f64) -> Self {
        let m = ((2.0 * radius / h).ceil() as usize).max(1);
        let mut origin = center;
        let mut dims = [1; 3];
        for i in 0..n {
            origin[i] -= 0.5 * m as f64 * h;
            dims[i] = m;
        }
        for o in origin.iter_mut().skip(n) {
            *o = 0.0;
        }
        Self { n, origin, h, dims, radius }
    }

    /// Grid covering the box `[lo, hi]`.
    pub fn covering_box(n: usize, lo: Point, hi: Point, h: f64) -> Self {
        let mut origin = [0.0; 3];
        let mut dims = [1; 3];
        for i in 0..n {
            let m = (((hi[i] - lo[i]) / h).ceil() as usize).max(1);
            let mid = 0.5 * (lo[i] + hi[i]);
            origin[i] = mid - 0.5 * m as f64 * h;
            dims[i] = m;
        }
        let radius = (0..n).map(|i| 0.5 * dims[i] as f64 * h).fold(0.0, f64::max);
        Self { n, origin, h, dims, radius }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().take(self.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rem = flat;
        for i in 0..self.n {
            idx[i] = rem % self.dims[i];
            rem /= self.dims[i];
        }
        idx
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        let mut f = 0;
        let mut s = 1;
        for i in 0..self.n {
            f += idx[i] * s;
            s *= self.dims[i];
        }
        f
    }

    pub fn center(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut c = [0.0; 3];
        for i in 0..self.n {
            c[i] = self.origin[i] + (idx[i] as f64 + 0.5) * self.h;
        }
        c
    }

    /// Flat index of the cell containing `y`.
    pub fn locate(&self, y: Point) -> Option<usize> {
        let mut idx = [0; 3];
        for i in 0..self.n {
            let c = ((y[i] - self.origin[i]) / self.h).floor();
            if c < 0.0 || c >= self.dims[i] as f64 {
                return None;
            }
            idx[i] = c as usize;
        }
        Some(self.flatten(idx))
    }

    /// Inclusive index range of cells whose centers may lie in `[lo, hi]` along `axis`.
    fn center_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let a = ((lo - self.origin[axis]) / self.h - 0.5).ceil().max(0.0);
        let b = ((hi - self.origin[axis]) / self.h - 0.5).floor();
        if b < a || a >= self.dims[axis] as f64 {
            return None;
        }
        Some((a as usize, (b as usize).min(self.dims[axis] - 1)))
    }
}

/// Point-algorithm cross-check of a sample of cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub checked: usize,
    pub mismatches: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    /// Cells whose centers lie within this distance of the boundary image are
    /// masked; defaults to the cell size.
    pub mask_width: Option<f64>,
    /// Number of cells re-evaluated with the per-point algorithm.
    pub check_samples: usize,
    pub seed: u64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { mask_width: None, check_samples: 64, seed: 0 }
    }
}

/// Integer degree values on a target grid with a mask of unreliable cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeField {
    pub grid: GridSpec,
    pub values: Vec<i64>,
    pub mask: Vec<bool>,
    /// Cells masked because a per-point evaluation failed.
    pub failed: usize,
    pub cross_check: CrossCheck,
}

fn mask_segments(grid: &GridSpec, mask: &mut [bool], segs: impl Iterator<Item = (Point, Point)>, w: f64) {
    for (a, b) in segs {
        let rx = grid.center_range(0, a[0].min(b[0]) - w, a[0].max(b[0]) + w);
        let ry = grid.center_range(1, a[1].min(b[1]) - w, a[1].max(b[1]) + w);
        let (Some(rx), Some(ry)) = (rx, ry) else { continue };
        for j in ry.0..=ry.1 {
            for i in rx.0..=rx.1 {
                let f = grid.flatten([i, j, 0]);
                if !mask[f] && geom::point_segment_distance(grid.center(f), a, b) <= w {
                    mask[f] = true;
                }
            }
        }
    }
}

fn mask_triangles(grid: &GridSpec, mask: &mut [bool], tris: impl Iterator<Item = [Point; 3]>, w: f64) {
    for t in tris {
        let mut r = [(0, 0); 3];
        let mut ok = true;
        for (axis, slot) in r.iter_mut().enumerate() {
            let lo = t.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min) - w;
            let hi = t.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max) + w;
            match grid.center_range(axis, lo, hi) {
                Some(x) => *slot = x,
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        for k in r[2].0..=r[2].1 {
            for j in r[1].0..=r[1].1 {
                for i in r[0].0..=r[0].1 {
                    let f = grid.flatten([i, j, k]);
                    if !mask[f] && geom::point_triangle_distance(grid.center(f), t[0], t[1], t[2]) <= w {
                        mask[f] = true;
                    }
                }
            }
        }
    }
}

fn mask_image(grid: &GridSpec, mask: &mut [bool], image: &BoundaryImage, w: f64) {
    match image {
        BoundaryImage::Polyline { points, .. } => {
            mask_segments(grid, mask, points.windows(2).map(|p| (p[0], p[1])), w)
        }
        BoundaryImage::Surface { vertices, triangles, .. } => mask_triangles(
            grid,
            mask,
            triangles.iter().map(|t| [vertices[t[0]], vertices[t[1]], vertices[t[2]]]),
            w,
        ),
    }
}

/// Winding numbers of all cell centres by horizontal scanlines.
fn scanline_2d(grid: &GridSpec, points: &[Point]) -> Vec<i64> {
    let (mx, my) = (grid.dims[0], grid.dims[1]);
    let mut rows: Vec<Vec<(f64, i64)>> = vec![Vec::new(); my];
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a[1] == b[1] {
            continue;
        }
        let (ylo, yhi) = (a[1].min(b[1]), a[1].max(b[1]));
        let Some((j0, j1)) = grid.center_range(1, ylo, yhi) else { continue };
        let sign = if b[1] > a[1] { 1 } else { -1 };
        for (j, row) in rows.iter_mut().enumerate().take(j1 + 1).skip(j0) {
            let y = grid.origin[1] + (j as f64 + 0.5) * grid.h;
            if y < ylo || y >= yhi {
                continue;
            }
            let x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            row.push((x, sign));
        }
    }
    let mut values = vec![0i64; mx * my];
    values.par_chunks_mut(mx).zip(rows.par_iter_mut()).enumerate().for_each(|(j, (out, row))| {
        row.sort_by(|p, q| q.0.total_cmp(&p.0));
        let mut acc = 0;
        let mut c = 0;
        for i in (0..mx).rev() {
            let x = grid.origin[0] + (i as f64 + 0.5) * grid.h;
            while c < row.len() && row[c].0 > x {
                acc += row[c].1;
                c += 1;
            }
            out[i] = acc;
        }
        let _ = j;
    });
    values
}

/// Degrees of all cell centres by rays along `+x` (shifted off the grid lines).
fn raycast_3d(grid: &GridSpec, vertices: &[Point], triangles: &[[usize; 3]]) -> Vec<i64> {
    let (mx, my, mz) = (grid.dims[0], grid.dims[1], grid.dims[2]);
    let (dy, dz) = (grid.h * 1.414_213_5e-7, grid.h * 1.732_050_8e-7);
    let mut rows: Vec<Vec<(f64, i64)>> = vec![Vec::new(); my * mz];
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    for t in triangles {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let (pa, pb, pc) = ([a[1], a[2]], [b[1], b[2]], [c[1], c[2]]);
        let area = orient(pa, pb, pc);
        if area == 0.0 {
            continue;
        }
        let ry = grid.center_range(1, a[1].min(b[1]).min(c[1]) - dy, a[1].max(b[1]).max(c[1]));
        let rz = grid.center_range(2, a[2].min(b[2]).min(c[2]) - dz, a[2].max(b[2]).max(c[2]));
        let (Some(ry), Some(rz)) = (ry, rz) else { continue };
        for k in rz.0..=rz.1 {
            let z = grid.origin[2] + (k as f64 + 0.5) * grid.h + dz;
            for j in ry.0..=ry.1 {
                let y = grid.origin[1] + (j as f64 + 0.5) * grid.h + dy;
                let p = [y, z];
                let (e0, e1, e2) = (orient(pb, pc, p), orient(pc, pa, p), orient(pa, pb, p));
                let inside = (e0 > 0.0 && e1 > 0.0 && e2 > 0.0) || (e0 < 0.0 && e1 < 0.0 && e2 < 0.0);
                if !inside {
                    continue;
                }
                let x = (e0 * a[0] + e1 * b[0] + e2 * c[0]) / (e0 + e1 + e2);
                rows[j + my * k].push((x, if area > 0.0 { 1 } else { -1 }));
            }
        }
    }
    let mut values = vec![0i64; mx * my * mz];
    values.par_chunks_mut(mx).zip(rows.par_iter_mut()).for_each(|(out, row)| {
        row.sort_by(|p, q| q.0.total_cmp(&p.0));
        let mut acc = 0;
        let mut c = 0;
        for i in (0..mx).rev() {
            let x = grid.origin[0] + (i as f64 + 0.5) * grid.h;
            while c < row.len() && row[c].0 > x {
                acc += row[c].1;
                c += 1;
            }
            out[i] = acc;
        }
    });
    values
}

/// Degree field of a closed boundary image: every cell centre is evaluated by a
/// scanline (plane) or ray (space) crossing count, cells within the mask width of
/// the image are masked, and a seeded sample of unmasked cells is re-evaluated
/// with the winding-number or solid-angle algorithm.
pub fn degree_field(image: &BoundaryImage, grid: GridSpec, opts: &FieldOptions) -> Result<DegreeField> {
    if image.dim() != grid.n {
        return Err(Error::InvalidParameter("grid dimension differs from the image".into()));
    }
    let w = opts.mask_width.unwrap_or(grid.h);
    let mut mask = vec![false; grid.len()];
    mask_image(&grid, &mut mask, image, w);
    let values = match image {
        BoundaryImage::Polyline { points, .. } => scanline_2d(&grid, points),
        BoundaryImage::Surface { vertices, triangles, .. } => raycast_3d(&grid, vertices, triangles),
    };
    let mut field = DegreeField { grid, values, mask, failed: 0, cross_check: CrossCheck::default() };
    let unmasked: Vec<usize> = (0..field.values.len()).filter(|&i| !field.mask[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picks: Vec<usize> = sample(&mut rng, unmasked.len(), opts.check_samples.min(unmasked.len()))
        .into_iter()
        .map(|i| unmasked[i])
        .collect();
    let sa = SolidAngleOptions { tol: 0.5 * w, ..Default::default() };
    let results: Vec<(usize, Result<i64>)> = picks
        .par_iter()
        .map(|&c| {
            let y = grid.center(c);
            let r = match image {
                BoundaryImage::Polyline { .. } => winding_degree_2d(image, y, 0.5 * w),
                BoundaryImage::Surface { .. } => solid_angle_degree_3d(image, y, &sa),
            };
            (c, r)
        })
        .collect();
    for (c, r) in results {
        field.cross_check.checked += 1;
        match r {
            Ok(d) if d == field.values[c] => {}
            Ok(_) => field.cross_check.mismatches += 1,
            Err(_) => {
                field.cross_check.failures += 1;
                field.mask[c] = true;
                field.failed += 1;
            }
        }
    }
    Ok(field)
}

/// Degree field of the piecewise-affine interpolant on a simplicial mesh: each
/// simplex adds its orientation sign to the cells whose centres its image
/// contains. Cells near the image of the mesh boundary, and near `boundary` if
/// given, are masked.
pub fn degree_field_simplicial(
    mesh: &SimplicialMesh,
    boundary: Option<&BoundaryImage>,
    grid: GridSpec,
    opts: &FieldOptions,
) -> Result<DegreeField> {
    let n = mesh.dim();
    if grid.n != n {
        return Err(Error::InvalidParameter("grid dimension differs from the mesh".into()));
    }
    let w = opts.mask_width.unwrap_or(grid.h);
    let mut values = vec![0i64; grid.len()];
    let shift = [grid.h * 1.414_213_5e-7, grid.h * 1.732_050_8e-7, grid.h * 2.236_068e-7];
    for (img, sign) in mesh.simplex_images().zip(mesh.simplex_signs()) {
        if sign == 0 {
            continue;
        }
        let mut ranges = [(0usize, 0usize); 3];
        let mut ok = true;
        for (axis, r) in ranges.iter_mut().enumerate().take(n) {
            let lo = img[..=n].iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min) - shift[axis];
            let hi = img[..=n].iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
            match grid.center_range(axis, lo, hi) {
                Some(x) => *r = x,
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let d = simplex_det(n, &img);
        for k in ranges[2].0..=ranges[2].1 {
            for j in ranges[1].0..=ranges[1].1 {
                for i in ranges[0].0..=ranges[0].1 {
                    let f = grid.flatten([i, j, k]);
                    let mut y = grid.center(f);
                    for a in 0..n {
                        y[a] += shift[a];
                    }
                    if inside_simplex(n, &img, y, d) {
                        values[f] += sign;
                    }
                }
            }
        }
    }
    let mut mask = vec![false; grid.len()];
    if n == 2 {
        mask_segments(&grid, &mut mask, mesh.boundary_images().map(|p| (p[0], p[1])), w);
    } else {
        mask_triangles(&grid, &mut mask, mesh.boundary_images(), w);
    }
    if let Some(b) = boundary {
        mask_image(&grid, &mut mask, b, w);
    }
    Ok(DegreeField { grid, values, mask, failed: 0, cross_check: CrossCheck::default() })
}

fn simplex_det(n: usize, p: &[Point; 4]) -> f64 {
    let a = geom::sub(p[1], p[0]);
    let b = geom::sub(p[2], p[0]);
    if n == 2 {
        geom::cross2(a, b)
    } else {
        geom::dot(a, geom::cross(b, geom::sub(p[3], p[0])))
    }
}

fn inside_simplex(n: usize, p: &[Point; 4], y: Point, d: f64) -> bool {
    if d == 0.0 {
        return false;
    }
    let mut sum = 0.0;
    for i in 1..=n {
        let mut q = *p;
        q[i] = y;
        let l = simplex_det(n, &q) / d;
        if l < 0.0 {
            return false;
        }
        sum += l;
    }
    sum <= 1.0
}

impl DegreeField {
    /// Field from explicit values (row-major, first axis fastest).
    pub fn from_values(grid: GridSpec, values: Vec<i64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values and mask entries, got {} and {}",
                grid.len(),
                values.len(),
                mask.len()
            )));
        }
        Ok(Self { grid, values, mask, failed: 0, cross_check: CrossCheck::default() })
    }

    /// Field from an integer function of the cell centre, nothing masked.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> i64) -> Self {
        let values = (0..grid.len()).map(|c| f(grid.center(c))).collect();
        Self { grid, values, mask: vec![false; grid.len()], failed: 0, cross_check: CrossCheck::default() }
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn masked_volume(&self) -> f64 {
        self.masked_count() as f64 * self.grid.cell_volume()
    }

    /// Value at the cell containing `y` (`None` outside the grid or if masked).
    pub fn value_at(&self, y: Point) -> Option<i64> {
        let c = self.grid.locate(y)?;
        (!self.mask[c]).then_some(self.values[c])
    }

    /// Largest distance from `center` of an unmasked cell with a nonzero value.
    pub fn support_radius(&self, center: Point) -> f64 {
        (0..self.values.len())
            .filter(|&c| !self.mask[c] && self.values[c] != 0)
            .map(|c| geom::dist(self.grid.center(c), center))
            .fold(0.0, f64::max)
    }

    fn neighbors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.grid.unflatten(c);
        let n = self.grid.n;
        (0..n).flat_map(move |axis| {
            let mut out = [None, None];
            if idx[axis] > 0 {
                let mut j = idx;
                j[axis] -= 1;
                out[0] = Some(self.grid.flatten(j));
            }
            if idx[axis] + 1 < self.grid.dims[axis] {
                let mut j = idx;
                j[axis] += 1;
                out[1] = Some(self.grid.flatten(j));
            }
            out.into_iter().flatten()
        })
    }

    /// Connected components of unmasked cells (face adjacency) and the number of
    /// components on which the value is not constant.
    pub fn components(&self) -> (usize, usize) {
        let mut label = vec![usize::MAX; self.values.len()];
        let mut count = 0;
        let mut nonconstant = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.values.len() {
            if self.mask[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push_back(start);
            let v0 = self.values[start];
            let mut constant = true;
            while let Some(c) = queue.pop_front() {
                if self.values[c] != v0 {
                    constant = false;
                }
                for nb in self.neighbors(c) {
                    if !self.mask[nb] && label[nb] == usize::MAX {
                        label[nb] = count;
                        queue.push_back(nb);
                    }
                }
            }
            if !constant {
                nonconstant += 1;
            }
            count += 1;
        }
        (count, nonconstant)
    }

    /// Text serialization: header, row-major values, mask bitmap.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let n = g.n;
        let mut s = String::from("DEGREEFIELD 1\n");
        let _ = writeln!(s, "n {n}");
        let _ = writeln!(s, "R {}", g.radius);
        let _ = writeln!(s, "h {}", g.h);
        let dims: Vec<String> = g.dims.iter().take(n).map(|d| d.to_string()).collect();
        let _ = writeln!(s, "dims {}", dims.join(" "));
        let origin: Vec<String> = g.origin.iter().take(n).map(|d| d.to_string()).collect();
        let _ = writeln!(s, "origin {}", origin.join(" "));
        s.push_str("values\n");
        for row in self.values.chunks(g.dims[0]) {
            let r: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&r.join(" "));
            s.push('\n');
        }
        s.push_str("mask\n");
        for row in self.mask.chunks(g.dims[0]) {
            s.extend(row.iter().map(|&m| if m { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }

    /// CSV export: cell centre, value, masked flag.
    pub fn to_csv(&self) -> String {
        let n = self.grid.n;
        let mut s = String::from(match n {
            1 => "x,value,masked\n",
            2 => "x,y,value,masked\n",
            _ => "x,y,z,value,masked\n",
        });
        for c in 0..self.values.len() {
            let p = self.grid.center(c);
            for x in p.iter().take(n) {
                let _ = write!(s, "{x},");
            }
            let _ = writeln!(s, "{},{}", self.values[c], u8::from(self.mask[c]));
        }
        s
    }
}

/// Parses the output of [`DegreeField::to_text`].
pub fn parse_field_text(text: &str) -> Result<DegreeField> {
    let bad = |m: &str| Error::Parse(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some("DEGREEFIELD 1") {
        return Err(bad("missing DEGREEFIELD header"));
    }
    let mut field = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(&format!("expected '{key}'")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
    let n: usize = field("n")?.first().ok_or_else(|| bad("n"))?.parse().map_err(|_| bad("n"))?;
    if !(1..=3).contains(&n) {
        return Err(bad("n must be 1, 2 or 3"));
    }
    let radius = num(field("R")?.first().ok_or_else(|| bad("R"))?)?;
    let h = num(field("h")?.first().ok_or_else(|| bad("h"))?)?;
    let d = field("dims")?;
    let o = field("origin")?;
    if d.len() != n || o.len() != n {
        return Err(bad("dims/origin length differs from n"));
    }
    let mut dims = [1; 3];
    let mut origin = [0.0; 3];
    for i in 0..n {
        dims[i] = d[i].parse().map_err(|_| bad("dims"))?;
        origin[i] = num(&o[i])?;
    }
    let grid = GridSpec { n, origin, h, dims, radius };
    if lines.next() != Some("values") {
        return Err(bad("expected 'values'"));
    }
    let rows = grid.len() / dims[0];
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..rows {
        let line = lines.next().ok_or_else(|| bad("truncated values"))?;
        for v in line.split_whitespace() {
            values.push(v.parse::<i64>().map_err(|_| bad("value"))?);
        }
    }
    if lines.next() != Some("mask") {
        return Err(bad("expected 'mask'"));
    }
    let mut mask = Vec::with_capacity(grid.len());
    for _ in 0..rows {
        let line = lines.next().ok_or_else(|| bad("truncated mask"))?;
        for ch in line.chars() {
            mask.push(match ch {
                '0' => false,
                '1' => true,
                _ => return Err(bad("mask character")),
            });
        }
    }
    DegreeField::from_values(grid, values, mask)
}
