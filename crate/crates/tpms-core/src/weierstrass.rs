//! Minimal surface patches from the Weierstrass representation.
//!
//! With Gauss map `G` (a theta-power product, see [`crate::scmap`]) and
//! height differential `dh = dz`, the surface is
//!
//! ```text
//! X(z) = ( Re int (1/G - G)/2 dz,  Re int i (1/G + G)/2 dz,  Re z ),
//! ```
//!
//! integrated from the base point, which maps to the origin. Writing
//! `Phi1 = int G dz` and `Phi2 = int dz/G`, the horizontal projection is
//! `2 F = conj(Phi2) - Phi1`, and the vertical period is exactly 1 since
//! `dh = dz` and the strip translation is `z -> z + 1`.
//!
//! A [`SurfacePatch`] stores the complex integrals `Phi1, Phi2` on a grid
//! over one full period `[0, 1] x [0, d/2]` together with an associate
//! family rotation `rho`; the conjugate patch is `rho -> -i rho` with no new
//! integration.

use crate::divisor::DivisorSpec;
use crate::par;
use crate::quad::{Grading, QuadError};
use crate::scmap::{segment_integral, BranchState, GaussMap, ScError};
use crate::theta::{ThetaError, TorusParams};
use nalgebra::{Point3, Vector2, Vector3};
use num_complex::Complex64;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Sc(#[from] ScError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("grid resolution {nu}x{nv} below the 8x8 minimum")]
    ResolutionTooLow { nu: usize, nv: usize },
    #[error("column x = {x} too close to a divisor point for the grid spine")]
    BasePointBlocked { x: f64 },
    #[error("boundary interval has fewer than 3 distinct points")]
    DegenerateEdge,
    #[error("no such boundary label {0:?}")]
    NoSuchLabel(EdgeLabel),
}

/// Label of one boundary interval between consecutive divisor points: the
/// planar symmetry curve of that interval lies in a single vertical plane.
/// `Lower(i)`/`Upper(j)` is the interval starting at the i-th (j-th) divisor
/// point of that edge; the last interval wraps through x = 0. An edge with
/// no divisor points is a single interval with index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Lower(usize),
    Upper(usize),
}

/// Memoizing evaluator for the Weierstrass integrals at arbitrary strip
/// points (route: base point, mid-strip horizontal, vertical approach).
pub struct IntegralCache {
    gm: GaussMap,
    dspec: DivisorSpec,
    tol: f64,
    memo: HashMap<(u64, u64), (Complex64, Complex64)>,
}

impl IntegralCache {
    pub fn new(dspec: &DivisorSpec, tol: f64) -> Result<Self, SurfaceError> {
        Ok(IntegralCache {
            gm: GaussMap::from_divisor(dspec)?,
            dspec: dspec.clone(),
            tol,
            memo: HashMap::new(),
        })
    }

    pub fn gauss_map(&self) -> &GaussMap {
        &self.gm
    }

    /// `(Phi1, Phi2)` at `z`, with `Phi(base) = 0`.
    pub fn phi_at(&mut self, z: Complex64) -> Result<(Complex64, Complex64), SurfaceError> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let base = self.gm.base();
        let h = self.dspec.t.strip_height();
        let y_mid = h / 2.0;
        // base -> up to mid-strip -> across -> vertically to z.
        let mut pts = vec![
            base,
            Complex64::new(base.re, y_mid),
            Complex64::new(z.re, y_mid),
            z,
        ];
        pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
        let mut st = self.gm.fresh_state()?;
        let mut phi1 = Complex64::new(0.0, 0.0);
        let mut phi2 = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            let grading = if self.gm.clearance(w[1]) < 1e-9 {
                Grading::End {
                    exponent: exponent_near(&self.dspec, w[1]).abs(),
                }
            } else {
                Grading::None
            };
            let (a, b) = segment_integral(&self.gm, &mut st, w[0], w[1], grading, self.tol)?;
            phi1 += a;
            phi2 += b;
        }
        self.memo.insert(key, (phi1, phi2));
        Ok((phi1, phi2))
    }
}

/// Exponent of the divisor point nearest to `z` (signed).
fn exponent_near(d: &DivisorSpec, z: Complex64) -> f64 {
    let h = d.t.strip_height();
    let mut best = (f64::INFINITY, 0.0);
    for p in d.lower() {
        let dist = d.t.dist_to_lattice(z - Complex64::new(p.pos, 0.0));
        if dist < best.0 {
            best = (dist, p.exp_f64());
        }
    }
    for q in d.upper() {
        let dist = d.t.dist_to_lattice(z - Complex64::new(q.pos, h));
        if dist < best.0 {
            best = (dist, q.exp_f64());
        }
    }
    best.1
}

/// Surface position at a single strip point (integration constants fixed so
/// the base point maps to the origin).
pub fn surface_point(z: Complex64, cache: &mut IntegralCache) -> Result<Point3<f64>, SurfaceError> {
    let (phi1, phi2) = cache.phi_at(z)?;
    Ok(point_from_phi(phi1, phi2, z, Complex64::new(1.0, 0.0)))
}

/// Weierstrass coordinates from the two integrals, an associate-family
/// rotation `rho` (1 for the surface itself, -i for its conjugate), and the
/// parameter `z`.
pub fn point_from_phi(
    phi1: Complex64,
    phi2: Complex64,
    z: Complex64,
    rho: Complex64,
) -> Point3<f64> {
    let p1 = rho * phi1;
    let p2 = rho * phi2;
    let x1 = 0.5 * (p2.re - p1.re);
    let x2 = -0.5 * (p2.im + p1.im);
    let x3 = (rho * z).re;
    Point3::new(x1, x2, x3)
}

/// Horizontal projection `F = x1 + i x2`.
pub fn f_from_phi(phi1: Complex64, phi2: Complex64, rho: Complex64) -> Complex64 {
    let p1 = rho * phi1;
    let p2 = rho * phi2;
    0.5 * (p2.conj() - p1)
}

/// Options for patch generation.
#[derive(Debug, Clone)]
pub struct PatchOptions {
    /// Quadrature tolerance for every segment integral.
    pub tol: f64,
    /// Optional tanh clustering strength towards the divisor columns
    /// (better triangle shapes near corners; breaks grid uniformity).
    pub clustering: Option<f64>,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            tol: 1e-10,
            clustering: None,
        }
    }
}

/// A sampled fundamental piece: the Weierstrass integrals on a grid over
/// `[0, 1] x [0, d/2]`, with divisor positions inserted as exact columns so
/// the boundary polylines have true corner nodes.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub t: TorusParams,
    dspec: DivisorSpec,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Columns at uniform positions j/nu (false for inserted divisor
    /// columns and clustered columns).
    uniform: Vec<bool>,
    phi1: Vec<Complex64>,
    phi2: Vec<Complex64>,
    gvals: Vec<Complex64>,
    /// Associate family rotation: 1 original, -i conjugate.
    rho: Complex64,
    /// Column index of each lower divisor point, in divisor order.
    lower_cols: Vec<usize>,
    upper_cols: Vec<usize>,
}

/// Fitted vertical plane through a boundary polyline.
#[derive(Debug, Clone, Copy)]
pub struct VerticalPlane {
    /// Unit horizontal normal, oriented away from the surface.
    pub normal: Vector2<f64>,
    /// Signed offset: the plane is `normal . x = offset`.
    pub offset: f64,
    /// Direction angle of the trace line in the horizontal plane.
    pub direction: f64,
    /// Largest deviation of the polyline from the plane.
    pub residual_max: f64,
    pub residual_rms: f64,
}

impl VerticalPlane {
    /// Unoriented angle between the trace lines of two vertical planes,
    /// in `[0, pi/2]`.
    pub fn line_angle_to(&self, other: &VerticalPlane) -> f64 {
        let mut da = (self.direction - other.direction).abs() % std::f64::consts::PI;
        if da > std::f64::consts::FRAC_PI_2 {
            da = std::f64::consts::PI - da;
        }
        da
    }

    /// Dihedral angle of the surface wedge between two planes sharing an
    /// edge, in `[0, pi]`: outward normals of a wedge of opening `phi` meet
    /// at `pi - phi`.
    pub fn wedge_angle_to(&self, other: &VerticalPlane) -> f64 {
        let dot = self.normal.dot(&other.normal).clamp(-1.0, 1.0);
        std::f64::consts::PI - dot.acos()
    }

    /// Signed distance from this plane to another (near-)parallel plane,
    /// measured along this plane's normal.
    pub fn signed_gap_to(&self, other: &VerticalPlane) -> f64 {
        let rel = other.normal.dot(&self.normal);
        other.offset * rel.signum() - self.offset
    }
}

impl SurfacePatch {
    pub fn nrows(&self) -> usize {
        self.ys.len()
    }

    pub fn ncols(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn divisor(&self) -> &DivisorSpec {
        &self.dspec
    }

    pub fn rho(&self) -> Complex64 {
        self.rho
    }

    pub fn is_uniform_col(&self, col: usize) -> bool {
        self.uniform[col]
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.xs.len() + col
    }

    pub fn z_at(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.xs[col], self.ys[row])
    }

    pub fn phi_at(&self, row: usize, col: usize) -> (Complex64, Complex64) {
        let i = self.idx(row, col);
        (self.phi1[i], self.phi2[i])
    }

    /// Gauss map value at a grid node (NaN components at divisor corners).
    pub fn gauss_at(&self, row: usize, col: usize) -> Complex64 {
        self.gvals[self.idx(row, col)]
    }

    pub fn point(&self, row: usize, col: usize) -> Point3<f64> {
        let i = self.idx(row, col);
        point_from_phi(self.phi1[i], self.phi2[i], self.z_at(row, col), self.rho)
    }

    /// Horizontal projection `F` at a node.
    pub fn f_at(&self, row: usize, col: usize) -> Complex64 {
        let i = self.idx(row, col);
        f_from_phi(self.phi1[i], self.phi2[i], self.rho)
    }

    /// Unit surface normal from the stereographically projected Gauss map.
    /// At divisor corners the limit is vertical: down where the exponent is
    /// positive (G -> 0), up where it is negative (G -> infinity).
    pub fn normal(&self, row: usize, col: usize) -> Vector3<f64> {
        let g = self.gauss_at(row, col);
        if g.re.is_nan() {
            let exp = exponent_near(&self.dspec, self.z_at(row, col));
            return Vector3::new(0.0, 0.0, if exp > 0.0 { -1.0 } else { 1.0 });
        }
        let n2 = g.norm_sqr();
        Vector3::new(2.0 * g.re, 2.0 * g.im, n2 - 1.0) / (n2 + 1.0)
    }

    /// The conjugate patch: same integrals, associate rotation advanced by
    /// a quarter turn. Boundary symmetry curves become straight lines.
    pub fn conjugate(&self) -> SurfacePatch {
        let mut p = self.clone();
        p.rho *= Complex64::new(0.0, -1.0);
        p
    }

    /// Number of boundary intervals on an edge (1 if the edge has no
    /// divisor points).
    pub fn interval_count(&self, upper: bool) -> usize {
        let n = if upper {
            self.upper_cols.len()
        } else {
            self.lower_cols.len()
        };
        n.max(1)
    }

    /// All labels of this patch in deterministic order.
    pub fn labels(&self) -> Vec<EdgeLabel> {
        let mut v: Vec<EdgeLabel> = (0..self.interval_count(false))
            .map(EdgeLabel::Lower)
            .collect();
        v.extend((0..self.interval_count(true)).map(EdgeLabel::Upper));
        v
    }

    /// Grid nodes (row, col) of one boundary interval, ordered along the
    /// boundary. The wrap interval lists the right piece first, then the
    /// left piece (one period over; same trace in projection).
    pub fn boundary_nodes(&self, label: EdgeLabel) -> Result<Vec<(usize, usize)>, SurfaceError> {
        let (row, cols, idx) = match label {
            EdgeLabel::Lower(i) => (0usize, &self.lower_cols, i),
            EdgeLabel::Upper(j) => (self.nrows() - 1, &self.upper_cols, j),
        };
        let ncols = self.ncols();
        if cols.is_empty() {
            if idx != 0 {
                return Err(SurfaceError::NoSuchLabel(label));
            }
            return Ok((0..ncols).map(|c| (row, c)).collect());
        }
        if idx >= cols.len() {
            return Err(SurfaceError::NoSuchLabel(label));
        }
        let start = cols[idx];
        let nodes: Vec<(usize, usize)> = if idx + 1 < cols.len() {
            (start..=cols[idx + 1]).map(|c| (row, c)).collect()
        } else {
            let mut v: Vec<(usize, usize)> = (start..ncols).map(|c| (row, c)).collect();
            v.extend((1..=cols[0]).map(|c| (row, c)));
            v
        };
        Ok(nodes)
    }

    /// Least-squares vertical plane through a labeled boundary polyline,
    /// oriented away from the surface.
    pub fn plane_of(&self, label: EdgeLabel) -> Result<VerticalPlane, SurfaceError> {
        let nodes = self.boundary_nodes(label)?;
        let pts: Vec<Vector2<f64>> = nodes
            .iter()
            .map(|&(r, c)| {
                let f = self.f_at(r, c);
                Vector2::new(f.re, f.im)
            })
            .collect();
        let mut distinct = 1;
        for w in pts.windows(2) {
            if (w[1] - w[0]).norm() > 1e-12 {
                distinct += 1;
            }
        }
        if distinct < 3 {
            return Err(SurfaceError::DegenerateEdge);
        }
        let n = pts.len() as f64;
        let centroid = pts.iter().sum::<Vector2<f64>>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &pts {
            let dd = p - centroid;
            sxx += dd.x * dd.x;
            sxy += dd.x * dd.y;
            syy += dd.y * dd.y;
        }
        // Principal axis of the 2x2 covariance.
        let direction = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mut normal = Vector2::new(-direction.sin(), direction.cos());
        // Orient away from the surface: probe one grid row inward from the
        // interval midpoint.
        let (r, c) = nodes[nodes.len() / 2];
        let r_in = if r == 0 { 1 } else { r - 1 };
        let probe = self.f_at(r_in, c);
        let probe = Vector2::new(probe.re, probe.im);
        if normal.dot(&(probe - centroid)) > 0.0 {
            normal = -normal;
        }
        let offset = normal.dot(&centroid);
        let mut max_dev: f64 = 0.0;
        let mut sum_sq = 0.0;
        for p in &pts {
            let dev = normal.dot(p) - offset;
            max_dev = max_dev.max(dev.abs());
            sum_sq += dev * dev;
        }
        Ok(VerticalPlane {
            normal,
            offset,
            direction,
            residual_max: max_dev,
            residual_rms: (sum_sq / n).sqrt(),
        })
    }

    /// Largest scaled five-point Laplacian of the coordinate functions over
    /// interior nodes with uniformly spaced neighbors, at least `margin`
    /// away from the divisor corners (derivatives are unbounded there).
    /// Tends to zero like the grid spacing squared for harmonic
    /// coordinates.
    pub fn harmonicity_residual(&self, margin: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let hy = self.ys[1] - self.ys[0];
        for (r, c) in self.metric_nodes(margin) {
            let hx = self.xs[c + 1] - self.xs[c];
            let p = self.point(r, c);
            let lap = (self.point(r, c - 1).coords + self.point(r, c + 1).coords
                - 2.0 * p.coords)
                / (hx * hx)
                + (self.point(r - 1, c).coords + self.point(r + 1, c).coords - 2.0 * p.coords)
                    / (hy * hy);
            worst = worst.max(lap.norm());
        }
        worst
    }

    /// Interior nodes suitable for metric tests: uniformly spaced in x and
    /// at least `margin` away (in x) from every divisor column.
    fn metric_nodes(&self, margin: f64) -> Vec<(usize, usize)> {
        let corner_xs: Vec<f64> = self
            .lower_cols
            .iter()
            .chain(self.upper_cols.iter())
            .map(|&c| self.xs[c])
            .collect();
        let mut out = Vec::new();
        for r in 1..self.nrows() - 1 {
            for c in 1..self.ncols() - 1 {
                let hx1 = self.xs[c] - self.xs[c - 1];
                let hx2 = self.xs[c + 1] - self.xs[c];
                if (hx1 - hx2).abs() > 1e-12 {
                    continue;
                }
                let x = self.xs[c];
                let clear = corner_xs
                    .iter()
                    .map(|&cx| {
                        let dd = (x - cx).rem_euclid(1.0);
                        dd.min(1.0 - dd)
                    })
                    .fold(f64::INFINITY, f64::min);
                if clear >= margin {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Worst relative conformality defect `max(|E - G|, 2|F|) / (E + G)`
    /// of the first fundamental form over interior nodes away from corners.
    pub fn conformality_error(&self, margin: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let hy = self.ys[1] - self.ys[0];
        for (r, c) in self.metric_nodes(margin) {
            let hx = self.xs[c + 1] - self.xs[c];
            let xu = (self.point(r, c + 1).coords - self.point(r, c - 1).coords) / (2.0 * hx);
            let xv = (self.point(r + 1, c).coords - self.point(r - 1, c).coords) / (2.0 * hy);
            let e = xu.norm_squared();
            let g = xv.norm_squared();
            let f = xu.dot(&xv);
            worst = worst.max(((e - g).abs().max(2.0 * f.abs())) / (e + g));
        }
        worst
    }

    /// Worst angular error (radians) between the finite-difference normal
    /// and the stereographic Gauss-map normal, away from corners.
    pub fn normal_consistency_error(&self, margin: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let hy = self.ys[1] - self.ys[0];
        for (r, c) in self.metric_nodes(margin) {
            let hx = self.xs[c + 1] - self.xs[c];
            let xu = (self.point(r, c + 1).coords - self.point(r, c - 1).coords) / (2.0 * hx);
            let xv = (self.point(r + 1, c).coords - self.point(r - 1, c).coords) / (2.0 * hy);
            let fd = xu.cross(&xv);
            if fd.norm() < 1e-14 {
                continue;
            }
            let fd = fd.normalize();
            let gn = self.normal(r, c);
            let dot = fd.dot(&gn).abs().clamp(-1.0, 1.0);
            worst = worst.max(dot.acos());
        }
        worst
    }

    /// Largest deviation of `X(z + 1) - X(z)` from the vertical translation
    /// over all rows (the conjugate patch translates by `Re(rho)` instead).
    pub fn vertical_period_error(&self) -> f64 {
        let last = self.ncols() - 1;
        let shift = Vector3::new(0.0, 0.0, self.rho.re);
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows() {
            let d = self.point(r, last).coords - self.point(r, 0).coords - shift;
            worst = worst.max(d.norm());
        }
        worst
    }
}

/// Sample the fundamental piece on a grid over one period.
///
/// Columns are the `nu+1` uniform positions with every divisor position
/// inserted as an exact extra column (uniform columns closer than a quarter
/// spacing to a divisor position are dropped). Each row is integrated
/// cumulatively from a spine at `x = 0`, so a point costs one incremental
/// segment; rows run in parallel.
pub fn make_patch(
    dspec: &DivisorSpec,
    nu: usize,
    nv: usize,
    opts: &PatchOptions,
) -> Result<SurfacePatch, SurfaceError> {
    if nu < 8 || nv < 8 {
        return Err(SurfaceError::ResolutionTooLow { nu, nv });
    }
    let gm = GaussMap::from_divisor(dspec)?;
    let h = dspec.t.strip_height();

    // Column construction: divisor x-positions from both edges become exact
    // columns.
    let mut corner_xs: Vec<f64> = dspec
        .lower()
        .iter()
        .map(|p| p.pos)
        .chain(dspec.upper().iter().map(|q| q.pos))
        .collect();
    corner_xs.sort_by(|a, b| a.total_cmp(b));
    corner_xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let spacing = 1.0 / nu as f64;
    let min_gap = 0.25 * spacing;
    if corner_xs.iter().any(|&x| x < min_gap || x > 1.0 - min_gap) {
        return Err(SurfaceError::BasePointBlocked {
            x: corner_xs.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }

    let mut cols: Vec<(f64, bool)> = Vec::new(); // (x, uniform)
    for j in 0..=nu {
        let x = j as f64 * spacing;
        if corner_xs.iter().all(|&cx| (x - cx).abs() >= min_gap) {
            cols.push((x, true));
        }
    }
    for &cx in &corner_xs {
        cols.push((cx, false));
    }
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Optional tanh clustering towards corner columns: remap uniform
    // columns within each inter-corner interval.
    if let Some(beta) = opts.clustering {
        if !corner_xs.is_empty() {
            let mut anchors: Vec<f64> = corner_xs.clone();
            anchors.insert(0, corner_xs.last().unwrap() - 1.0);
            anchors.push(corner_xs.first().unwrap() + 1.0);
            for col in cols.iter_mut().filter(|c| c.1) {
                let x = col.0;
                for w in anchors.windows(2) {
                    if x > w[0] && x < w[1] {
                        let u = (x - w[0]) / (w[1] - w[0]);
                        let v = 0.5 * (((beta * (2.0 * u - 1.0)).tanh() / beta.tanh()) + 1.0);
                        col.0 = w[0] + v * (w[1] - w[0]);
                        col.1 = false;
                        break;
                    }
                }
            }
            // Endpoints x = 0 and x = 1 must stay exact for the period
            // checks; the clustering map fixes interval endpoints already.
            cols.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }

    let xs: Vec<f64> = cols.iter().map(|c| c.0).collect();
    let uniform: Vec<bool> = cols.iter().map(|c| c.1).collect();
    let ncols = xs.len();
    let find_col = |pos: f64| xs.iter().position(|&x| (x - pos).abs() < 1e-12).unwrap();
    let lower_cols: Vec<usize> = dspec.lower().iter().map(|p| find_col(p.pos)).collect();
    let upper_cols: Vec<usize> = dspec.upper().iter().map(|q| find_col(q.pos)).collect();

    let ys: Vec<f64> = (0..=nv).map(|i| i as f64 * h / nv as f64).collect();

    // The grid spine runs up x = 0 and must be clear of divisor points.
    if gm.base().re != 0.0 || gm.clearance(Complex64::new(0.0, 0.0)) < 1e-3 {
        return Err(SurfaceError::BasePointBlocked { x: 0.0 });
    }

    // Cumulative spine integrals up x = 0.
    let mut spine: Vec<(Complex64, Complex64, BranchState)> = Vec::with_capacity(ys.len());
    {
        let mut st = gm.fresh_state()?;
        let mut phi1 = Complex64::new(0.0, 0.0);
        let mut phi2 = Complex64::new(0.0, 0.0);
        gm.eval(&mut st, Complex64::new(0.0, 0.0))?;
        spine.push((phi1, phi2, st.clone()));
        for i in 1..ys.len() {
            let a = Complex64::new(0.0, ys[i - 1]);
            let b = Complex64::new(0.0, ys[i]);
            let (d1, d2) = segment_integral(&gm, &mut st, a, b, Grading::None, opts.tol)?;
            phi1 += d1;
            phi2 += d2;
            spine.push((phi1, phi2, st.clone()));
        }
    }

    // Per-row cumulative integration (parallel over rows).
    let nrows = ys.len();
    let tol = opts.tol;
    let top_row = nrows - 1;
    type Row = (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>);
    let rows: Vec<Result<Row, SurfaceError>> = par::map_indices(nrows, |r| {
        let y = ys[r];
        let (mut phi1, mut phi2, mut st) = spine[r].clone();
        let corner_cols: &[usize] = if r == 0 {
            &lower_cols
        } else if r == top_row {
            &upper_cols
        } else {
            &[]
        };
        let mut row1 = Vec::with_capacity(ncols);
        let mut row2 = Vec::with_capacity(ncols);
        let mut rowg = Vec::with_capacity(ncols);
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut x_prev = 0.0;
        for c in 0..ncols {
            let x = xs[c];
            if (x - x_prev).abs() > 1e-15 {
                let a = Complex64::new(x_prev, y);
                let b = Complex64::new(x, y);
                let sing_a = corner_cols.iter().any(|&cc| xs[cc] == x_prev);
                let sing_b = corner_cols.iter().any(|&cc| xs[cc] == x);
                let grading = match (sing_a, sing_b) {
                    (false, false) => Grading::None,
                    (true, false) => Grading::Start {
                        exponent: exponent_near(dspec, a).abs(),
                    },
                    (false, true) => Grading::End {
                        exponent: exponent_near(dspec, b).abs(),
                    },
                    (true, true) => Grading::Both {
                        start: exponent_near(dspec, a).abs(),
                        end: exponent_near(dspec, b).abs(),
                    },
                };
                let (d1, d2) = segment_integral(&gm, &mut st, a, b, grading, tol)?;
                phi1 += d1;
                phi2 += d2;
            }
            x_prev = x;
            row1.push(phi1);
            row2.push(phi2);
            if corner_cols.contains(&c) {
                rowg.push(nan);
            } else {
                let g = gm.eval(&mut st, Complex64::new(x, y))?;
                rowg.push(g);
            }
        }
        Ok((row1, row2, rowg))
    });

    let mut phi1 = Vec::with_capacity(nrows * ncols);
    let mut phi2 = Vec::with_capacity(nrows * ncols);
    let mut gvals = Vec::with_capacity(nrows * ncols);
    for row in rows {
        let (r1, r2, rg) = row?;
        phi1.extend(r1);
        phi2.extend(r2);
        gvals.extend(rg);
    }

    Ok(SurfacePatch {
        t: dspec.t,
        dspec: dspec.clone(),
        xs,
        ys,
        uniform,
        phi1,
        phi2,
        gvals,
        rho: Complex64::new(1.0, 0.0),
        lower_cols,
        upper_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::{DivisorPoint, SymmetricDivisorSpec};
    use num_rational::Rational64;

    fn basic_244() -> DivisorSpec {
        let t = TorusParams::new(1.0).unwrap();
        SymmetricDivisorSpec::new(
            t,
            vec![DivisorPoint::new(0.25, Rational64::new(1, 2))],
            vec![],
        )
        .unwrap()
        .expand()
        .unwrap()
    }

    #[test]
    fn third_coordinate_is_re_z() {
        let d = basic_244();
        let p = make_patch(&d, 12, 8, &PatchOptions::default()).unwrap();
        for r in 0..p.nrows() {
            for c in 0..p.ncols() {
                assert_eq!(p.point(r, c).z, p.xs()[c]);
            }
        }
    }

    #[test]
    fn horizontal_projection_identity() {
        // 2F = conj(Phi2) - Phi1 at every node.
        let d = basic_244();
        let p = make_patch(&d, 10, 8, &PatchOptions::default()).unwrap();
        for r in [0, 3, p.nrows() - 1] {
            for c in [0, 2, p.ncols() - 1] {
                let (phi1, phi2) = p.phi_at(r, c);
                let f = p.f_at(r, c);
                let lhs = 2.0 * f;
                let rhs = phi2.conj() - phi1;
                assert!((lhs - rhs).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn base_segment_is_planar_symmetry_curve() {
        // F is real on the boundary interval through the base point.
        let d = basic_244();
        let p = make_patch(&d, 16, 8, &PatchOptions::default()).unwrap();
        let nodes = p.boundary_nodes(EdgeLabel::Lower(1)).unwrap();
        for (r, c) in nodes {
            let f = p.f_at(r, c);
            assert!(f.im.abs() < 1e-10, "Im F = {}", f.im);
        }
    }

    #[test]
    fn surface_point_matches_patch() {
        let d = basic_244();
        let p = make_patch(&d, 12, 8, &PatchOptions::default()).unwrap();
        let mut cache = IntegralCache::new(&d, 1e-11).unwrap();
        for (r, c) in [(2usize, 3usize), (5, 7), (8, 1)] {
            let z = p.z_at(r, c);
            let a = surface_point(z, &mut cache).unwrap();
            let b = p.point(r, c);
            assert!((a - b).norm() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn vertical_period_is_one() {
        let d = basic_244();
        let p = make_patch(&d, 12, 8, &PatchOptions::default()).unwrap();
        assert!(p.vertical_period_error() < 1e-9);
    }

    #[test]
    fn conjugate_twice_negates() {
        let d = basic_244();
        let p = make_patch(&d, 10, 8, &PatchOptions::default()).unwrap();
        let pp = p.conjugate().conjugate();
        for (r, c) in [(1usize, 1usize), (4, 5), (7, 2)] {
            let a = p.point(r, c).coords;
            let b = pp.point(r, c).coords;
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn patch_planes_are_vertical_and_meet_at_corner_angle() {
        let d = basic_244();
        let p = make_patch(&d, 24, 12, &PatchOptions::default()).unwrap();
        let wrap = p.plane_of(EdgeLabel::Lower(1)).unwrap();
        let other = p.plane_of(EdgeLabel::Lower(0)).unwrap();
        let top = p.plane_of(EdgeLabel::Upper(0)).unwrap();
        assert!(wrap.residual_max < 1e-8, "{}", wrap.residual_max);
        assert!(other.residual_max < 1e-8);
        assert!(top.residual_max < 1e-8);
        // Corner angle pi*a = pi/2 between the two lower planes.
        let w = wrap.wedge_angle_to(&other);
        assert!((w - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "wedge {w}");
        // Angle between the base plane and the top plane: |pi a (2p-1)| =
        // pi/4.
        let lt = wrap.line_angle_to(&top);
        assert!((lt - std::f64::consts::FRAC_PI_4).abs() < 1e-6, "{lt}");
    }

    #[test]
    fn harmonicity_shrinks_under_refinement() {
        let d = basic_244();
        let coarse = make_patch(&d, 16, 8, &PatchOptions::default()).unwrap();
        let fine = make_patch(&d, 32, 16, &PatchOptions::default()).unwrap();
        let a = coarse.harmonicity_residual(0.1);
        let b = fine.harmonicity_residual(0.1);
        assert!(b < a / 2.5, "no second-order decay: {a} -> {b}");
    }

    #[test]
    fn conformality_and_normals() {
        let d = basic_244();
        let p = make_patch(&d, 48, 24, &PatchOptions::default()).unwrap();
        assert!(p.conformality_error(0.1) < 1e-3, "{}", p.conformality_error(0.1));
        assert!(
            p.normal_consistency_error(0.1) < 1e-3,
            "{}",
            p.normal_consistency_error(0.1)
        );
    }

    #[test]
    fn conjugate_boundary_segments_are_straight() {
        let d = basic_244();
        let p = make_patch(&d, 24, 12, &PatchOptions::default())
            .unwrap()
            .conjugate();
        for label in [EdgeLabel::Lower(0), EdgeLabel::Upper(0)] {
            let nodes = p.boundary_nodes(label).unwrap();
            let first = p.point(nodes[0].0, nodes[0].1);
            let last = p.point(nodes[nodes.len() - 1].0, nodes[nodes.len() - 1].1);
            let chord = (last - first).normalize();
            for &(r, c) in &nodes {
                let v = p.point(r, c) - first;
                let dev = (v - v.dot(&chord) * chord).norm();
                assert!(dev < 1e-6, "{label:?}: deviation {dev}");
            }
        }
    }

    #[test]
    fn clustering_produces_valid_patch() {
        let d = basic_244();
        let p = make_patch(
            &d,
            16,
            8,
            &PatchOptions {
                tol: 1e-9,
                clustering: Some(1.5),
            },
        )
        .unwrap();
        assert!(p.vertical_period_error() < 1e-7);
    }

    #[test]
    fn resolution_guard() {
        let d = basic_244();
        assert!(matches!(
            make_patch(&d, 4, 8, &PatchOptions::default()),
            Err(SurfaceError::ResolutionTooLow { .. })
        ));
    }
}
