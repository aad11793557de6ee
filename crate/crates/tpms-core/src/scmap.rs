//! The equivariant Schwarz-Christoffel integrand and its path integrals.
//!
//! For a divisor with points `x_k` (on either strip edge) and exponents
//! `e_k`, the Gauss map is the product of theta-function powers
//!
//! ```text
//! G(z) = prod_k theta(z - x_k)^(e_k).
//! ```
//!
//! Non-integer powers need a branch choice: every factor carries a
//! continuously tracked argument along the evaluation path ([`BranchState`]),
//! and the whole product is rotated once so that `G` is real and positive at
//! a designated base point on the real axis. With the angle condition the
//! product is 1-periodic, and integrating `G dz` (and `dz/G`) along paths in
//! the closed strip produces the periodic polygons of the construction.

use crate::divisor::{DivisorPoint, DivisorSpec};
use crate::quad::{self, Grading, QuadError, QuadPoint};
use crate::theta::{self, ThetaError, TorusParams, DEFAULT_POLE_RADIUS};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("branch continuation failed: step near {z} cannot be split safely")]
    BranchContinuation { z: Complex64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("no admissible base point on the real axis")]
    NoBasePoint,
}

/// Integration mode: the Gauss map itself or its reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Integrate `G dz` (the polygon of the first coordinate form).
    G,
    /// Integrate `dz / G`.
    InvG,
}

/// Per-path mutable state: the continued argument of every theta factor and
/// the last evaluation point. Not shareable between paths; clone it to fork.
#[derive(Debug, Clone)]
pub struct BranchState {
    args: Vec<f64>,
    last: QuadPoint,
}

/// One theta factor of the Gauss map.
#[derive(Debug, Clone, Copy)]
struct Factor {
    /// Location in the plane (upper-edge points carry `+ i d/2`).
    pos: Complex64,
    /// Exponent as a float.
    exp: f64,
}

/// Evaluator for the Gauss map of a divisor, with branch tracking and the
/// base-point normalization.
#[derive(Debug, Clone)]
pub struct GaussMap {
    t: TorusParams,
    factors: Vec<Factor>,
    base: Complex64,
    /// Phase subtracted so that `G(base) > 0`.
    norm_phase: f64,
}

/// Maximum recursion depth when splitting a continuation step.
const MAX_SPLIT_DEPTH: usize = 48;

impl GaussMap {
    /// Build the evaluator from a divisor, choosing the base point
    /// automatically: `0` if it has enough clearance from the lower-edge
    /// points, otherwise the midpoint of the widest gap.
    pub fn from_divisor(d: &DivisorSpec) -> Result<Self, ScError> {
        let base = base_point(d)?;
        Self::from_divisor_with_base(d, base)
    }

    pub fn from_divisor_with_base(d: &DivisorSpec, base: Complex64) -> Result<Self, ScError> {
        let mut factors = Vec::new();
        let h = d.t.strip_height();
        for p in d.lower() {
            factors.push((Complex64::new(p.pos, 0.0), p.exp_f64()));
        }
        for q in d.upper() {
            factors.push((Complex64::new(q.pos, h), q.exp_f64()));
        }
        Self::from_factors(d.t, factors, base)
    }

    /// Build directly from a factor list (the list is a formal product, so
    /// repeated positions are allowed here, unlike in a validated divisor).
    pub fn from_factors(
        t: TorusParams,
        factors: Vec<(Complex64, f64)>,
        base: Complex64,
    ) -> Result<Self, ScError> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(pos, exp)| Factor { pos, exp })
            .collect();
        let mut gm = GaussMap {
            t,
            factors,
            base,
            norm_phase: 0.0,
        };
        // Principal arguments at the base fix the branch; the normalization
        // phase makes G(base) real positive.
        let st = gm.fresh_state()?;
        let phase: f64 = gm
            .factors
            .iter()
            .zip(&st.args)
            .map(|(f, a)| f.exp * a)
            .sum();
        gm.norm_phase = phase;
        Ok(gm)
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn torus(&self) -> &TorusParams {
        &self.t
    }

    /// Branch state initialized at the base point (principal arguments).
    pub fn fresh_state(&self) -> Result<BranchState, ScError> {
        let mut args = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let v = theta::theta(self.base - f.pos, &self.t)?;
            args.push(v.arg());
        }
        Ok(BranchState {
            args,
            last: QuadPoint::from_z(self.base),
        })
    }

    /// Distance from `z` to the nearest zero of any factor (all lattice
    /// translates included).
    pub fn clearance(&self, z: Complex64) -> f64 {
        self.factors
            .iter()
            .map(|f| self.t.dist_to_lattice(z - f.pos))
            .fold(f64::INFINITY, f64::min)
    }

    fn clearance_q(&self, q: QuadPoint) -> f64 {
        self.factors
            .iter()
            .map(|f| self.reduce(q, f.pos).0.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Lattice-reduced offset of `q` from `pos`: returns `(w, k1, k2)` with
    /// `q - pos = w + k1 + k2 * tau` and `w` in the fundamental cell around
    /// zero. The subtraction is organized so that tiny offsets from an
    /// anchor sitting exactly on a lattice translate of `pos` survive.
    fn reduce(&self, q: QuadPoint, pos: Complex64) -> (Complex64, f64, f64) {
        let d = self.t.d();
        let base = q.anchor - pos;
        let approx = base + q.offset;
        let k1 = approx.re.round();
        let k2 = (approx.im / d).round();
        let w = (base - Complex64::new(k1, k2 * d)) + q.offset;
        (w, k1, k2)
    }

    /// `(log |theta|, principal argument)` of the true (unreduced) factor
    /// value at `q`, evaluated through the lattice-reduced argument and the
    /// closed-form quasi-periodicity compensation
    /// `theta(w + k1 + k2 tau) = (-1)^(k1+k2) exp(pi d k2^2 - 2 pi i k2 w) theta(w)`.
    fn factor_log(&self, q: QuadPoint, pos: Complex64) -> Result<(f64, f64), ScError> {
        let pi = std::f64::consts::PI;
        let d = self.t.d();
        let (w, k1, k2) = self.reduce(q, pos);
        let v = theta::theta(w, &self.t)?;
        let log_mod = v.norm().ln() + pi * d * k2 * k2 + 2.0 * pi * k2 * w.im;
        let arg = wrap_angle(v.arg() + pi * (k1 + k2) - 2.0 * pi * k2 * w.re);
        Ok((log_mod, arg))
    }

    /// Continue the branch state to `q` and return `log G` there as
    /// `(log |G|, continued arg)`. Splits the straight step from the previous
    /// point recursively until every factor's raw argument moves by less than
    /// a safe bound.
    fn continue_log(&self, st: &mut BranchState, q: QuadPoint) -> Result<(f64, f64), ScError> {
        let log_mods = self.step(st, q, 0)?;
        let mut log_mod = 0.0;
        let mut arg = -self.norm_phase;
        for ((f, a), lm) in self.factors.iter().zip(&st.args).zip(&log_mods) {
            log_mod += f.exp * lm;
            arg += f.exp * a;
        }
        Ok((log_mod, arg))
    }

    /// Predicted continuous change of `arg theta(w)` along the straight
    /// chord from `w0` to `w1`: the exact change of the linear part around
    /// the nearest lattice zero plus the quasi-periodicity phase, both in
    /// closed form. The remaining analytic correction is small for chords
    /// much shorter than the lattice scale and is validated by the caller.
    ///
    /// A chord running along a strip edge exactly through the zero is
    /// continued as the limit from the strip interior: above the lower
    /// edge, below the upper edge (`pos_im` identifies the edge the factor
    /// lives on).
    fn arg_step(&self, from: QuadPoint, to: QuadPoint, pos: Complex64, pos_im: f64) -> f64 {
        let d = self.t.d();
        let w0 = from.offset_from(pos);
        let w1 = to.offset_from(pos);
        let wm = 0.5 * (w0 + w1);
        let k1 = wm.re.round();
        let k2 = (wm.im / d).round();
        let shift = Complex64::new(k1, k2 * d);
        // Subtract the shift from the anchor part first: offsets from an
        // anchor on a lattice translate of `pos` stay exact.
        let a = ((from.anchor - pos) - shift) + from.offset;
        let b = ((to.anchor - pos) - shift) + to.offset;
        let pi = std::f64::consts::PI;
        let lin = if a.im.abs() < 1e-13 && b.im.abs() < 1e-13 && a.re * b.re < 0.0 {
            let upper = ((pos_im / (d / 2.0)).round() as i64).rem_euclid(2) == 1;
            let dir = (b.re - a.re).signum();
            if upper {
                pi * dir
            } else {
                -pi * dir
            }
        } else {
            // A straight chord not through the zero subtends less than pi,
            // so the wrapped difference of principal arguments is the exact
            // change for the linear factor.
            wrap_angle(b.arg() - a.arg())
        };
        // theta(w + k1 + k2 tau) = +-exp(-pi i k2^2 tau - 2 pi i k2 w) theta(w):
        // the exponential contributes -2 pi k2 d(Re w) of argument.
        let phase = -2.0 * pi * k2 * (w1.re - w0.re);
        lin + phase
    }

    /// Advance the state to `q`, returning `log |theta|` of every factor
    /// there. Factor arguments are evaluated through the exact offsets of
    /// `q`, so graded quadrature nodes arbitrarily close to a divisor
    /// endpoint stay accurate. Each factor's continued argument is predicted
    /// in closed form and snapped to the raw principal argument; if the two
    /// disagree the chord is split.
    fn step(&self, st: &mut BranchState, q: QuadPoint, depth: usize) -> Result<Vec<f64>, ScError> {
        let clear = self.clearance_q(q);
        if clear < 1e-300 {
            return Err(ScError::Theta(ThetaError::PoleProximity {
                dist: clear,
                radius: 1e-300,
            }));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut new_args = Vec::with_capacity(self.factors.len());
        let mut log_mods = Vec::with_capacity(self.factors.len());
        let mut ok = true;
        for (f, prev) in self.factors.iter().zip(&st.args) {
            let predicted = prev + self.arg_step(st.last, q, f.pos, f.pos.im);
            let (log_mod, raw) = self.factor_log(q, f.pos)?;
            let a = raw + ((predicted - raw) / two_pi).round() * two_pi;
            if (a - predicted).abs() > 0.7 {
                ok = false;
                break;
            }
            new_args.push(a);
            log_mods.push(log_mod);
        }
        if ok {
            st.args = new_args;
            st.last = q;
            return Ok(log_mods);
        }
        if depth >= MAX_SPLIT_DEPTH {
            return Err(ScError::BranchContinuation { z: q.value() });
        }
        // Midpoint relative to the same anchor keeps radial approaches to
        // the anchor exact.
        let mid = QuadPoint {
            anchor: q.anchor,
            offset: 0.5 * ((st.last.value() - q.anchor) + q.offset),
        };
        self.step(st, mid, depth + 1)?;
        self.step(st, q, depth + 1)
    }

    /// Evaluate the normalized Gauss map, continuing the branch from the
    /// state's previous point along the straight segment between them.
    pub fn eval_q(&self, st: &mut BranchState, q: QuadPoint) -> Result<Complex64, ScError> {
        let (m, a) = self.continue_log(st, q)?;
        Ok(Complex64::from_polar(m.exp(), a))
    }

    pub fn eval(&self, st: &mut BranchState, z: Complex64) -> Result<Complex64, ScError> {
        self.eval_q(st, QuadPoint::from_z(z))
    }

    /// Continued argument of the normalized Gauss map at `z`.
    pub fn eval_arg(&self, st: &mut BranchState, z: Complex64) -> Result<f64, ScError> {
        Ok(self.continue_log(st, QuadPoint::from_z(z))?.1)
    }

    /// Evaluate without the base normalization (raw branch from principal
    /// arguments at the base point).
    pub fn eval_unnormalized(
        &self,
        st: &mut BranchState,
        z: Complex64,
    ) -> Result<Complex64, ScError> {
        let (m, a) = self.continue_log(st, QuadPoint::from_z(z))?;
        Ok(Complex64::from_polar(m.exp(), a + self.norm_phase))
    }

    /// `G` and `1/G` at once (one theta pass).
    pub fn eval_pair_q(
        &self,
        st: &mut BranchState,
        q: QuadPoint,
    ) -> Result<(Complex64, Complex64), ScError> {
        let (m, a) = self.continue_log(st, q)?;
        Ok((
            Complex64::from_polar(m.exp(), a),
            Complex64::from_polar((-m).exp(), -a),
        ))
    }

    pub fn eval_pair(
        &self,
        st: &mut BranchState,
        z: Complex64,
    ) -> Result<(Complex64, Complex64), ScError> {
        self.eval_pair_q(st, QuadPoint::from_z(z))
    }
}

/// Choose a base point on the real axis: `0` when it is clear of the
/// lower-edge divisor points, otherwise the midpoint of the widest gap
/// between consecutive points.
fn base_point(d: &DivisorSpec) -> Result<Complex64, ScError> {
    let clearance_needed = 1e-3;
    if d.lower().is_empty() || d.lower_clearance(0.0) > clearance_needed {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pts = d.lower();
    let mut best = (0.0, f64::MIN);
    for i in 0..pts.len() {
        let a = pts[i].pos;
        let b = if i + 1 < pts.len() {
            pts[i + 1].pos
        } else {
            pts[0].pos + 1.0
        };
        let gap = b - a;
        if gap > best.1 {
            best = ((a + b) / 2.0, gap);
        }
    }
    if best.1 < 2.0 * clearance_needed {
        return Err(ScError::NoBasePoint);
    }
    // Map back into [-1/2, 1/2) for a reproducible representative.
    let mut x = best.0;
    if x >= 0.5 {
        x -= 1.0;
    }
    Ok(Complex64::new(x, 0.0))
}

/// A polyline in the closed strip along which the Schwarz-Christoffel
/// integrand is integrated. Waypoints may coincide with divisor points
/// (integrable endpoint singularities); segment interiors must stay clear of
/// them.
#[derive(Debug, Clone)]
pub struct StripPath {
    waypoints: Vec<Complex64>,
    /// Exponent of the divisor point at each waypoint, when the waypoint
    /// lies on one (within [`crate::divisor::MIN_SEPARATION`]).
    singular_exp: Vec<Option<f64>>,
}

impl StripPath {
    /// Build and validate a path for the given divisor. Checks: at least two
    /// waypoints, consecutive waypoints distinct, every waypoint inside the
    /// closed strip, and interior clearance of each segment from all divisor
    /// points (other than its own endpoints) of at least the pole exclusion
    /// radius.
    pub fn new(d: &DivisorSpec, waypoints: Vec<Complex64>) -> Result<Self, ScError> {
        Self::with_exclusion(d, waypoints, DEFAULT_POLE_RADIUS)
    }

    pub fn with_exclusion(
        d: &DivisorSpec,
        waypoints: Vec<Complex64>,
        radius: f64,
    ) -> Result<Self, ScError> {
        if waypoints.len() < 2 {
            return Err(ScError::InvalidPath("need at least two waypoints".into()));
        }
        let h = d.t.strip_height();
        for w in &waypoints {
            if !(w.im >= -1e-12 && w.im <= h + 1e-12) {
                return Err(ScError::InvalidPath(format!(
                    "waypoint {w} outside the closed strip of height {h}"
                )));
            }
        }
        for w in waypoints.windows(2) {
            if (w[1] - w[0]).norm() < 1e-14 {
                return Err(ScError::InvalidPath("repeated waypoint".into()));
            }
        }
        let divisor_points = all_divisor_positions(d);
        let singular_exp: Vec<Option<f64>> = waypoints
            .iter()
            .map(|w| nearest_divisor_exp(&divisor_points, d.t.d(), *w))
            .collect();
        // Interior clearance check, sampled densely along each segment. A
        // divisor point sitting exactly at one of the segment's own singular
        // endpoints is exempt (the graded quadrature handles it).
        for (i, w) in waypoints.windows(2).enumerate() {
            let n = 64;
            for (pos, _) in &divisor_points {
                let own = (singular_exp[i].is_some() && d.t.dist_to_lattice(w[0] - pos) < 1e-9)
                    || (singular_exp[i + 1].is_some() && d.t.dist_to_lattice(w[1] - pos) < 1e-9);
                if own {
                    continue;
                }
                for k in 1..n {
                    let z = w[0] + (w[1] - w[0]) * (k as f64 / n as f64);
                    let dist = d.t.dist_to_lattice(z - pos);
                    if dist < radius {
                        return Err(ScError::InvalidPath(format!(
                            "segment {i} passes within {dist:.2e} of divisor point {pos}"
                        )));
                    }
                }
            }
        }
        Ok(StripPath {
            waypoints,
            singular_exp,
        })
    }

    pub fn waypoints(&self) -> &[Complex64] {
        &self.waypoints
    }
}

fn all_divisor_positions(d: &DivisorSpec) -> Vec<(Complex64, f64)> {
    let h = d.t.strip_height();
    let mut v: Vec<(Complex64, f64)> = d
        .lower()
        .iter()
        .map(|p: &DivisorPoint| (Complex64::new(p.pos, 0.0), p.exp_f64()))
        .collect();
    v.extend(
        d.upper()
            .iter()
            .map(|q| (Complex64::new(q.pos, h), q.exp_f64())),
    );
    v
}

fn nearest_divisor_exp(points: &[(Complex64, f64)], d: f64, w: Complex64) -> Option<f64> {
    let t = TorusParams::new(d).ok()?;
    points
        .iter()
        .find(|(pos, _)| t.dist_to_lattice(w - pos) < 1e-9)
        .map(|(_, e)| *e)
}

/// Integrate `G dz` or `dz/G` along `path`. Endpoint singularities are
/// handled by graded substitution; the result is independent of the path's
/// homotopy class within the strip.
pub fn sc_integrate(
    d: &DivisorSpec,
    path: &StripPath,
    mode: Mode,
    tol: f64,
) -> Result<Complex64, ScError> {
    let gm = GaussMap::from_divisor(d)?;
    let mut st = gm.fresh_state()?;
    let (g, ginv) = sc_integrate_both_with(&gm, &mut st, path, tol)?;
    Ok(match mode {
        Mode::G => g,
        Mode::InvG => ginv,
    })
}

/// Integrate both `G dz` and `dz/G` along `path`, continuing the provided
/// branch state (which ends up continued to the path end).
pub fn sc_integrate_both_with(
    gm: &GaussMap,
    st: &mut BranchState,
    path: &StripPath,
    tol: f64,
) -> Result<(Complex64, Complex64), ScError> {
    // Walk the branch to the path start first.
    gm.eval(st, path.waypoints[0])
        .or_else(|_| -> Result<Complex64, ScError> {
            // The start itself may be singular; approach it from the segment
            // direction instead.
            let dir = path.waypoints[1] - path.waypoints[0];
            let probe = path.waypoints[0] + dir * 1e-7 / dir.norm();
            gm.eval(st, probe)
        })?;
    let mut total_g = Complex64::new(0.0, 0.0);
    let mut total_inv = Complex64::new(0.0, 0.0);
    for i in 0..path.waypoints.len() - 1 {
        let a = path.waypoints[i];
        let b = path.waypoints[i + 1];
        let grading = match (path.singular_exp[i], path.singular_exp[i + 1]) {
            (None, None) => Grading::None,
            (Some(e), None) => Grading::Start { exponent: e.abs() },
            (None, Some(e)) => Grading::End { exponent: e.abs() },
            (Some(e1), Some(e2)) => Grading::Both {
                start: e1.abs(),
                end: e2.abs(),
            },
        };
        let (ig, iinv) = segment_integral(gm, st, a, b, grading, tol)?;
        total_g += ig;
        total_inv += iinv;
    }
    Ok((total_g, total_inv))
}

/// Integrate `(G dz, dz/G)` over the single straight segment `[a, b]`,
/// continuing `st` (which must already be near `a`). Building block for the
/// cumulative grid integration of surface patches.
pub fn segment_integral(
    gm: &GaussMap,
    st: &mut BranchState,
    a: Complex64,
    b: Complex64,
    grading: Grading,
    tol: f64,
) -> Result<(Complex64, Complex64), ScError> {
    let mut f = |q: QuadPoint| -> Result<(Complex64, Complex64), QuadError> {
        gm.eval_pair_q(st, q)
            .map_err(|e| QuadError::Evaluation(e.to_string()))
    };
    Ok(quad::integrate_segment2(&mut f, a, b, grading, tol)?)
}

/// Image of one boundary edge of the strip under the path integral of the
/// chosen mode: the vertices of a periodic polygon, the direction of each
/// edge (continued argument of the integrand at the interval midpoint) and
/// the translation `v` with `f(z+1) = f(z) + v`.
#[derive(Debug, Clone)]
pub struct PolygonImage {
    pub vertices: Vec<Complex64>,
    /// Continued direction (radians) of each edge between consecutive
    /// vertices; `directions.len() == vertices.len() - 1`.
    pub directions: Vec<f64>,
    /// Translation of one period.
    pub v: Complex64,
}

/// Which strip edge a polygon image is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Lower,
    Upper,
}

/// Compute the image polygon of a boundary edge over `periods` periods.
pub fn polygon_image(
    d: &DivisorSpec,
    edge: Edge,
    periods: usize,
    mode: Mode,
    tol: f64,
) -> Result<PolygonImage, ScError> {
    let gm = GaussMap::from_divisor(d)?;
    let h = d.t.strip_height();
    let (y, pts) = match edge {
        Edge::Lower => (0.0, d.lower()),
        Edge::Upper => (h, d.upper()),
    };
    if pts.is_empty() {
        return Err(ScError::InvalidPath(
            "edge has no divisor points; the image is a straight line".into(),
        ));
    }

    // Translation of one period from a clean mid-strip segment.
    let mut st = gm.fresh_state()?;
    let y_mid = h / 2.0;
    let seg = StripPath::new(
        d,
        vec![Complex64::new(0.0, y_mid), Complex64::new(1.0, y_mid)],
    )?;
    let (v_g, v_inv) = sc_integrate_both_with(&gm, &mut st, &seg, tol)?;
    let v = match mode {
        Mode::G => v_g,
        Mode::InvG => v_inv,
    };

    // Reach the first vertex: go to the edge midpoint between the last point
    // of the previous period and the first of this one, then walk vertex to
    // vertex along the edge.
    let first = pts[0].pos;
    let prev_last = pts[pts.len() - 1].pos - 1.0;
    let gap_mid = (first + prev_last) / 2.0;

    let mut st = gm.fresh_state()?;
    let base = gm.base();
    // Path from base up/down to the working height and along to the gap
    // midpoint, then to the first vertex. Consecutive duplicates (base
    // already at the right spot) are dropped.
    let mut lead_pts = vec![
        base,
        Complex64::new(base.re, y_mid),
        Complex64::new(gap_mid, y_mid),
        Complex64::new(gap_mid, y),
        Complex64::new(first, y),
    ];
    lead_pts.dedup_by(|a, b| (*a - *b).norm() < 1e-13);
    let lead_in = StripPath::new(d, lead_pts)?;
    let (lg, linv) = sc_integrate_both_with(&gm, &mut st, &lead_in, tol)?;
    let mut acc = match mode {
        Mode::G => lg,
        Mode::InvG => linv,
    };

    let mut vertices = vec![acc];
    let mut directions = Vec::new();
    let m = pts.len();
    for k in 0..periods * m {
        let idx = k % m;
        let shift = (k / m) as f64;
        let x0 = pts[idx].pos + shift;
        let x1 = if idx + 1 < m {
            pts[idx + 1].pos + shift
        } else {
            pts[0].pos + shift + 1.0
        };
        let seg = StripPath::new(
            d,
            vec![Complex64::new(x0, y), Complex64::new(x1, y)],
        )?;
        let (sg, sinv) = sc_integrate_both_with(&gm, &mut st, &seg, tol)?;
        acc += match mode {
            Mode::G => sg,
            Mode::InvG => sinv,
        };
        vertices.push(acc);
        // Direction at the interval midpoint, from the continued argument.
        let mut st_dir = st.clone();
        let arg = gm.eval_arg(&mut st_dir, Complex64::new((x0 + x1) / 2.0, y))?;
        directions.push(match mode {
            Mode::G => arg,
            Mode::InvG => -arg,
        });
    }
    Ok(PolygonImage {
        vertices,
        directions,
        v,
    })
}


fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    x - two_pi * (x / two_pi).round()
}
