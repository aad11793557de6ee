//! Composite Gauss-Legendre quadrature on straight segments in the complex
//! plane, with graded endpoint substitutions for integrands behaving like
//! `(z - w0)^e`, `|e| < 1`, at a segment endpoint.
//!
//! Evaluation points are passed as an anchor waypoint plus an exact offset
//! ([`QuadPoint`]); graded nodes cluster so tightly at singular endpoints
//! that recombining `anchor + offset` in one f64 would round the offset away
//! entirely, so integrands that need the distance to the endpoint must read
//! it from the offset.
//!
//! Refinement doubles the panel count until two successive composite values
//! agree to the requested tolerance; failure to converge is an error, never a
//! silent result.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    /// Two successive panel refinements still differ by more than the
    /// requested tolerance.
    #[error("quadrature did not converge: last refinement difference {achieved:.3e} > tolerance {tol:.3e}")]
    NonConvergence { achieved: f64, tol: f64 },
    /// An integrand evaluation failed (e.g. pole proximity on the path).
    #[error("integrand evaluation failed: {0}")]
    Evaluation(String),
}

/// An evaluation point `anchor + offset`, kept split so that the offset from
/// a singular endpoint survives at full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub anchor: Complex64,
    pub offset: Complex64,
}

impl QuadPoint {
    pub fn from_z(z: Complex64) -> Self {
        QuadPoint {
            anchor: z,
            offset: Complex64::new(0.0, 0.0),
        }
    }

    /// The point itself (rounded recombination; do not subtract the anchor
    /// from this).
    pub fn value(&self) -> Complex64 {
        self.anchor + self.offset
    }

    /// `value() - w`, computed without cancellation when `w == anchor`.
    pub fn offset_from(&self, w: Complex64) -> Complex64 {
        (self.anchor - w) + self.offset
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed once by Newton iteration on the Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

static GL16: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(16));

const MAX_PANELS: usize = 4096;

/// One composite pass: `panels` equal panels of the 16-point rule over the
/// unit parameter interval, mapped through `map`. Points are visited in
/// increasing parameter order so that stateful integrands (branch-tracked
/// arguments) see a monotone walk along the segment.
fn composite_pass2<F, M>(
    f: &mut F,
    map: &M,
    panels: usize,
) -> Result<(Complex64, Complex64), QuadError>
where
    F: FnMut(QuadPoint) -> Result<(Complex64, Complex64), QuadError>,
    M: Fn(f64) -> (QuadPoint, Complex64),
{
    let (nodes, weights) = (&GL16.0, &GL16.1);
    let h = 1.0 / panels as f64;
    let mut acc1 = Complex64::new(0.0, 0.0);
    let mut acc2 = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * h;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let u = a + 0.5 * h * (x + 1.0);
            let (q, dz) = map(u);
            let (v1, v2) = f(q)?;
            let c = w * 0.5 * h * dz;
            acc1 += c * v1;
            acc2 += c * v2;
        }
    }
    Ok((acc1, acc2))
}

fn refine<F, M>(f: &mut F, map: &M, tol: f64) -> Result<(Complex64, Complex64), QuadError>
where
    F: FnMut(QuadPoint) -> Result<(Complex64, Complex64), QuadError>,
    M: Fn(f64) -> (QuadPoint, Complex64),
{
    let mut panels = 2;
    let mut prev = composite_pass2(f, map, panels)?;
    loop {
        panels *= 2;
        let next = composite_pass2(f, map, panels)?;
        let scale = next.0.norm().max(next.1.norm()).max(1.0);
        let diff = (next.0 - prev.0).norm().max((next.1 - prev.1).norm());
        if diff <= tol * scale {
            return Ok(next);
        }
        if panels >= MAX_PANELS {
            return Err(QuadError::NonConvergence {
                achieved: diff / scale,
                tol,
            });
        }
        prev = next;
    }
}

/// Where on a segment the integrand has an endpoint singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    /// Smooth on the closed segment.
    None,
    /// Behaves like `(z-a)^e` at the start.
    Start { exponent: f64 },
    /// Behaves like `(z-b)^e` at the end.
    End { exponent: f64 },
    /// Singular at both ends (the segment is split in the middle).
    Both { start: f64, end: f64 },
}

/// Grading strength for an endpoint exponent `e`: the substitution
/// `t = u^k` makes `t^e dt` behave like `u^{k(e+1)-1} du`.
fn grade_order(e: f64) -> f64 {
    let e = e.abs().min(0.95);
    (2.0 / (1.0 - e)).ceil().clamp(2.0, 24.0)
}

/// Integrate a pair of integrands along the straight segment `[a, b]`.
///
/// `f` must return both integrand values at the given point. Endpoint
/// singularities of type `(z - end)^e`, `|e| < 1`, are handled by the graded
/// substitution `t = u^k` with `k = ceil(2 / (1 - |e|))`; grading restores
/// enough smoothness for the composite rule. Gauss nodes are interior, so
/// singular endpoints are never evaluated.
pub fn integrate_segment2<F>(
    f: &mut F,
    a: Complex64,
    b: Complex64,
    grading: Grading,
    tol: f64,
) -> Result<(Complex64, Complex64), QuadError>
where
    F: FnMut(QuadPoint) -> Result<(Complex64, Complex64), QuadError>,
{
    let delta = b - a;
    match grading {
        Grading::None => {
            let map = |u: f64| {
                (
                    QuadPoint {
                        anchor: a,
                        offset: u * delta,
                    },
                    delta,
                )
            };
            refine(f, &map, tol)
        }
        Grading::Start { exponent } => {
            let k = grade_order(exponent);
            let map = |u: f64| {
                let t = u.powf(k);
                (
                    QuadPoint {
                        anchor: a,
                        offset: t * delta,
                    },
                    k * u.powf(k - 1.0) * delta,
                )
            };
            refine(f, &map, tol)
        }
        Grading::End { exponent } => {
            let k = grade_order(exponent);
            // z = b - (1-u)^k * delta walks forward from a (u=0) to b (u=1)
            // with dz/du = k (1-u)^(k-1) * delta.
            let map = |u: f64| {
                let s = 1.0 - u;
                let t = s.powf(k);
                (
                    QuadPoint {
                        anchor: b,
                        offset: -t * delta,
                    },
                    k * s.powf(k - 1.0) * delta,
                )
            };
            refine(f, &map, tol)
        }
        Grading::Both { start, end } => {
            let mid = a + 0.5 * delta;
            let (p1, p2) =
                integrate_segment2(f, a, mid, Grading::Start { exponent: start }, tol)?;
            let (q1, q2) = integrate_segment2(f, mid, b, Grading::End { exponent: end }, tol)?;
            Ok((p1 + q1, p2 + q2))
        }
    }
}

/// Single-integrand convenience wrapper around [`integrate_segment2`].
pub fn integrate_segment<F>(
    f: &mut F,
    a: Complex64,
    b: Complex64,
    grading: Grading,
    tol: f64,
) -> Result<Complex64, QuadError>
where
    F: FnMut(QuadPoint) -> Result<Complex64, QuadError>,
{
    let mut g = |q: QuadPoint| f(q).map(|v| (v, Complex64::new(0.0, 0.0)));
    integrate_segment2(&mut g, a, b, grading, tol).map(|(v, _)| v)
}
