//! Divisor data for periodic polygons: marked points on the two strip edges
//! together with exponents, the angle conditions that make both boundary
//! arcs translation invariant, and the closed-form plane-angle formulas.
//!
//! Exponents are kept as exact rationals (they come from Euclidean triangle
//! groups) and are converted to floating point only when the Gauss map is
//! evaluated; the angle condition `sum a_i = 0 = sum b_j` is checked exactly.

use crate::theta::TorusParams;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Minimal admissible separation between divisor points on one edge.
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivisorError {
    #[error("points on one edge must be strictly increasing and at least {MIN_SEPARATION} apart")]
    OverlappingPoints,
    #[error("point {pos} outside the admissible open interval ({lo}, {hi})")]
    PointOutOfRange { pos: f64, lo: f64, hi: f64 },
    #[error("exponent {0} outside the open interval (-1, 1)")]
    ExponentOutOfRange(Rational64),
    #[error("angle condition violated: exponents on one edge sum to {0}, expected 0")]
    AngleCondition(Rational64),
    #[error("formula yields p = {0} outside (0, 1/2]")]
    OutOfRange(Rational64),
    #[error("r and s must lie in {{2, 3, 4, 6}} (got r={r}, s={s})")]
    InvalidOrder { r: i64, s: i64 },
}

/// One marked point on a strip edge: horizontal position and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorPoint {
    /// Horizontal position within the fundamental interval.
    pub pos: f64,
    /// Exponent of the corresponding theta factor, in (-1, 1).
    pub exp: Rational64,
}

impl DivisorPoint {
    pub fn new(pos: f64, exp: Rational64) -> Self {
        DivisorPoint { pos, exp }
    }

    pub fn exp_f64(&self) -> f64 {
        *self.exp.numer() as f64 / *self.exp.denom() as f64
    }
}

fn validate_edge(
    points: &[DivisorPoint],
    lo: f64,
    hi: f64,
    require_zero_sum: bool,
) -> Result<(), DivisorError> {
    for p in points {
        if !(p.pos > lo && p.pos < hi) {
            return Err(DivisorError::PointOutOfRange { pos: p.pos, lo, hi });
        }
        if p.exp.abs() >= Rational64::new(1, 1) {
            return Err(DivisorError::ExponentOutOfRange(p.exp));
        }
    }
    for w in points.windows(2) {
        if w[1].pos - w[0].pos < MIN_SEPARATION {
            return Err(DivisorError::OverlappingPoints);
        }
    }
    if require_zero_sum {
        let sum: Rational64 = points.iter().map(|p| p.exp).sum();
        if !sum.is_zero() {
            return Err(DivisorError::AngleCondition(sum));
        }
    }
    Ok(())
}

/// The full divisor of a periodic polygon on the torus `C / <1, i d>`:
/// points `p_i` on the lower edge and `q_j` (horizontal positions) on the
/// upper edge `Im z = d/2`, each with an exponent in `(-1, 1)`, and with the
/// exponents summing to zero exactly on each edge.
///
/// Points are stored in the fundamental interval `(0, 1)`; periodic images
/// `p_{i+m} = p_i + 1` are generated on demand, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorSpec {
    pub t: TorusParams,
    lower: Vec<DivisorPoint>,
    upper: Vec<DivisorPoint>,
}

impl DivisorSpec {
    pub fn new(
        t: TorusParams,
        mut lower: Vec<DivisorPoint>,
        mut upper: Vec<DivisorPoint>,
    ) -> Result<Self, DivisorError> {
        lower.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        upper.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        validate_edge(&lower, 0.0, 1.0, true)?;
        validate_edge(&upper, 0.0, 1.0, true)?;
        Ok(DivisorSpec { t, lower, upper })
    }

    pub fn lower(&self) -> &[DivisorPoint] {
        &self.lower
    }

    pub fn upper(&self) -> &[DivisorPoint] {
        &self.upper
    }

    /// Distance from a horizontal position `x` (taken modulo 1) to the
    /// nearest lower-edge divisor point.
    pub fn lower_clearance(&self, x: f64) -> f64 {
        self.lower
            .iter()
            .map(|p| {
                let d = (x - p.pos).rem_euclid(1.0);
                d.min(1.0 - d)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Half-data for a divisor symmetric about the imaginary axis: points in
/// `(0, 1/2)` with their exponents; expansion adds the mirror points with
/// negated exponents, so the Gauss map satisfies `G(-z) = 1/G(z)` and the
/// surface is symmetric about a horizontal plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDivisorSpec {
    pub t: TorusParams,
    lower: Vec<DivisorPoint>,
    upper: Vec<DivisorPoint>,
}

impl SymmetricDivisorSpec {
    pub fn new(
        t: TorusParams,
        mut lower: Vec<DivisorPoint>,
        mut upper: Vec<DivisorPoint>,
    ) -> Result<Self, DivisorError> {
        lower.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        upper.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        validate_edge(&lower, 0.0, 0.5, false)?;
        validate_edge(&upper, 0.0, 0.5, false)?;
        Ok(SymmetricDivisorSpec { t, lower, upper })
    }

    pub fn lower(&self) -> &[DivisorPoint] {
        &self.lower
    }

    pub fn upper(&self) -> &[DivisorPoint] {
        &self.upper
    }

    /// Expand the half-data into a full [`DivisorSpec`]: each point `x` with
    /// exponent `e` contributes the mirror `1 - x` with exponent `-e`, so the
    /// angle condition holds automatically.
    pub fn expand(&self) -> Result<DivisorSpec, DivisorError> {
        let expand_edge = |pts: &[DivisorPoint]| -> Vec<DivisorPoint> {
            let mut out: Vec<DivisorPoint> = pts.to_vec();
            for p in pts.iter().rev() {
                out.push(DivisorPoint::new(1.0 - p.pos, -p.exp));
            }
            out
        };
        DivisorSpec::new(self.t, expand_edge(&self.lower), expand_edge(&self.upper))
    }

    /// Recover the half-data from an expanded divisor (left inverse of
    /// [`expand`] on valid symmetric specs).
    pub fn restrict(d: &DivisorSpec) -> Result<Self, DivisorError> {
        let take_half = |pts: &[DivisorPoint]| -> Result<Vec<DivisorPoint>, DivisorError> {
            let mut half = Vec::new();
            for p in pts {
                if p.pos < 0.5 {
                    let mirror = pts
                        .iter()
                        .find(|m| (m.pos - (1.0 - p.pos)).abs() < MIN_SEPARATION);
                    match mirror {
                        Some(m) if m.exp == -p.exp => half.push(*p),
                        _ => return Err(DivisorError::OverlappingPoints),
                    }
                }
            }
            Ok(half)
        };
        SymmetricDivisorSpec::new(d.t, take_half(&d.lower)?, take_half(&d.upper)?)
    }
}

/// Angle between the symmetry plane of the edge through the base point and
/// the single plane of the opposite edge, for the two-point divisor with
/// exponent `a` at `+p`: `pi a (2p - 1)`.
///
/// The value is signed; callers compare magnitudes and record orientation
/// separately.
pub fn plane_angle_basic(a: f64, p: f64) -> f64 {
    PI * a * (2.0 * p - 1.0)
}

/// Signed angle between the plane of the lower interval `[-p_1, p_1]` and
/// the plane of the upper interval `[-q_1, q_1]` of a symmetric divisor:
///
/// ```text
/// pi * ( sum_i a_i (2 p_i - 1) + sum_j b_j (2 Re q_j - 1) )
/// ```
///
/// over the half-data, where `a_i` (`b_j`) is the exponent at `+p_i`
/// (`+q_j`).
pub fn plane_angle_general(s: &SymmetricDivisorSpec) -> f64 {
    let sum = |pts: &[DivisorPoint]| -> f64 {
        pts.iter()
            .map(|p| p.exp_f64() * (2.0 * p.pos - 1.0))
            .sum::<f64>()
    };
    PI * (sum(s.lower()) + sum(s.upper()))
}

/// Exact position of the two-point divisor for the triangle data `(r, s)`:
///
/// ```text
/// p = (r s - r - s) / (2 (r - 1) s)
/// ```
///
/// with `r, s` in `{2, 3, 4, 6}`; errors if the value leaves `(0, 1/2]`.
pub fn basic_p(r: i64, s: i64) -> Result<Rational64, DivisorError> {
    const ORDERS: [i64; 4] = [2, 3, 4, 6];
    if !ORDERS.contains(&r) || !ORDERS.contains(&s) {
        return Err(DivisorError::InvalidOrder { r, s });
    }
    let p = Rational64::new(r * s - r - s, 2 * (r - 1) * s);
    if p <= Rational64::zero() || p > Rational64::new(1, 2) {
        return Err(DivisorError::OutOfRange(p));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> TorusParams {
        TorusParams::new(1.0).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn expand_mirrors_single_pair() {
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(0.25, r(1, 2))],
            vec![],
        )
        .unwrap();
        let d = s.expand().unwrap();
        assert_eq!(d.lower().len(), 2);
        assert_eq!(d.lower()[0].pos, 0.25);
        assert_eq!(d.lower()[0].exp, r(1, 2));
        assert_eq!(d.lower()[1].pos, 0.75); // -1/4 mod 1
        assert_eq!(d.lower()[1].exp, r(-1, 2));
        assert!(d.upper().is_empty());
    }

    #[test]
    fn expand_iwp_four_points() {
        // lower pair at 1/6 with exponent -3/4, upper pair at 1/3 with 3/4
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(1.0 / 6.0, r(-3, 4))],
            vec![DivisorPoint::new(1.0 / 3.0, r(3, 4))],
        )
        .unwrap();
        let d = s.expand().unwrap();
        assert_eq!(d.lower().len(), 2);
        assert_eq!(d.upper().len(), 2);
        let sum: Rational64 = d.lower().iter().map(|p| p.exp).sum();
        assert!(sum.is_zero());
        let sum: Rational64 = d.upper().iter().map(|p| p.exp).sum();
        assert!(sum.is_zero());
    }

    #[test]
    fn expand_rejects_near_collision() {
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(0.5 - 1e-12, r(1, 2))],
            vec![],
        )
        .unwrap();
        assert_eq!(s.expand().unwrap_err(), DivisorError::OverlappingPoints);
    }

    #[test]
    fn expand_restrict_roundtrip() {
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![
                DivisorPoint::new(0.11, r(2, 5)),
                DivisorPoint::new(0.37, r(-1, 3)),
            ],
            vec![DivisorPoint::new(0.21, r(5, 6))],
        )
        .unwrap();
        let back = SymmetricDivisorSpec::restrict(&s.expand().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn full_spec_enforces_angle_condition() {
        let bad = DivisorSpec::new(
            torus(),
            vec![
                DivisorPoint::new(0.2, r(1, 2)),
                DivisorPoint::new(0.7, r(-1, 3)),
            ],
            vec![],
        );
        assert!(matches!(bad, Err(DivisorError::AngleCondition(_))));
    }

    #[test]
    fn full_spec_rejects_out_of_range_exponent() {
        let bad = DivisorSpec::new(
            torus(),
            vec![
                DivisorPoint::new(0.2, r(1, 1)),
                DivisorPoint::new(0.7, r(-1, 1)),
            ],
            vec![],
        );
        assert!(matches!(bad, Err(DivisorError::ExponentOutOfRange(_))));
    }

    #[test]
    fn plane_angle_basic_anchor_points() {
        // p = 1/2 gives zero for any exponent.
        assert_eq!(plane_angle_basic(0.77, 0.5), 0.0);
        // (a, p) = (1/2, 1/4): -pi/4, magnitude pi/s for (2,4,4).
        let v = plane_angle_basic(0.5, 0.25);
        assert!((v + PI / 4.0).abs() < 1e-15);
        // (a, p) = (5/6, 1/5): -pi/2, magnitude pi/s for (6,2,3).
        let v = plane_angle_basic(5.0 / 6.0, 0.2);
        assert!((v + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn plane_angle_general_reduces_to_basic() {
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(0.3, r(2, 3))],
            vec![],
        )
        .unwrap();
        let g = plane_angle_general(&s);
        let b = plane_angle_basic(2.0 / 3.0, 0.3);
        assert!((g - b).abs() < 1e-15);
    }

    #[test]
    fn plane_angle_general_iwp_is_quarter_turn() {
        // a = -3/4 at p = 1/6, b = 3/4 at q = 1/3: angle pi/4 = pi/s, s = 4.
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(1.0 / 6.0, r(-3, 4))],
            vec![DivisorPoint::new(1.0 / 3.0, r(3, 4))],
        )
        .unwrap();
        let g = plane_angle_general(&s);
        assert!((g - PI / 4.0).abs() < 1e-14, "got {g}");
    }

    #[test]
    fn plane_angle_general_equal_sign_constraint_row() {
        // (r, s) = (2, 3): a = -1/2, b = -2/3, constraint 6p + 8q = 1.
        // Pick p = 1/12, then q = (1 - 6p)/8 = 1/16; the angle must be pi.
        let s = SymmetricDivisorSpec::new(
            torus(),
            vec![DivisorPoint::new(1.0 / 12.0, r(-1, 2))],
            vec![DivisorPoint::new(1.0 / 16.0, r(-2, 3))],
        )
        .unwrap();
        let g = plane_angle_general(&s);
        assert!((g - PI).abs() < 1e-14, "got {g}");
    }

    #[test]
    fn basic_p_matches_table() {
        let rows: [(i64, i64, i64, i64); 10] = [
            (2, 4, 1, 4),
            (2, 6, 1, 3),
            (2, 3, 1, 6),
            (3, 3, 1, 4),
            (3, 2, 1, 8),
            (3, 6, 3, 8),
            (4, 4, 1, 3),
            (4, 2, 1, 6),
            (6, 2, 1, 5),
            (6, 3, 3, 10),
        ];
        for (rr, ss, num, den) in rows {
            assert_eq!(basic_p(rr, ss).unwrap(), r(num, den), "({rr},{ss})");
        }
    }

    #[test]
    fn basic_p_rejects_bad_orders() {
        assert!(matches!(basic_p(5, 4), Err(DivisorError::InvalidOrder { .. })));
        // (2,2) gives p = 0, out of range.
        assert!(matches!(basic_p(2, 2), Err(DivisorError::OutOfRange(_))));
    }
}
