//! Natural cubic interpolating spline with chord-length knots.

use crate::{Error, Result, Vec3};

/// Parametric step between measurement stations, in knot units.
pub const PARAM_STEP: f64 = 0.25;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

const QUAD_TOL: f64 = 1e-10;

/// Piecewise cubic curve. Segment `i` is
/// `c[i][0] + c[i][1] u + c[i][2] u² + c[i][3] u³` with `u = t - knots[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AirwaySpline {
    knots: Vec<f64>,
    coeffs: Vec<[Vec3; 4]>,
    cumulative: Vec<f64>,
}

/// Fit a natural cubic spline through `points`, knots at cumulative chord length.
pub fn fit_spline(points: &[Vec3]) -> Result<AirwaySpline> {
    let n = points.len();
    if n < 2 {
        return Err(Error::PathTooShort(n, 2));
    }
    let mut knots = vec![0.0; n];
    for i in 1..n {
        let h = (points[i] - points[i - 1]).norm();
        if h <= 1e-12 {
            return Err(Error::DuplicatePoint(i - 1, i));
        }
        knots[i] = knots[i - 1] + h;
    }
    let m = second_derivatives(points, &knots);
    let coeffs: Vec<[Vec3; 4]> = (0..n - 1)
        .map(|i| {
            let h = knots[i + 1] - knots[i];
            let c1 = (points[i + 1] - points[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
            [points[i], c1, m[i] / 2.0, (m[i + 1] - m[i]) / (6.0 * h)]
        })
        .collect();
    let mut sp = AirwaySpline {
        knots,
        coeffs,
        cumulative: Vec::new(),
    };
    let mut cumulative = vec![0.0; n];
    for i in 0..n - 1 {
        cumulative[i + 1] = cumulative[i] + sp.segment_length(i, 0.0, sp.knots[i + 1] - sp.knots[i]);
    }
    sp.cumulative = cumulative;
    Ok(sp)
}

/// Second derivatives at the knots with zero curvature at both ends
/// (tridiagonal solve, Thomas algorithm).
fn second_derivatives(y: &[Vec3], k: &[f64]) -> Vec<Vec3> {
    let n = y.len();
    let mut m = vec![Vec3::zeros(); n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![Vec3::zeros(); inner];
    for r in 0..inner {
        let i = r + 1;
        let h0 = k[i] - k[i - 1];
        let h1 = k[i + 1] - k[i];
        diag[r] = 2.0 * (h0 + h1);
        upper[r] = h1;
        rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    for r in 1..inner {
        let lower = k[r + 1] - k[r];
        let w = lower / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        let prev = rhs[r - 1];
        rhs[r] -= w * prev;
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for r in (0..inner - 1).rev() {
        m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
    }
    m
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

impl AirwaySpline {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefficients(&self) -> &[[Vec3; 4]] {
        &self.coeffs
    }

    /// Upper end of the parameter range.
    pub fn t_max(&self) -> f64 {
        *self.knots.last().expect("spline has knots")
    }

    /// Total arc length in mm.
    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("spline has knots")
    }

    /// Validate `t`, absorbing round-off at either end of the range.
    fn check(&self, t: f64) -> Result<f64> {
        let max = self.t_max();
        let slack = 1e-12 * (1.0 + max);
        if !(t >= -slack && t <= max + slack) {
            return Err(Error::ParameterOutOfRange { value: t, min: 0.0, max });
        }
        Ok(t.clamp(0.0, max))
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.coeffs.len() - 1;
        let i = self.knots.partition_point(|&k| k <= t).saturating_sub(1).min(last);
        (i, t - self.knots[i])
    }

    fn eval_seg(&self, i: usize, u: f64) -> Vec3 {
        let c = &self.coeffs[i];
        c[0] + u * (c[1] + u * (c[2] + u * c[3]))
    }

    fn deriv_seg(&self, i: usize, u: f64) -> Vec3 {
        let c = &self.coeffs[i];
        c[1] + u * (2.0 * c[2] + 3.0 * u * c[3])
    }

    fn second_seg(&self, i: usize, u: f64) -> Vec3 {
        let c = &self.coeffs[i];
        2.0 * c[2] + 6.0 * u * c[3]
    }

    pub fn eval(&self, t: f64) -> Result<Vec3> {
        let (i, u) = self.locate(self.check(t)?);
        Ok(self.eval_seg(i, u))
    }

    pub fn derivative(&self, t: f64) -> Result<Vec3> {
        let (i, u) = self.locate(self.check(t)?);
        Ok(self.deriv_seg(i, u))
    }

    pub fn second_derivative(&self, t: f64) -> Result<Vec3> {
        let (i, u) = self.locate(self.check(t)?);
        Ok(self.second_seg(i, u))
    }

    /// Unit tangent at `t`.
    pub fn tangent(&self, t: f64) -> Result<Vec3> {
        let d = self.derivative(t)?;
        let n = d.norm();
        if n <= 1e-9 {
            return Err(Error::DegenerateTangent(t));
        }
        Ok(d / n)
    }

    fn segment_length(&self, i: usize, u0: f64, u1: f64) -> f64 {
        self.adaptive(i, u0, u1, gauss_legendre(|u| self.deriv_seg(i, u).norm(), u0, u1), 0)
    }

    fn adaptive(&self, i: usize, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
        let mid = 0.5 * (a + b);
        let speed = |u: f64| self.deriv_seg(i, u).norm();
        let left = gauss_legendre(speed, a, mid);
        let right = gauss_legendre(speed, mid, b);
        if depth >= 20 || (left + right - whole).abs() <= QUAD_TOL {
            return left + right;
        }
        self.adaptive(i, a, mid, left, depth + 1) + self.adaptive(i, mid, b, right, depth + 1)
    }

    /// Arc length from the start of the curve to parameter `t`, in mm.
    pub fn arc_length(&self, t: f64) -> Result<f64> {
        let (i, u) = self.locate(self.check(t)?);
        Ok(self.cumulative[i] + self.segment_length(i, 0.0, u))
    }

    /// Station parameters `0, step, 2·step, …` up to the end of the curve.
    pub fn stations(&self, step: f64) -> Vec<f64> {
        let n = (self.t_max() / step + 1e-9).floor() as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(r: f64, step: f64) -> Vec<Vec3> {
        let n = (2.0 * std::f64::consts::PI * r / step).round() as usize;
        let half = (n / 4) as isize;
        (-half..=half)
            .map(|i| {
                let a = i as f64 * step / r;
                Vec3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect()
    }

    fn polyline_length(sp: &AirwaySpline, segments: usize) -> f64 {
        let t = sp.t_max();
        let mut prev = sp.eval(0.0).unwrap();
        let mut total = 0.0;
        for s in 1..=segments {
            let p = sp.eval(t * s as f64 / segments as f64).unwrap();
            total += (p - prev).norm();
            prev = p;
        }
        total
    }

    #[test]
    fn collinear_points_give_straight_segment() {
        let pts = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), Vec3::new(3.0, 3.0, 3.0)];
        let sp = fit_spline(&pts).unwrap();
        for s in 0..=50 {
            let t = sp.t_max() * s as f64 / 50.0;
            assert!(sp.second_derivative(t).unwrap().norm() < 1e-9);
            let p = sp.eval(t).unwrap();
            assert!((p.x - p.y).abs() < 1e-12 && (p.y - p.z).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_knots_and_is_c2() {
        let pts: Vec<Vec3> = (0..12)
            .map(|i| {
                let x = i as f64;
                Vec3::new(x, (0.7 * x).sin() * 3.0, 0.2 * x * x)
            })
            .collect();
        let sp = fit_spline(&pts).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert!((sp.eval(sp.knots()[i]).unwrap() - p).norm() < 1e-12);
        }
        for i in 1..sp.coefficients().len() {
            let h = sp.knots()[i] - sp.knots()[i - 1];
            let scale = 1.0 + sp.coefficients()[i][0].norm();
            assert!((sp.eval_seg(i - 1, h) - sp.eval_seg(i, 0.0)).norm() < 1e-9 * scale);
            assert!((sp.deriv_seg(i - 1, h) - sp.deriv_seg(i, 0.0)).norm() < 1e-9 * scale);
            assert!((sp.second_seg(i - 1, h) - sp.second_seg(i, 0.0)).norm() < 1e-9 * scale);
        }
        assert!(sp.second_derivative(0.0).unwrap().norm() < 1e-12);
        assert!(sp.second_derivative(sp.t_max()).unwrap().norm() < 1e-9);
    }

    #[test]
    fn circle_is_tracked_closely() {
        let r = 20.0;
        let sp = fit_spline(&circle(r, 2.0)).unwrap();
        // Stay clear of the free ends, where the natural condition bends away.
        let lo = sp.knots()[3];
        let hi = sp.knots()[sp.knots().len() - 4];
        for s in 0..=2000 {
            let t = lo + (hi - lo) * s as f64 / 2000.0;
            let p = sp.eval(t).unwrap();
            assert!((p.norm() - r).abs() < 0.01, "deviation at {t}");
        }
        let mid = sp.knots()[sp.knots().len() / 2];
        assert!((sp.eval(mid).unwrap() - Vec3::new(r, 0.0, 0.0)).norm() < 1e-12);
        let q = sp.tangent(mid).unwrap();
        assert!((q.y - 1.0).abs() < 1e-3 && q.x.abs() < 1e-3, "{q:?}");
    }

    #[test]
    fn arc_length_basics() {
        let sp = fit_spline(&[Vec3::zeros(), Vec3::new(0.0, 0.0, 50.0)]).unwrap();
        assert_eq!(sp.arc_length(0.0).unwrap(), 0.0);
        assert!((sp.arc_length(sp.t_max()).unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(sp.tangent(10.0).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(sp.arc_length(50.5), Err(Error::ParameterOutOfRange { .. })));
    }

    #[test]
    fn helix_length_matches_polyline() {
        let (rh, pitch) = (20.0, 30.0);
        let pts: Vec<Vec3> = (0..=200)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 200.0;
                Vec3::new(rh * a.cos(), rh * a.sin(), pitch * a / (2.0 * std::f64::consts::PI))
            })
            .collect();
        let sp = fit_spline(&pts).unwrap();
        let quad = sp.length();
        let oracle = polyline_length(&sp, 100_000);
        assert!((quad - oracle).abs() / oracle < 1e-6, "{quad} vs {oracle}");
        let analytic = ((2.0 * std::f64::consts::PI * rh).powi(2) + pitch * pitch).sqrt();
        assert!((quad - analytic).abs() / analytic < 5e-3);
    }

    #[test]
    fn duplicate_points_rejected() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(matches!(fit_spline(&[p, p, p + Vec3::x()]), Err(Error::DuplicatePoint(0, 1))));
        assert!(matches!(fit_spline(&[p]), Err(Error::PathTooShort(1, 2))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn arc_length_monotone_and_additive(
            zs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.5f64..3.0), 3..12),
            fa in 0.0f64..1.0,
            fb in 0.0f64..1.0,
        ) {
            let mut p = Vec3::zeros();
            let pts: Vec<Vec3> = std::iter::once(p)
                .chain(zs.iter().map(|&(x, y, z)| { p += Vec3::new(x, y, z); p }))
                .collect();
            let sp = fit_spline(&pts).unwrap();
            let (ta, tb) = (fa.min(fb) * sp.t_max(), fa.max(fb) * sp.t_max());
            let la = sp.arc_length(ta).unwrap();
            let lb = sp.arc_length(tb).unwrap();
            prop_assert!(lb >= la - 1e-12);
            let direct = la + (sp.arc_length(sp.t_max()).unwrap() - la);
            prop_assert!((direct - sp.length()).abs() < 1e-9);
            let oracle = polyline_length(&sp, 100_000);
            prop_assert!((sp.length() - oracle).abs() / oracle < 1e-3);
            let q = sp.tangent(ta).unwrap();
            prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        }
    }
}
