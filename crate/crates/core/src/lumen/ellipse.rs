//! Direct least-squares ellipse fitting with the ellipse-specific constraint
//! `4ac - b² = 1`, in the numerically stable partitioned form.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub centre: [f64; 2],
    /// Semi-major axis, mm.
    pub a: f64,
    /// Semi-minor axis, mm.
    pub b: f64,
    /// Angle of the major axis from the first plane axis, radians.
    pub orientation: f64,
}

impl Ellipse {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.a * self.b
    }
}

/// Fit an ellipse to 2D points (at least six, not collinear).
pub fn fit_ellipse(points: &[[f64; 2]]) -> Result<Ellipse> {
    if points.len() < 6 {
        return Err(Error::EllipseFit("need at least six points"));
    }
    // Centre and scale the data so the scatter matrices are well conditioned.
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let scale = (points
        .iter()
        .map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(scale > 1e-12) {
        return Err(Error::EllipseFit("points coincide"));
    }
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    let mut s3 = Matrix3::zeros();
    for p in points {
        let x = (p[0] - mx) / scale;
        let y = (p[1] - my) / scale;
        let d1 = Vector3::new(x * x, x * y, y * y);
        let d2 = Vector3::new(x, y, 1.0);
        s1 += d1 * d1.transpose();
        s2 += d1 * d2.transpose();
        s3 += d2 * d2.transpose();
    }
    let s3_inv = s3
        .try_inverse()
        .filter(|_| s3.determinant().abs() > 1e-10 * n.powi(3))
        .ok_or(Error::EllipseFit("degenerate scatter"))?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // Premultiply by the inverse of the constraint matrix.
    let reduced = Matrix3::from_rows(&[
        (m.row(2) / 2.0).into_owned(),
        (-m.row(1)).into_owned(),
        (m.row(0) / 2.0).into_owned(),
    ]);
    let eigenvalues = reduced
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect::<Vec<_>>();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in eigenvalues {
        let shifted = reduced - Matrix3::identity() * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::EllipseFit("eigenvector"))?;
        let idx = svd.singular_values.imin();
        let a1: Vector3<f64> = v_t.row(idx).transpose();
        let cond = 4.0 * a1[0] * a1[2] - a1[1] * a1[1];
        if cond > 0.0 && best.as_ref().is_none_or(|(c, _)| cond > *c) {
            best = Some((cond, a1));
        }
    }
    let (_, a1) = best.ok_or(Error::EllipseFit("no elliptic solution"))?;
    let a2 = t * a1;
    let conic = [a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]];
    let e = conic_to_ellipse(conic)?;
    Ok(Ellipse {
        centre: [mx + scale * e.centre[0], my + scale * e.centre[1]],
        a: e.a * scale,
        b: e.b * scale,
        orientation: e.orientation,
    })
}

/// Geometric parameters of `A x² + B xy + C y² + D x + E y + F = 0`.
fn conic_to_ellipse(c: [f64; 6]) -> Result<Ellipse> {
    let [mut a, mut b, mut cc, mut d, mut e, mut f] = c;
    if a + cc < 0.0 {
        [a, b, cc, d, e, f] = [-a, -b, -cc, -d, -e, -f];
    }
    let det = 4.0 * a * cc - b * b;
    if det <= 0.0 {
        return Err(Error::EllipseFit("conic is not an ellipse"));
    }
    let x0 = (b * e - 2.0 * cc * d) / det;
    let y0 = (b * d - 2.0 * a * e) / det;
    let f0 = a * x0 * x0 + b * x0 * y0 + cc * y0 * y0 + d * x0 + e * y0 + f;
    // Eigen-decomposition of [[a, b/2], [b/2, c]].
    let mean = 0.5 * (a + cc);
    let diff = ((0.5 * (a - cc)).powi(2) + 0.25 * b * b).sqrt();
    let (l_small, l_large) = (mean - diff, mean + diff);
    if l_small <= 0.0 || f0 >= 0.0 {
        return Err(Error::EllipseFit("imaginary ellipse"));
    }
    let major = (-f0 / l_small).sqrt();
    let minor = (-f0 / l_large).sqrt();
    // The quadratic form peaks along 0.5·atan2(b, a - c), which is the minor axis.
    let orientation = 0.5 * b.atan2(a - cc) + std::f64::consts::FRAC_PI_2;
    Ok(Ellipse {
        centre: [x0, y0],
        a: major,
        b: minor,
        orientation,
    })
}
