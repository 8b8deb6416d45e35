//! Laplace–Beltrami eigenbases of the circle and the round 2-sphere,
//! observation regions, rotations and restricted Gram matrices.
//!
//! Measures are the standard ones (length `2 pi`, area `4 pi`) and every
//! basis is orthonormal for them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre_on;

/// Largest basis dimension accepted by default.
pub const DEFAULT_MAX_DIMENSION: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Circle,
    Sphere2,
}

/// One eigenfunction. On the circle `degree` is the frequency and `order`
/// is `0` (constant), `+k` (cosine) or `-k` (sine); on the sphere they are
/// `l` and `m` of the real harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub index: usize,
    pub eigenvalue: f64,
    pub degree: usize,
    pub order: i64,
}

/// Nodes and weights on the manifold.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Angle(f64),
    Unit(Vector3<f64>),
}

#[derive(Debug, Clone)]
pub struct TangentialBasis {
    pub manifold: Manifold,
    pub max_eigenvalue: f64,
    /// Largest frequency (circle) or degree (sphere) present.
    pub max_degree: usize,
    pub modes: Vec<Mode>,
    /// Exact for products of basis elements.
    pub quadrature: Quadrature,
}

pub fn build_basis(manifold: Manifold, max_eigenvalue: f64) -> Result<TangentialBasis> {
    build_basis_with_limit(manifold, max_eigenvalue, DEFAULT_MAX_DIMENSION)
}

pub fn build_basis_with_limit(
    manifold: Manifold,
    max_eigenvalue: f64,
    max_dimension: usize,
) -> Result<TangentialBasis> {
    if !(max_eigenvalue.is_finite() && max_eigenvalue >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be finite and >= 0, got {max_eigenvalue}"
        )));
    }
    let max_degree = match manifold {
        Manifold::Circle => max_eigenvalue.sqrt().floor() as usize,
        Manifold::Sphere2 => {
            let mut l = 0usize;
            while ((l + 1) * (l + 2)) as f64 <= max_eigenvalue {
                l += 1;
            }
            l
        }
    };
    let dim = match manifold {
        Manifold::Circle => 2 * max_degree + 1,
        Manifold::Sphere2 => (max_degree + 1) * (max_degree + 1),
    };
    if dim > max_dimension {
        return Err(Error::DimensionLimit(format!(
            "bandwidth {max_eigenvalue} needs {dim} modes, limit is {max_dimension}"
        )));
    }
    let mut modes = Vec::with_capacity(dim);
    match manifold {
        Manifold::Circle => {
            modes.push(Mode { index: 0, eigenvalue: 0.0, degree: 0, order: 0 });
            for k in 1..=max_degree {
                for order in [k as i64, -(k as i64)] {
                    modes.push(Mode {
                        index: modes.len(),
                        eigenvalue: (k * k) as f64,
                        degree: k,
                        order,
                    });
                }
            }
        }
        Manifold::Sphere2 => {
            for l in 0..=max_degree {
                for m in -(l as i64)..=(l as i64) {
                    modes.push(Mode {
                        index: modes.len(),
                        eigenvalue: (l * (l + 1)) as f64,
                        degree: l,
                        order: m,
                    });
                }
            }
        }
    }
    let quadrature = match manifold {
        Manifold::Circle => circle_rule(max_degree),
        Manifold::Sphere2 => sphere_cap_rule(&Vector3::z(), PI, max_degree),
    };
    Ok(TangentialBasis {
        manifold,
        max_eigenvalue,
        max_degree,
        modes,
        quadrature,
    })
}

/// Sphere basis holding every degree up to `l_max`.
pub fn sphere_basis(l_max: usize) -> Result<TangentialBasis> {
    build_basis(Manifold::Sphere2, (l_max * (l_max + 1)) as f64)
}

/// Circle basis holding every frequency up to `k_max`.
pub fn circle_basis(k_max: usize) -> Result<TangentialBasis> {
    build_basis(Manifold::Circle, (k_max * k_max) as f64)
}

fn circle_rule(k_max: usize) -> Quadrature {
    let n = 2 * k_max + 2;
    let w = 2.0 * PI / n as f64;
    Quadrature {
        points: (0..n).map(|i| Point::Angle(i as f64 * w)).collect(),
        weights: vec![w; n],
    }
}

/// Orthonormal frame `(e1, e2, c)` around a unit vector `c`.
fn local_frame(c: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if c.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - c * c.dot(&helper)).normalize();
    let e2 = c.cross(&e1);
    (e1, e2)
}

/// Product rule on the cap of angular radius `radius` around `center`,
/// exact for polynomials of degree `<= 2 l_max` in the ambient coordinates.
fn sphere_cap_rule(center: &Vector3<f64>, radius: f64, l_max: usize) -> Quadrature {
    let (zs, wz) = gauss_legendre_on(l_max + 1, radius.cos(), 1.0);
    let n_phi = 2 * l_max + 2;
    let dphi = 2.0 * PI / n_phi as f64;
    let (e1, e2) = local_frame(center);
    let mut points = Vec::with_capacity(zs.len() * n_phi);
    let mut weights = Vec::with_capacity(zs.len() * n_phi);
    for (z, w) in zs.iter().zip(&wz) {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..n_phi {
            let (s, c) = (j as f64 * dphi).sin_cos();
            let p = e1 * (rho * c) + e2 * (rho * s) + center * *z;
            points.push(Point::Unit(p));
            weights.push(w * dphi);
        }
    }
    Quadrature { points, weights }
}

/// All real spherical harmonics of degree `<= l_max` at a unit vector,
/// ordered by `l` then `m = -l..=l`.
pub fn real_spherical_harmonics(l_max: usize, p: &Vector3<f64>) -> Vec<f64> {
    let z = p.z.clamp(-1.0, 1.0);
    let sin_t = (p.x * p.x + p.y * p.y).sqrt();
    let phi = p.y.atan2(p.x);
    let size = l_max + 1;
    // pbar[l][m]: fully normalized associated Legendre functions
    let mut pbar = vec![vec![0.0; size]; size];
    pbar[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..size {
        let mf = m as f64;
        pbar[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * pbar[m - 1][m - 1];
    }
    for m in 0..size {
        if m + 1 < size {
            pbar[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * z * pbar[m][m];
        }
        for l in (m + 2)..size {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            pbar[l][m] = a * (z * pbar[l - 1][m] - b * pbar[l - 2][m]);
        }
    }
    let mut out = Vec::with_capacity(size * size);
    for (l, row) in pbar.iter().enumerate() {
        for m in -(l as i64)..=(l as i64) {
            let am = m.unsigned_abs() as usize;
            let v = match m.cmp(&0) {
                std::cmp::Ordering::Equal => row[0],
                std::cmp::Ordering::Greater => 2f64.sqrt() * row[am] * (am as f64 * phi).cos(),
                std::cmp::Ordering::Less => 2f64.sqrt() * row[am] * (am as f64 * phi).sin(),
            };
            out.push(v);
        }
    }
    out
}

fn circle_values(k_max: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * k_max + 1);
    out.push(1.0 / (2.0 * PI).sqrt());
    let c = 1.0 / PI.sqrt();
    for k in 1..=k_max {
        let (s, co) = (k as f64 * y).sin_cos();
        out.push(c * co);
        out.push(c * s);
    }
    out
}

impl TangentialBasis {
    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    /// Values of every basis element at `p`.
    pub fn evaluate(&self, p: &Point) -> Result<Vec<f64>> {
        match (self.manifold, p) {
            (Manifold::Circle, Point::Angle(y)) => Ok(circle_values(self.max_degree, *y)),
            (Manifold::Sphere2, Point::Unit(v)) => {
                Ok(real_spherical_harmonics(self.max_degree, &v.normalize()))
            }
            _ => Err(Error::InvalidParameter(format!(
                "point {p:?} does not lie on the {:?}",
                self.manifold
            ))),
        }
    }

    /// `(V, w)` with `V[i, a] = psi_a(p_i)` for a quadrature `(p_i, w_i)`.
    pub fn evaluation_matrix(&self, q: &Quadrature) -> Result<DMatrix<f64>> {
        let d = self.dimension();
        let mut v = DMatrix::zeros(q.points.len(), d);
        for (i, p) in q.points.iter().enumerate() {
            let row = self.evaluate(p)?;
            for (a, val) in row.iter().enumerate() {
                v[(i, a)] = *val;
            }
        }
        Ok(v)
    }

    /// Gram matrix of the basis under its own quadrature.
    pub fn quadrature_gram(&self) -> DMatrix<f64> {
        let v = self
            .evaluation_matrix(&self.quadrature)
            .expect("stored quadrature lies on the manifold");
        weighted_gram(&v, &self.quadrature.weights)
    }

    /// Index of the first mode of degree `l`.
    pub fn degree_offset(&self, l: usize) -> usize {
        match self.manifold {
            Manifold::Circle => {
                if l == 0 {
                    0
                } else {
                    2 * l - 1
                }
            }
            Manifold::Sphere2 => l * l,
        }
    }

    /// Number of modes of degree `<= l`.
    pub fn modes_up_to_degree(&self, l: usize) -> usize {
        match self.manifold {
            Manifold::Circle => 2 * l + 1,
            Manifold::Sphere2 => (l + 1) * (l + 1),
        }
    }
}

fn weighted_gram(v: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (i, wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        scaled.row_mut(i).iter_mut().for_each(|x| *x *= s);
    }
    scaled.transpose() * &scaled
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionShape {
    /// Geodesic disc of angular radius `radius` around the unit vector `center`.
    Cap { center: [f64; 3], radius: f64 },
    /// Arc `[center - half_width, center + half_width]`.
    Arc { center: f64, half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub manifold: Manifold,
    pub shape: RegionShape,
    /// Normalized volume.
    pub fraction: f64,
}

impl Region {
    pub fn cap(center: [f64; 3], radius: f64) -> Result<Self> {
        let c = Vector3::from(center);
        let norm = c.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("cap center must be a nonzero vector".into()));
        }
        if !(radius > 0.0 && radius <= PI) {
            return Err(Error::InvalidParameter(format!(
                "cap radius must lie in (0, pi], got {radius}"
            )));
        }
        let c = c / norm;
        Ok(Self {
            manifold: Manifold::Sphere2,
            shape: RegionShape::Cap {
                center: [c.x, c.y, c.z],
                radius,
            },
            fraction: 0.5 * (1.0 - radius.cos()),
        })
    }

    pub fn polar_cap(radius: f64) -> Result<Self> {
        Self::cap([0.0, 0.0, 1.0], radius)
    }

    pub fn arc(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width <= PI) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "arc half-width must lie in (0, pi], got {half_width}"
            )));
        }
        Ok(Self {
            manifold: Manifold::Circle,
            shape: RegionShape::Arc { center, half_width },
            fraction: half_width / PI,
        })
    }

    /// Image of the region under `rotation`.
    pub fn rotated(&self, rotation: &Rotation) -> Result<Self> {
        match (self.shape, rotation) {
            (RegionShape::Arc { center, half_width }, Rotation::Circle(a)) => {
                Self::arc(center + a, half_width)
            }
            (RegionShape::Cap { center, radius }, Rotation::Sphere(r)) => {
                let c = r * Vector3::from(center);
                Self::cap([c.x, c.y, c.z], radius)
            }
            _ => Err(Error::InvalidParameter(format!(
                "rotation {rotation:?} does not act on the {:?}",
                self.manifold
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rotation {
    Circle(f64),
    Sphere(Matrix3<f64>),
}

impl Rotation {
    pub fn identity(manifold: Manifold) -> Self {
        match manifold {
            Manifold::Circle => Rotation::Circle(0.0),
            Manifold::Sphere2 => Rotation::Sphere(Matrix3::identity()),
        }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let a = Vector3::from(axis);
        let n = a.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter("rotation axis must be nonzero".into()));
        }
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(a), angle);
        Ok(Rotation::Sphere(*rot.matrix()))
    }

    /// A rotation carrying the north pole onto the unit vector `target`.
    pub fn pole_to(target: [f64; 3]) -> Result<Self> {
        let t = Vector3::from(target);
        let n = t.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter("target must be nonzero".into()));
        }
        let t = t / n;
        let z = Vector3::z();
        let axis = z.cross(&t);
        let s = axis.norm();
        if s < 1e-15 {
            return if t.z > 0.0 {
                Ok(Rotation::Sphere(Matrix3::identity()))
            } else {
                Self::from_axis_angle([1.0, 0.0, 0.0], PI)
            };
        }
        Self::from_axis_angle([axis.x, axis.y, axis.z], s.atan2(t.z))
    }

    /// `(axis, angle)`; the identity maps to the `z` axis with angle 0.
    pub fn axis_angle(&self) -> ([f64; 3], f64) {
        match self {
            Rotation::Circle(a) => ([0.0, 0.0, 1.0], *a),
            Rotation::Sphere(m) => {
                let rot = nalgebra::Rotation3::from_matrix_unchecked(*m);
                match rot.axis_angle() {
                    Some((axis, angle)) => ([axis.x, axis.y, axis.z], angle),
                    None => ([0.0, 0.0, 1.0], 0.0),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Rotation::Sphere(m) = self {
            let err = (m.transpose() * m - Matrix3::identity()).norm();
            if err > 1e-10 || (m.determinant() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not a proper rotation (orthogonality error {err:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point) -> Point {
        match (self, p) {
            (Rotation::Circle(a), Point::Angle(y)) => Point::Angle(y + a),
            (Rotation::Sphere(m), Point::Unit(v)) => Point::Unit(m * v),
            _ => *p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Grid,
    SphericalDesign { t: usize },
    WeightedDesign { t: usize },
}

#[derive(Debug, Clone)]
pub struct RotationSet {
    pub rotations: Vec<Rotation>,
    pub provenance: Provenance,
}

/// Quadrature on a region, exact for products of basis elements of degree
/// `<= l_max` (cap) or frequency `<= k_max` (arc).
pub fn region_quadrature(region: &Region, max_degree: usize) -> Quadrature {
    match region.shape {
        RegionShape::Cap { center, radius } => {
            sphere_cap_rule(&Vector3::from(center), radius, max_degree)
        }
        RegionShape::Arc { center, half_width } => {
            // products have frequency <= 2 k_max over a length <= 2 pi
            let n = 4 * max_degree + 20;
            let (x, w) = gauss_legendre_on(n, center - half_width, center + half_width);
            Quadrature {
                points: x.into_iter().map(Point::Angle).collect(),
                weights: w,
            }
        }
    }
}

/// `int_{lo}^{hi} cos(k y) dy` and `int_{lo}^{hi} sin(k y) dy`.
fn trig_integrals(k: f64, lo: f64, hi: f64) -> (f64, f64) {
    if k == 0.0 {
        return (hi - lo, 0.0);
    }
    (
        ((k * hi).sin() - (k * lo).sin()) / k,
        ((k * lo).cos() - (k * hi).cos()) / k,
    )
}

fn arc_gram(basis: &TangentialBasis, lo: f64, hi: f64) -> DMatrix<f64> {
    let d = basis.dimension();
    let norm = |m: &Mode| {
        if m.degree == 0 {
            1.0 / (2.0 * PI).sqrt()
        } else {
            1.0 / PI.sqrt()
        }
    };
    let mut g = DMatrix::zeros(d, d);
    for a in &basis.modes {
        for b in &basis.modes {
            if b.index < a.index {
                continue;
            }
            let p = a.degree as f64;
            let q = b.degree as f64;
            let (cm, sm) = trig_integrals(p - q, lo, hi);
            let (cp, sp) = trig_integrals(p + q, lo, hi);
            // cos/sin of the constant mode is 1/0
            let val = match (a.order >= 0, b.order >= 0) {
                (true, true) => 0.5 * (cm + cp),
                (false, false) => 0.5 * (cm - cp),
                (false, true) => 0.5 * (sp + sm),
                (true, false) => 0.5 * (sp - sm),
            };
            let v = val * norm(a) * norm(b);
            g[(a.index, b.index)] = v;
            g[(b.index, a.index)] = v;
        }
    }
    g
}

/// `M(R)_{ab} = int_{R(region)} psi_a psi_b`.
pub fn restricted_gram(
    basis: &TangentialBasis,
    region: &Region,
    rotation: &Rotation,
) -> Result<DMatrix<f64>> {
    rotation.validate()?;
    if region.manifold != basis.manifold {
        return Err(Error::InvalidParameter(format!(
            "region on {:?} but basis on {:?}",
            region.manifold, basis.manifold
        )));
    }
    let moved = region.rotated(rotation)?;
    match moved.shape {
        RegionShape::Arc { center, half_width } => {
            if half_width >= PI {
                return Ok(DMatrix::identity(basis.dimension(), basis.dimension()));
            }
            Ok(arc_gram(basis, center - half_width, center + half_width))
        }
        RegionShape::Cap { .. } => {
            let q = region_quadrature(&moved, basis.max_degree);
            let v = basis.evaluation_matrix(&q)?;
            Ok(weighted_gram(&v, &q.weights))
        }
    }
}

/// `W^{1/2} V` on a region; its squared singular values are the eigenvalues
/// of the restricted Gram, without the squaring loss of forming the Gram.
pub fn weighted_evaluation(
    basis: &TangentialBasis,
    region: &Region,
    rotation: &Rotation,
) -> Result<DMatrix<f64>> {
    rotation.validate()?;
    let moved = region.rotated(rotation)?;
    let q = region_quadrature(&moved, basis.max_degree);
    let mut v = basis.evaluation_matrix(&q)?;
    for (i, w) in q.weights.iter().enumerate() {
        let s = w.sqrt();
        v.row_mut(i).iter_mut().for_each(|x| *x *= s);
    }
    Ok(v)
}

/// Index of the sectoral harmonic of degree `l` (the cosine-type `Y_l^l`).
pub fn concentrating_mode(basis: &TangentialBasis, l: usize) -> Result<usize> {
    if basis.manifold != Manifold::Sphere2 {
        return Err(Error::InvalidParameter("sectoral modes live on the sphere".into()));
    }
    if l > basis.max_degree {
        return Err(Error::Missing(format!(
            "degree {l} not in basis (max degree {})",
            basis.max_degree
        )));
    }
    Ok(l * l + 2 * l)
}

/// JSON document for a Gram matrix.
pub fn gram_to_json(
    gram: &DMatrix<f64>,
    basis: &TangentialBasis,
    region: &Region,
    rotation: &Rotation,
) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..gram.nrows())
        .map(|i| gram.row(i).iter().copied().collect())
        .collect();
    let (axis, angle) = rotation.axis_angle();
    serde_json::json!({
        "d": gram.nrows(),
        "manifold": basis.manifold,
        "max_eigenvalue": basis.max_eigenvalue,
        "region": region,
        "rotation": {"axis": axis, "angle": angle},
        "matrix": rows,
    })
}
