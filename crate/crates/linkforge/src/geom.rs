//! Points, Euclidean motions and similarities of R^n.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// A point of R^n.
pub type Point = DVector<f64>;

/// Tolerance used when checking that a matrix is orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("degenerate direction")]
    ZeroVector,
}

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

pub fn zero(n: usize) -> Point {
    DVector::zeros(n)
}

/// Standard basis vector e_{i+1} (0-based index `i`).
pub fn basis(n: usize, i: usize) -> Point {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    (a - b).norm()
}

/// Uniform sample from the ball of radius `r` around `c`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, c: &Point, r: f64) -> Point {
    let n = c.len();
    let dir = sample_unit(rng, n);
    let u: f64 = rng.gen();
    c + dir * (r * u.powf(1.0 / n as f64))
}

pub fn sample_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Point {
    loop {
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}

/// The motion z -> Qz + z0.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanMotion {
    pub rotation: DMatrix<f64>,
    pub translation: Point,
}

impl EuclideanMotion {
    pub fn new(rotation: DMatrix<f64>, translation: Point) -> Result<Self, GeomError> {
        let n = translation.len();
        if rotation.nrows() != n || rotation.ncols() != n {
            return Err(GeomError::DimMismatch { expected: n, got: rotation.nrows() });
        }
        let dev = orthogonality_defect(&rotation);
        if dev > ORTHOGONALITY_TOL {
            return Err(GeomError::NotOrthogonal(dev));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity(n: usize) -> Self {
        Self { rotation: DMatrix::identity(n, n), translation: zero(n) }
    }

    pub fn translation(z0: Point) -> Self {
        let n = z0.len();
        Self { rotation: DMatrix::identity(n, n), translation: z0 }
    }

    pub fn rotation(q: DMatrix<f64>) -> Result<Self, GeomError> {
        let n = q.nrows();
        Self::new(q, zero(n))
    }

    /// Rotation by `theta` in the plane of coordinates `i` and `j`.
    pub fn plane_rotation(n: usize, i: usize, j: usize, theta: f64) -> Self {
        let mut q = DMatrix::identity(n, n);
        let (s, c) = theta.sin_cos();
        q[(i, i)] = c;
        q[(j, j)] = c;
        q[(i, j)] = -s;
        q[(j, i)] = s;
        Self { rotation: q, translation: zero(n) }
    }

    /// Reflection exchanging the unit vectors `from` and `to` (identity if equal).
    pub fn householder(from: &Point, to: &Point) -> Result<Self, GeomError> {
        let n = from.len();
        if to.len() != n {
            return Err(GeomError::DimMismatch { expected: n, got: to.len() });
        }
        let (nf, nt) = (from.norm(), to.norm());
        if nf < 1e-15 || nt < 1e-15 {
            return Err(GeomError::ZeroVector);
        }
        let w = from / nf - to / nt;
        let ww = w.norm_squared();
        let mut q = DMatrix::identity(n, n);
        if ww > 1e-30 {
            q -= (&w * w.transpose()) * (2.0 / ww);
        }
        Ok(Self { rotation: q, translation: zero(n) })
    }

    /// Haar-random orthogonal part plus a translation drawn from the cube [-s, s]^n.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, shift: f64) -> Self {
        let q = random_orthogonal(rng, n);
        let t = DVector::from_fn(n, |_, _| rng.gen_range(-shift..=shift));
        Self { rotation: q, translation: t }
    }

    /// Random motion fixing pointwise the affine subspace `base + span(dirs)`.
    pub fn random_fixing<R: Rng + ?Sized>(rng: &mut R, base: &Point, dirs: &[Point]) -> Self {
        let n = base.len();
        let frame = orthonormal_basis(dirs, n);
        let k = frame.len();
        // complement directions
        let mut all = frame.clone();
        for i in 0..n {
            all.push(basis(n, i));
        }
        let full = gram_schmidt(&all);
        let comp: Vec<Point> = full[k..].to_vec();
        let m = comp.len();
        let r = random_orthogonal(rng, m);
        let mut q = DMatrix::identity(n, n);
        if m > 0 {
            let mut p = DMatrix::zeros(n, m);
            for (j, c) in comp.iter().enumerate() {
                p.set_column(j, c);
            }
            // Q = I - P P^T + P R P^T
            q = q - &p * p.transpose() + &p * r * p.transpose();
        }
        let t = base - &q * base;
        Self { rotation: q, translation: t }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, p: &Point) -> Point {
        &self.rotation * p + &self.translation
    }

    pub fn inverse(&self) -> Self {
        let qt = self.rotation.transpose();
        let t = -(&qt * &self.translation);
        Self { rotation: qt, translation: t }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: &self.rotation * &other.rotation,
            translation: &self.rotation * &other.translation + &self.translation,
        }
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.rotation)
    }
}

pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax()
}

pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Orthonormalize, dropping (numerically) dependent vectors.
pub fn gram_schmidt(vs: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let d = u.dot(&w);
                w -= u * d;
            }
        }
        let nw = w.norm();
        if nw > 1e-10 * v.norm().max(1.0) {
            out.push(w / nw);
        }
    }
    out
}

pub fn orthonormal_basis(dirs: &[Point], _n: usize) -> Vec<Point> {
    gram_schmidt(dirs)
}

/// The map p -> s Q p + t.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub motion: EuclideanMotion,
}

impl Similarity {
    pub fn identity(n: usize) -> Self {
        Self { scale: 1.0, motion: EuclideanMotion::identity(n) }
    }

    pub fn scaling(n: usize, s: f64) -> Self {
        Self { scale: s, motion: EuclideanMotion::identity(n) }
    }

    pub fn from_motion(m: EuclideanMotion) -> Self {
        Self { scale: 1.0, motion: m }
    }

    pub fn dim(&self) -> usize {
        self.motion.dim()
    }

    pub fn apply(&self, p: &Point) -> Point {
        (&self.motion.rotation * p) * self.scale + &self.motion.translation
    }

    /// [`Similarity::apply`] written into `out` without allocating.
    pub(crate) fn apply_into(&self, p: &Point, out: &mut [f64]) {
        let n = out.len();
        let q = self.motion.rotation.as_slice();
        let t = self.motion.translation.as_slice();
        let x = p.as_slice();
        if let ([o0, o1, o2], [x0, x1, x2], [t0, t1, t2]) = (&mut *out, x, t) {
            let (c0, c1, c2) = (x0 * self.scale, x1 * self.scale, x2 * self.scale);
            *o0 = t0 + q[0] * c0 + q[3] * c1 + q[6] * c2;
            *o1 = t1 + q[1] * c0 + q[4] * c1 + q[7] * c2;
            *o2 = t2 + q[2] * c0 + q[5] * c1 + q[8] * c2;
            return;
        }
        out.copy_from_slice(t);
        for (j, &pj) in p.as_slice().iter().enumerate() {
            let c = pj * self.scale;
            for (o, &qij) in out.iter_mut().zip(&q[j * n..(j + 1) * n]) {
                *o += qij * c;
            }
        }
    }

    /// Apply only the linear part.
    pub fn apply_linear(&self, v: &Point) -> Point {
        (&self.motion.rotation * v) * self.scale
    }

    pub fn apply_inverse(&self, p: &Point) -> Point {
        (self.motion.rotation.transpose() * (p - &self.motion.translation)) / self.scale
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let rot = &self.motion.rotation * &inner.motion.rotation;
        let t = (&self.motion.rotation * &inner.motion.translation) * self.scale
            + &self.motion.translation;
        Self { scale: self.scale * inner.scale, motion: EuclideanMotion { rotation: rot, translation: t } }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && self.motion.translation.iter().all(|&x| x == 0.0)
            && self.motion.rotation == DMatrix::identity(self.dim(), self.dim())
    }
}
