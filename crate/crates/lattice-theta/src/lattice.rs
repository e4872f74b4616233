//! Bravais lattices Λ = Mℤ^d, stored by basis matrix with generators as columns.

use std::cmp::Ordering;
use std::str::FromStr;

use crate::error::{param, Result, ThetaError};
use crate::linalg::{dot, norm_sq, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BravaisLattice<T> {
    basis: Matrix<T>,
    gram: Matrix<T>,
    covolume: T,
}

impl<T: Scalar> BravaisLattice<T> {
    pub fn new(basis: Matrix<T>) -> Result<Self> {
        let det = basis.det();
        if !(det.abs() > T::zero()) || !det.is_finite() {
            return Err(ThetaError::Parameter("basis matrix must be invertible".into()));
        }
        let gram = basis.transpose().matmul(&basis);
        Ok(Self { covolume: det.abs(), basis, gram })
    }

    /// Lattice generated by the given vectors.
    pub fn from_generators(gens: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_columns(gens)?)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    pub fn covolume(&self) -> T {
        self.covolume
    }

    pub fn generators(&self) -> Vec<Vec<T>> {
        self.basis.columns()
    }

    pub fn lambda_min(&self) -> T {
        self.gram.symmetric_eigenvalues()[0]
    }

    /// Cartesian point with the given integer coordinates.
    pub fn point(&self, coeffs: &[i64]) -> Vec<T> {
        let z: Vec<T> = coeffs.iter().map(|&k| T::from_i64_lossy(k)).collect();
        self.basis.mul_vec(&z)
    }

    /// Cartesian point with real lattice coordinates.
    pub fn from_coords(&self, coords: &[T]) -> Vec<T> {
        self.basis.mul_vec(coords)
    }

    /// Lattice coordinates of a Cartesian vector.
    pub fn coords(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.dim() {
            return param(format!("vector has length {}, lattice has dimension {}", u.len(), self.dim()));
        }
        self.basis.solve(u)
    }

    /// Whether u ∈ Λ, judged by roundness of its coordinates.
    pub fn contains(&self, u: &[T], tol: T) -> Result<bool> {
        Ok(self.coords(u)?.iter().all(|&x| (x - x.round()).abs() <= tol))
    }

    /// Coordinates of u reduced into [0,1)^d.
    pub fn cell_coords(&self, u: &[T]) -> Result<Vec<T>> {
        Ok(self.coords(u)?.into_iter().map(wrap_unit).collect())
    }

    /// Representative of u + Λ inside the half-open fundamental cell.
    pub fn reduce_to_cell(&self, u: &[T]) -> Result<Vec<T>> {
        Ok(self.from_coords(&self.cell_coords(u)?))
    }

    pub fn scaled(&self, a: T) -> Self {
        Self::new(self.basis.scale(a)).expect("scaling by a non-zero factor keeps the basis invertible")
    }

    /// Integer vectors z with |Bz − center|² ≤ r2, and their squared distances.
    pub fn ball_points(&self, center: &[T], r2: T) -> Result<Vec<(Vec<i64>, T)>> {
        let c = self.coords(center)?;
        let r = self.gram.cholesky_upper()?;
        let d = self.dim();
        let mut out = Vec::new();
        let mut z = vec![0i64; d];
        let slack = r2 * T::lit(1e-10) + T::lit(1e-300);
        self.fp_recurse(&r, &c, center, r2, r2 + slack, d, &mut z, &mut out);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn fp_recurse(
        &self,
        r: &Matrix<T>,
        c: &[T],
        center: &[T],
        r2: T,
        rem: T,
        level: usize,
        z: &mut Vec<i64>,
        out: &mut Vec<(Vec<i64>, T)>,
    ) {
        let d = self.dim();
        if level == 0 {
            let p = self.point(z);
            let diff: Vec<T> = p.iter().zip(center).map(|(&a, &b)| a - b).collect();
            let n2 = norm_sq(&diff);
            if n2 <= r2 {
                out.push((z.clone(), n2));
            }
            return;
        }
        let i = level - 1;
        let rii = r[(i, i)];
        let mut shift = T::zero();
        for j in i + 1..d {
            shift += r[(i, j)] / rii * (T::from_i64_lossy(z[j]) - c[j]);
        }
        let mid = c[i] - shift;
        let half = (rem.max(T::zero())).sqrt() / rii;
        let lo = (mid - half).ceil().to_i64().unwrap_or(0);
        let hi = (mid + half).floor().to_i64().unwrap_or(-1);
        for k in lo..=hi {
            z[i] = k;
            let y = T::from_i64_lossy(k) - mid;
            let used = rii * rii * y * y;
            if used <= rem {
                self.fp_recurse(r, c, center, r2, rem - used, level - 1, z, out);
            }
        }
        z[i] = 0;
    }
}

fn wrap_unit<T: Scalar>(x: T) -> T {
    let w = x - x.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}

pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Zd,
    A2,
    D3,
    Fcc,
    Bcc,
    Ly,
    Lyt,
    Rhombic,
}

impl FromStr for Preset {
    type Err = ThetaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zd" => Ok(Self::Zd),
            "a2" => Ok(Self::A2),
            "d3" => Ok(Self::D3),
            "fcc" => Ok(Self::Fcc),
            "bcc" => Ok(Self::Bcc),
            "ly" => Ok(Self::Ly),
            "lyt" => Ok(Self::Lyt),
            "rhombic" => Ok(Self::Rhombic),
            _ => param(format!("unknown preset '{s}'")),
        }
    }
}

impl Preset {
    fn arity(self) -> usize {
        match self {
            Self::Zd | Self::A2 | Self::Ly => 1,
            Self::D3 | Self::Fcc | Self::Bcc => 0,
            Self::Lyt | Self::Rhombic => 2,
        }
    }
}

pub fn make_preset<T: Scalar>(preset: Preset, params: &[T]) -> Result<BravaisLattice<T>> {
    if params.len() != preset.arity() {
        return param(format!("preset {preset:?} takes {} parameter(s), got {}", preset.arity(), params.len()));
    }
    let positive = |v: T, what: &str| -> Result<T> {
        if v > T::zero() && v.is_finite() {
            Ok(v)
        } else {
            param(format!("{what} must be positive, got {v}"))
        }
    };
    let z = T::zero();
    let one = T::one();
    let h = T::lit(0.5);
    let gens: Vec<Vec<T>> = match preset {
        Preset::Zd => {
            let d = params[0];
            if d < one || d.fract() != z || d > T::lit(16.0) {
                return param(format!("Zd dimension must be an integer in 1..=16, got {d}"));
            }
            let d = d.to_usize().unwrap();
            return BravaisLattice::new(Matrix::identity(d));
        }
        Preset::A2 => {
            let a = positive(params[0], "side length")?;
            vec![vec![a, z], vec![a * h, a * T::lit(3.0).sqrt() * h]]
        }
        Preset::D3 => vec![vec![one, one, z], vec![one, z, one], vec![z, one, one]],
        Preset::Fcc => vec![vec![h, h, z], vec![h, z, h], vec![z, h, h]],
        Preset::Bcc => vec![vec![one, z, z], vec![z, one, z], vec![h, h, h]],
        Preset::Ly => {
            let y = positive(params[0], "y")?;
            if y < one {
                return param(format!("y must be at least 1, got {y}"));
            }
            vec![vec![y.sqrt(), z], vec![z, one / y.sqrt()]]
        }
        Preset::Lyt => {
            let y = positive(params[0], "y")?;
            let t = positive(params[1], "t")?;
            if y < one {
                return param(format!("y must be at least 1, got {y}"));
            }
            let sy = y.sqrt();
            vec![vec![sy, z, z], vec![z, one / sy, z], vec![sy * h, h / sy, t * h]]
        }
        Preset::Rhombic => {
            let a = positive(params[0], "a")?;
            let b = positive(params[1], "b")?;
            vec![vec![a, b], vec![z, T::lit(2.0) * a]]
        }
    };
    BravaisLattice::from_generators(&gens)
}

/// Layer spacing and in-layer scale of unit-density BCC and FCC stackings.
pub fn t_bcc<T: Scalar>() -> T {
    T::lit(2f64.powf(-2.0 / 3.0) / 3f64.sqrt())
}
pub fn l_bcc<T: Scalar>() -> T {
    T::lit(2f64.powf(5.0 / 6.0))
}
pub fn t_fcc<T: Scalar>() -> T {
    T::lit(2f64.powf(2.0 / 3.0) / 3f64.sqrt())
}
pub fn l_fcc<T: Scalar>() -> T {
    T::lit(2f64.powf(1.0 / 6.0))
}

pub fn dual<T: Scalar>(l: &BravaisLattice<T>) -> BravaisLattice<T> {
    let inv_t = l.basis.transpose().inverse().expect("lattice basis is invertible");
    BravaisLattice::new(inv_t).expect("inverse transpose is invertible")
}

pub fn normalize_density<T: Scalar>(l: &BravaisLattice<T>) -> BravaisLattice<T> {
    let d = T::from_usize_lossy(l.dim());
    l.scaled(l.covolume.powf(-T::one() / d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaQDT<T> {
    pub q: Matrix<T>,
    pub d_diag: Vec<T>,
    pub t_lower: Matrix<T>,
    /// |det M|^{1/d}; M/scale has unit covolume.
    pub scale: T,
    /// Set when det M < 0; the last generator was negated (same lattice) so that det Q = +1.
    pub reflected: bool,
}

impl<T: Scalar> IwasawaQDT<T> {
    /// scale · Q · diag · T, with the last column negated back when reflected.
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut m = self.q.matmul(&Matrix::diag(&self.d_diag)).matmul(&self.t_lower).scale(self.scale);
        if self.reflected {
            let n = m.dim();
            for i in 0..n {
                m[(i, n - 1)] = -m[(i, n - 1)];
            }
        }
        m
    }
}

/// M = scale · Q D T, orthogonalizing columns from last to first so that T is unit lower triangular.
pub fn iwasawa_qdt<T: Scalar>(m: &Matrix<T>) -> Result<IwasawaQDT<T>> {
    let n = m.dim();
    let det = m.det();
    if !(det.abs() > T::zero()) {
        return Err(ThetaError::Decomposition("singular matrix".into()));
    }
    let scale = det.abs().powf(T::one() / T::from_usize_lossy(n));
    let mut work = m.scale(T::one() / scale);
    let reflected = det < T::zero();
    if reflected {
        for i in 0..n {
            work[(i, n - 1)] = -work[(i, n - 1)];
        }
    }
    let cols = work.columns();
    let mut qcols: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut l = Matrix::zeros(n);
    for j in (0..n).rev() {
        let mut v = cols[j].clone();
        for _pass in 0..2 {
            for i in j + 1..n {
                let p = dot(&qcols[i], &v);
                l[(i, j)] += p;
                for (vk, &qk) in v.iter_mut().zip(&qcols[i]) {
                    *vk -= p * qk;
                }
            }
        }
        let nv = norm_sq(&v).sqrt();
        if !(nv > T::zero()) {
            return Err(ThetaError::Decomposition("columns are linearly dependent".into()));
        }
        l[(j, j)] = nv;
        qcols[j] = v.into_iter().map(|x| x / nv).collect();
    }
    let q = Matrix::from_columns(&qcols)?;
    let d_diag: Vec<T> = (0..n).map(|i| l[(i, i)]).collect();
    let mut t = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            t[(i, j)] = if i == j { T::one() } else { l[(i, j)] / d_diag[i] };
        }
    }
    Ok(IwasawaQDT { q, d_diag, t_lower: t, scale, reflected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shell<T> {
    pub sq_norm: T,
    /// Vectors p − center, sorted lexicographically.
    pub points: Vec<Vec<T>>,
    /// Integer coordinates of the lattice points p, in the same order.
    pub coefficients: Vec<Vec<i64>>,
}

const SHELL_RTOL: f64 = 1e-9;

pub(crate) fn group_shells<T: Scalar>(mut pts: Vec<(Vec<i64>, T, Vec<T>)>) -> Vec<Shell<T>> {
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
    let mut shells: Vec<Shell<T>> = Vec::new();
    for (z, n2, v) in pts {
        let same = shells
            .last()
            .map(|s| (n2 - s.sq_norm).abs() <= T::lit(SHELL_RTOL) * s.sq_norm.max(T::one()))
            .unwrap_or(false);
        if same {
            let s = shells.last_mut().unwrap();
            s.points.push(v);
            s.coefficients.push(z);
        } else {
            shells.push(Shell { sq_norm: n2, points: vec![v], coefficients: vec![z] });
        }
    }
    for s in &mut shells {
        let mut idx: Vec<usize> = (0..s.points.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(&s.points[a], &s.points[b]));
        s.points = idx.iter().map(|&i| s.points[i].clone()).collect();
        s.coefficients = idx.iter().map(|&i| s.coefficients[i].clone()).collect();
    }
    shells
}

/// The first `count` shells of {p − center : p ∈ L}.
pub fn enumerate_shells<T: Scalar>(l: &BravaisLattice<T>, center: &[T], count: usize) -> Result<Vec<Shell<T>>> {
    if count == 0 {
        return param("shell count must be at least 1");
    }
    let mut r2 = l.lambda_min() * T::from_usize_lossy(count);
    let c = l.coords(center)?;
    let shift: Vec<i64> = c.iter().map(|x| x.round().to_i64().unwrap_or(0)).collect();
    let shift_vec = l.point(&shift);
    let local: Vec<T> = center.iter().zip(&shift_vec).map(|(&a, &b)| a - b).collect();
    loop {
        // pad the radius so a shell sitting exactly on the boundary is never cut
        let pts = l.ball_points(&local, r2 * (T::one() + T::lit(1e-8)))?;
        let tagged = pts
            .into_iter()
            .map(|(z, n2)| {
                let p = l.point(&z);
                let v: Vec<T> = p.iter().zip(&local).map(|(&a, &b)| a - b).collect();
                let zz: Vec<i64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
                (zz, n2, v)
            })
            .collect();
        let mut shells = group_shells(tagged);
        shells.retain(|s| s.sq_norm <= r2);
        if shells.len() >= count {
            shells.truncate(count);
            return Ok(shells);
        }
        r2 *= T::lit(2.0);
    }
}

/// Lagrange–Gauss reduction of a planar basis.
pub fn reduce_2d<T: Scalar>(l: &BravaisLattice<T>) -> Result<BravaisLattice<T>> {
    if l.dim() != 2 {
        return param("reduce_2d needs a 2-dimensional lattice");
    }
    let g = l.generators();
    let (mut v1, mut v2) = (g[0].clone(), g[1].clone());
    let longer = |a: &[T], b: &[T]| norm_sq(a) > norm_sq(b) * (T::one() + T::lit(1e-12));
    for _ in 0..10_000 {
        if longer(&v1, &v2) {
            std::mem::swap(&mut v1, &mut v2);
        }
        let ratio = dot(&v1, &v2) / norm_sq(&v1);
        if ratio.abs() <= T::lit(0.5) * (T::one() + T::lit(1e-12)) {
            break;
        }
        let mu = ratio.round();
        v2 = vec![v2[0] - mu * v1[0], v2[1] - mu * v1[1]];
    }
    if longer(&v1, &v2) {
        std::mem::swap(&mut v1, &mut v2);
    }
    BravaisLattice::from_generators(&[v1, v2])
}

fn circumcenter<T: Scalar>(a: &[T], b: &[T], c: &[T]) -> Vec<T> {
    // clamp obtuse triangles to the midpoint of the longest edge
    let pts = [a, b, c];
    for i in 0..3 {
        let p = pts[i];
        let q = pts[(i + 1) % 3];
        let r = pts[(i + 2) % 3];
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        if dot(&u, &v) < T::zero() {
            let h = T::lit(0.5);
            return vec![(q[0] + r[0]) * h, (q[1] + r[1]) * h];
        }
    }
    let two = T::lit(2.0);
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let dd = two * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    vec![a[0] + (cy * b2 - by * c2) / dd, a[1] + (bx * c2 - cx * b2) / dd]
}

/// Points of the fundamental cell farthest from Λ, and that distance.
pub fn deep_holes_2d<T: Scalar>(l: &BravaisLattice<T>) -> Result<(Vec<Vec<T>>, T)> {
    if l.dim() != 2 {
        return param("deep holes are only computed in dimension 2");
    }
    let red = reduce_2d(l)?;
    let g = red.generators();
    let v1 = g[0].clone();
    let mut v2 = g[1].clone();
    if dot(&v1, &v2) > T::zero() {
        v2 = vec![-v2[0], -v2[1]];
    }
    let o = vec![T::zero(), T::zero()];
    let s = vec![v1[0] + v2[0], v1[1] + v2[1]];
    let cands = [circumcenter(&o, &v1, &s), circumcenter(&o, &v2, &s)];

    let mut holes: Vec<Vec<T>> = Vec::new();
    let mut dist = T::zero();
    for cc in cands.iter() {
        let nearest = enumerate_shells(l, cc, 1)?[0].sq_norm.sqrt();
        if nearest > dist * (T::one() + T::lit(1e-9)) {
            holes.clear();
            dist = nearest;
        } else if nearest < dist * (T::one() - T::lit(1e-9)) {
            continue;
        }
        let red_pt = l.reduce_to_cell(cc)?;
        let dup = holes.iter().any(|h| {
            let diff: Vec<T> = h.iter().zip(&red_pt).map(|(&a, &b)| a - b).collect();
            l.contains(&diff, T::lit(1e-9)).unwrap_or(false)
        });
        if !dup {
            holes.push(red_pt);
        }
    }
    holes.sort_by(|a, b| lex_cmp(&l.coords(a).unwrap(), &l.coords(b).unwrap()));
    Ok((holes, dist))
}
