//! Minimizing u ↦ θ_{Λ+u}(α) over translations.
//!
//! For small α the differences between translates sit far below double
//! precision relative to the value itself, so grid points are compared through
//! the dual expansion
//!
//!   θ_{Λ+u}(α) = (α^{d/2}|Λ|)⁻¹ (1 + Σ_k e^{-π r_k/α} S_k(u)),  S_k(u) = Σ_{ℓ∈C_k} cos(2π ℓ·u),
//!
//! shell by shell: the first shell where two points differ decides, with the
//! later shells added at their relative weights.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{param, Result, ThetaError};
use crate::lattice::{deep_holes_2d, dual, enumerate_shells, BravaisLattice};
use crate::scalar::Scalar;
use crate::theta_sum::{theta, theta_direct};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport<T> {
    /// Minimizers in lattice coordinates, each in [0,1)^d, sorted.
    pub minimizers: Vec<Vec<T>>,
    pub value: T,
    pub alpha: T,
    /// Final grid spacing in lattice coordinates.
    pub resolution: T,
}

const TIE_RTOL: f64 = 1e-12;
const SHELL_TOL: f64 = 1e-10;
const BASE_SHELLS: usize = 40;
pub const MAX_SURVIVORS: usize = 4096;

/// cos(2πr/n) for r in 0..n, with the reflection symmetries of the circle exact.
#[allow(clippy::needless_range_loop)]
fn cos_table<T: Scalar>(n: usize) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    let nn = T::from_usize_lossy(n);
    let mut c = vec![T::zero(); n];
    if n.is_multiple_of(4) {
        let q = n / 4;
        for r in 0..=q {
            // use sin near the quarter turn for accuracy
            c[r] = if 2 * r <= q {
                (two_pi * T::from_usize_lossy(r) / nn).cos()
            } else {
                (two_pi * T::from_usize_lossy(q - r) / nn).sin()
            };
        }
        c[q] = T::zero();
        for r in 1..q {
            c[2 * q - r] = -c[r];
        }
        c[2 * q] = -T::one();
        for r in 1..2 * q {
            c[n - r] = c[r];
        }
    } else {
        for r in 0..=n / 2 {
            c[r] = (two_pi * T::from_usize_lossy(r) / nn).cos();
        }
        for r in 1..=(n - 1) / 2 {
            c[n - r] = c[r];
        }
    }
    c
}

struct DualShells<T> {
    sq_norms: Vec<T>,
    coeffs: Vec<Vec<Vec<i64>>>,
}

impl<T: Scalar> DualShells<T> {
    /// Nonzero shells of Λ* up to the `base`-th, extended by `extra_r` in squared norm.
    fn new(l: &BravaisLattice<T>, base: usize, extra_r: T) -> Result<Self> {
        let ld = dual(l);
        let origin = vec![T::zero(); l.dim()];
        let first = enumerate_shells(&ld, &origin, base + 1)?;
        let r_last = first.last().map(|s| s.sq_norm).unwrap_or(T::zero());
        let want = r_last + extra_r;
        let mut count = base + 1;
        let mut shells = first;
        while shells.last().map(|s| s.sq_norm).unwrap_or(T::zero()) < want {
            count *= 2;
            shells = enumerate_shells(&ld, &origin, count)?;
        }
        shells.retain(|s| s.sq_norm > T::zero() && s.sq_norm <= want);
        Ok(Self {
            sq_norms: shells.iter().map(|s| s.sq_norm).collect(),
            coeffs: shells.into_iter().map(|s| s.coefficients).collect(),
        })
    }

    fn len(&self) -> usize {
        self.sq_norms.len()
    }

    fn sum(&self, k: usize, table: &[T], n: i64, j: &[i64]) -> T {
        self.coeffs[k].iter().fold(T::zero(), |acc, m| {
            let phase = m.iter().zip(j).fold(0i64, |a, (&mi, &ji)| (a + mi * ji).rem_euclid(n));
            acc + table[phase as usize]
        })
    }

    fn sums(&self, table: &[T], n: i64, j: &[i64]) -> Vec<T> {
        (0..self.len()).map(|k| self.sum(k, table, n, j)).collect()
    }

    fn cmp(&self, a: &[T], b: &[T], alpha: T) -> Ordering {
        let tol = T::lit(SHELL_TOL);
        let Some(k0) = (0..self.len())
            .find(|&k| (a[k] - b[k]).abs() > tol * T::from_usize_lossy(self.coeffs[k].len()))
        else {
            return Ordering::Equal;
        };
        let r0 = self.sq_norms[k0];
        let d = (k0..self.len()).fold(T::zero(), |acc, k| {
            acc + (-T::PI() * (self.sq_norms[k] - r0) / alpha).exp() * (a[k] - b[k])
        });
        d.partial_cmp(&T::zero()).unwrap_or(Ordering::Equal)
    }
}

enum Scorer<'a, T> {
    Direct { l: &'a BravaisLattice<T>, alpha: T },
    Shells { shells: DualShells<T>, alpha: T },
}

#[derive(Clone)]
enum Score<T> {
    Value(T),
    Sums(Vec<T>),
}

impl<T: Scalar> Scorer<'_, T> {
    fn score(&self, j: &[i64], n: i64, table: &[T]) -> Result<Score<T>> {
        match self {
            Scorer::Direct { l, alpha } => {
                let c: Vec<T> = j.iter().map(|&x| T::from_i64_lossy(x) / T::from_i64_lossy(n)).collect();
                let u = l.from_coords(&c);
                Ok(Score::Value(theta_direct(l, &u, *alpha, T::lit(1e-14).max(T::epsilon() * T::lit(8.0)))?.value))
            }
            Scorer::Shells { shells, .. } => Ok(Score::Sums(shells.sums(table, n, j))),
        }
    }

    fn cmp(&self, a: &Score<T>, b: &Score<T>) -> Ordering {
        match (self, a, b) {
            (Scorer::Direct { .. }, Score::Value(x), Score::Value(y)) => {
                if (*x - *y).abs() <= T::lit(TIE_RTOL) * x.abs().max(y.abs()) {
                    Ordering::Equal
                } else {
                    x.partial_cmp(y).unwrap_or(Ordering::Equal)
                }
            }
            (Scorer::Shells { shells, alpha }, Score::Sums(x), Score::Sums(y)) => shells.cmp(x, y, *alpha),
            _ => unreachable!("scores come from one scorer"),
        }
    }
}

/// Grid points tied for the minimum, scanning candidates in order.
fn min_set<T: Scalar>(
    scorer: &Scorer<'_, T>,
    cands: impl Iterator<Item = Vec<i64>>,
    n: i64,
    table: &[T],
) -> Result<Vec<Vec<i64>>> {
    let mut best: Option<Score<T>> = None;
    let mut ties: Vec<(Vec<i64>, Score<T>)> = Vec::new();
    for j in cands {
        let s = scorer.score(&j, n, table)?;
        match &best {
            None => {
                best = Some(s.clone());
                ties.push((j, s));
            }
            Some(b) => match scorer.cmp(&s, b) {
                Ordering::Less => {
                    ties.retain(|(_, t)| scorer.cmp(t, &s) == Ordering::Equal);
                    best = Some(s.clone());
                    ties.push((j, s));
                }
                Ordering::Equal => ties.push((j, s)),
                Ordering::Greater => {}
            },
        }
    }
    let best = best.ok_or_else(|| ThetaError::Internal("empty candidate set".into()))?;
    let mut out: Vec<Vec<i64>> =
        ties.into_iter().filter(|(_, t)| scorer.cmp(t, &best) == Ordering::Equal).map(|(j, _)| j).collect();
    out.sort();
    Ok(out)
}

fn full_grid(d: usize, n: i64) -> impl Iterator<Item = Vec<i64>> {
    let total = (n as u64).pow(d as u32);
    (0..total).map(move |mut idx| {
        let mut j = vec![0i64; d];
        for x in j.iter_mut().rev() {
            *x = (idx % n as u64) as i64;
            idx /= n as u64;
        }
        j
    })
}

/// Points of the ×`factor` grid within one coarse cell of each survivor.
fn refine_neighbourhood(survivors: &[Vec<i64>], n: i64, factor: i64) -> BTreeSet<Vec<i64>> {
    let nf = n * factor;
    let mut out = BTreeSet::new();
    for s in survivors {
        let d = s.len();
        let span = 2 * factor + 1;
        let total = (span as u64).pow(d as u32);
        for mut idx in 0..total {
            let mut j = vec![0i64; d];
            for (i, x) in j.iter_mut().enumerate() {
                let off = (idx % span as u64) as i64 - factor;
                idx /= span as u64;
                *x = (s[i] * factor + off).rem_euclid(nf);
            }
            out.insert(j);
        }
    }
    out
}

fn to_coords<T: Scalar>(j: &[i64], n: i64) -> Vec<T> {
    j.iter().map(|&x| T::from_i64_lossy(x) / T::from_i64_lossy(n)).collect()
}

/// Grid minimizers of u ↦ θ_{Λ+u}(α) over the fundamental cell, each refined
/// ×4 per round inside its coarse neighbourhood.
pub fn argmin_shift_grid<T: Scalar>(
    l: &BravaisLattice<T>,
    alpha: T,
    grid_n: usize,
    refine_rounds: usize,
) -> Result<MinimizerReport<T>> {
    if grid_n < 8 {
        return param(format!("grid_n must be at least 8, got {grid_n}"));
    }
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    let d = l.dim();
    let scorer = if alpha * l.lambda_min() >= T::one() {
        Scorer::Direct { l, alpha }
    } else {
        let extra = T::lit(40.0) * alpha / T::PI();
        Scorer::Shells { shells: DualShells::new(l, BASE_SHELLS, extra)?, alpha }
    };
    let mut n = grid_n as i64;
    if (n as u64).checked_pow(d as u32).is_none_or(|t| t > 50_000_000) {
        return Err(ThetaError::SearchSpace(format!("grid {grid_n}^{d} is too large")));
    }
    let table = cos_table::<T>(n as usize);
    let mut survivors = min_set(&scorer, full_grid(d, n), n, &table)?;
    for _ in 0..refine_rounds {
        if survivors.len() > MAX_SURVIVORS {
            return Err(ThetaError::SearchSpace(format!("{} tied grid points; refine a coarser grid", survivors.len())));
        }
        let cands = refine_neighbourhood(&survivors, n, 4);
        n *= 4;
        let table = cos_table::<T>(n as usize);
        survivors = min_set(&scorer, cands.into_iter(), n, &table)?;
    }
    let minimizers: Vec<Vec<T>> = survivors.iter().map(|j| to_coords(j, n)).collect();
    let u = l.from_coords(&minimizers[0]);
    let value = theta(l, &u, alpha, T::lit(T::DEFAULT_RTOL))?.value;
    Ok(MinimizerReport { minimizers, value, alpha, resolution: T::one() / T::from_i64_lossy(n) })
}

/// Smallest α on a 50-point log grid over [10⁻², alpha_hi] from which
/// θ_{Λ+c}(α) ≤ θ_{Λ+x}(α) holds at every later grid point, c a deep hole.
pub fn deep_hole_crossing<T: Scalar>(l: &BravaisLattice<T>, x: &[T], alpha_hi: T) -> Result<Option<T>> {
    let (holes, _) = deep_holes_2d(l)?;
    if x.len() != 2 {
        return param("x must be a 2-vector");
    }
    for h in &holes {
        let diff: Vec<T> = h.iter().zip(x).map(|(&a, &b)| a - b).collect();
        if l.contains(&diff, T::lit(1e-9))? {
            return Err(ThetaError::Refused("x is a deep hole; the inequality is an identity".into()));
        }
    }
    let lo = T::lit(1e-2);
    if !(alpha_hi > lo) {
        return param("alpha_hi must exceed 0.01");
    }
    let rt = T::lit(T::DEFAULT_RTOL);
    let npts = 50;
    let ratio = (alpha_hi / lo).ln() / T::from_usize_lossy(npts - 1);
    let mut holds = Vec::with_capacity(npts);
    let mut alphas = Vec::with_capacity(npts);
    for i in 0..npts {
        let a = lo * (ratio * T::from_usize_lossy(i)).exp();
        let tc = theta(l, &holes[0], a, rt)?.value;
        let tx = theta(l, x, a, rt)?.value;
        alphas.push(a);
        holds.push(tc <= tx);
    }
    let mut first = None;
    for i in (0..npts).rev() {
        if holds[i] {
            first = Some(alphas[i]);
        } else {
            break;
        }
    }
    Ok(first)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    Triangular,
    RhombicC1Four,
    GenericC2Small,
    GenericQuarter,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::Triangular => "triangular",
            CaseLabel::RhombicC1Four => "rhombic_C1_4",
            CaseLabel::GenericC2Small => "generic_C2_small",
            CaseLabel::GenericQuarter => "generic_quarter",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult<T> {
    pub case_label: CaseLabel,
    /// Asymptotic minimizers in lattice coordinates, in [0,1)².
    pub c: Vec<Vec<T>>,
    /// Index of the dual shell whose sum last shrank the candidate set (C₁ = 1).
    pub deciding_shell: usize,
    pub c1_size: usize,
    pub c2_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecidingLayerReport<T> {
    /// Last shell index that changed the survivors.
    pub layer_index: usize,
    /// Survivors on the coarse grid after each shell, in lattice coordinates.
    pub survivor_sets: Vec<Vec<Vec<T>>>,
    /// Survivors after refinement.
    pub survivors: Vec<Vec<T>>,
    pub resolution: T,
}

fn isolated(points: &[Vec<i64>], n: i64) -> bool {
    let near = |a: i64, b: i64| {
        let d = (a - b).rem_euclid(n);
        d <= 1 || d >= n - 1
    };
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if a.iter().zip(b).all(|(&x, &y)| near(x, y)) {
                return false;
            }
        }
    }
    true
}

struct Elimination {
    per_layer: Vec<Vec<Vec<i64>>>,
    deciding: usize,
}

/// Keeps, shell after shell, the candidates minimizing that shell's cosine sum.
fn eliminate<T: Scalar>(shells: &DualShells<T>, cands: Vec<Vec<i64>>, n: i64, max_layers: usize) -> Elimination {
    let table = cos_table::<T>(n as usize);
    let tol = T::lit(SHELL_TOL);
    let mut current = cands;
    let mut per_layer = Vec::new();
    let mut deciding = 1;
    let mut unchanged_run = 0;
    for k in 0..max_layers.min(shells.len()) {
        let sums: Vec<T> = current.iter().map(|j| shells.sum(k, &table, n, j)).collect();
        let m = sums.iter().cloned().fold(T::infinity(), T::min);
        let width = tol * T::from_usize_lossy(shells.coeffs[k].len());
        let next: Vec<Vec<i64>> =
            current.iter().zip(&sums).filter(|(_, &s)| s <= m + width).map(|(j, _)| j.clone()).collect();
        if next.len() != current.len() {
            deciding = k + 1;
            unchanged_run = 0;
        } else {
            unchanged_run += 1;
        }
        current = next;
        per_layer.push(current.clone());
        if unchanged_run >= 2 && isolated(&current, n) {
            break;
        }
    }
    Elimination { per_layer, deciding }
}

/// Successive restriction of the translation grid by the dual shells C₁, C₂, ….
///
/// Stops once the survivors are isolated points that two further shells left
/// unchanged, or after `max_layers` shells; the survivors are then refined
/// twice (×4) inside their coarse neighbourhoods.
pub fn deciding_layer_2d<T: Scalar>(l: &BravaisLattice<T>, max_layers: usize, grid_n: usize) -> Result<DecidingLayerReport<T>> {
    deciding_layer_impl(l, max_layers, grid_n, 2)
}

fn deciding_layer_impl<T: Scalar>(
    l: &BravaisLattice<T>,
    max_layers: usize,
    grid_n: usize,
    refine_rounds: usize,
) -> Result<DecidingLayerReport<T>> {
    if l.dim() != 2 {
        return param("deciding_layer_2d needs a 2-dimensional lattice");
    }
    if max_layers == 0 {
        return param("max_layers must be at least 1");
    }
    if grid_n < 4 {
        return param("grid_n must be at least 4");
    }
    let shells = DualShells::new(l, max_layers, T::zero())?;
    let mut n = grid_n as i64;
    let coarse = eliminate(&shells, full_grid(2, n).collect(), n, max_layers);
    let mut survivors = coarse.per_layer.last().cloned().unwrap_or_default();
    for _ in 0..refine_rounds {
        if survivors.len() > MAX_SURVIVORS {
            break;
        }
        let cands: Vec<Vec<i64>> = refine_neighbourhood(&survivors, n, 4).into_iter().collect();
        n *= 4;
        survivors = eliminate(&shells, cands, n, max_layers).per_layer.pop().unwrap_or_default();
    }
    let cn = grid_n as i64;
    Ok(DecidingLayerReport {
        layer_index: coarse.deciding,
        survivor_sets: coarse.per_layer.iter().map(|s| s.iter().map(|j| to_coords(j, cn)).collect()).collect(),
        survivors: survivors.iter().map(|j| to_coords(j, n)).collect(),
        resolution: T::one() / T::from_i64_lossy(n),
    })
}

/// Grid on which the elimination runs exactly: it contains every third and quarter point.
const CLASSIFY_GRID: usize = 48;
const CLASSIFY_LAYERS: usize = 40;

/// Asymptotic minimizers of u ↦ θ_{Λ+u}(α) as α → 0 for a planar lattice.
pub fn classify_asymptotic_2d<T: Scalar>(l: &BravaisLattice<T>) -> Result<ClassificationResult<T>> {
    if l.dim() != 2 {
        return param("classification needs a 2-dimensional lattice");
    }
    let ld = dual(l);
    let shells = enumerate_shells(&ld, &[T::zero(), T::zero()], 3)?;
    let c1 = shells[1].points.len();
    let c2 = shells[2].points.len();
    let rep = deciding_layer_impl(l, CLASSIFY_LAYERS, CLASSIFY_GRID, 0)?;
    let mut c = rep.survivors.clone();
    let label = match c1 {
        6 => {
            // the two barycentres are exchanged by u ↦ −u; report one
            c.truncate(1);
            CaseLabel::Triangular
        }
        4 => CaseLabel::RhombicC1Four,
        2 => match c.len() {
            1 => CaseLabel::GenericC2Small,
            2 => CaseLabel::GenericQuarter,
            k => return Err(ThetaError::Internal(format!("{k} asymptotic minimizers for a lattice with |C1| = 2"))),
        },
        k => return Err(ThetaError::Internal(format!("first dual shell has {k} points"))),
    };
    Ok(ClassificationResult { case_label: label, c, deciding_shell: rep.layer_index, c1_size: c1, c2_size: c2 })
}

/// Distance between two points of the torus [0,1)^d in the sup norm.
pub fn torus_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| {
        let d = (x - y).abs();
        m.max(d.min(T::one() - d))
    })
}

/// Cartesian distance from u to the nearest point of v + Λ.
pub fn distance_mod_lattice<T: Scalar>(l: &BravaisLattice<T>, u: &[T], v: &[T]) -> Result<T> {
    let diff: Vec<T> = u.iter().zip(v).map(|(&a, &b)| a - b).collect();
    Ok(enumerate_shells(l, &diff, 1)?[0].sq_norm.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_preset, Preset};

    #[test]
    fn cos_table_is_symmetric() {
        let t = cos_table::<f64>(48);
        for r in 1..48 {
            assert_eq!(t[r], t[48 - r]);
        }
        for r in 0..24 {
            assert_eq!(t[r + 24], -t[r]);
        }
        assert!((t[8] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_grid_minimum_is_center() {
        let z2 = make_preset::<f64>(Preset::Zd, &[2.0]).unwrap();
        let r = argmin_shift_grid(&z2, 1.0, 16, 1).unwrap();
        assert_eq!(r.minimizers, vec![vec![0.5, 0.5]]);
        let r = argmin_shift_grid(&z2, 0.05, 16, 0).unwrap();
        assert_eq!(r.minimizers, vec![vec![0.5, 0.5]]);
    }

    #[test]
    fn deciding_layer_square() {
        let z2 = make_preset::<f64>(Preset::Zd, &[2.0]).unwrap();
        let r = deciding_layer_2d(&z2, 10, 16).unwrap();
        assert_eq!(r.layer_index, 1);
        assert_eq!(r.survivors, vec![vec![0.5, 0.5]]);
    }

    #[test]
    fn classification_of_square_and_triangle() {
        let z2 = make_preset::<f64>(Preset::Zd, &[2.0]).unwrap();
        let c = classify_asymptotic_2d(&z2).unwrap();
        assert_eq!(c.case_label, CaseLabel::RhombicC1Four);
        assert_eq!(c.c, vec![vec![0.5, 0.5]]);
        let a2 = make_preset::<f64>(Preset::A2, &[1.0]).unwrap();
        let c = classify_asymptotic_2d(&a2).unwrap();
        assert_eq!(c.case_label, CaseLabel::Triangular);
        assert_eq!(c.c.len(), 1);
        assert!(torus_distance(&c.c[0], &[1.0 / 3.0, 1.0 / 3.0]) < 1e-12);
    }

    #[test]
    fn deep_hole_crossing_examples() {
        let z2 = make_preset::<f64>(Preset::Zd, &[2.0]).unwrap();
        let a = deep_hole_crossing(&z2, &[0.3, 0.3], 20.0).unwrap();
        assert!(a.is_some());
        assert!(deep_hole_crossing(&z2, &[0.5, 0.5], 20.0).is_err());
    }
}
