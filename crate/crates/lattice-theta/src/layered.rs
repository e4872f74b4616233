//! Periodic stackings of a (d−1)-dimensional lattice.
//!
//! Layer k sits at height k·t and is the base lattice translated by s(k) ∈ H,
//! the whole horizontal picture scaled by ℓ:
//!
//!   Λ_{s,t,ℓ} = ⋃_k { (ℓ(p + s(k)), k t) : p ∈ Λ₀ }.

use std::collections::{BTreeSet, HashMap};
use std::str::FromStr;

use crate::error::{param, Result, ThetaError};
use crate::lattice::{l_bcc, l_fcc, make_preset, t_bcc, t_fcc, BravaisLattice, Preset};
use crate::linalg::norm_sq;
use crate::scalar::Scalar;
use crate::theta_sum::{theta, theta_shift_difference, Method, ThetaResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftAlphabet<T> {
    vectors: Vec<Vec<T>>,
}

impl<T: Scalar> ShiftAlphabet<T> {
    pub fn new(vectors: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return param("shift alphabet must be non-empty");
        };
        let dim = first.len();
        if vectors.iter().any(|v| v.len() != dim) {
            return param("shift vectors must share one dimension");
        }
        let tol = T::lit(1e-12);
        for i in 0..vectors.len() {
            for j in 0..i {
                if vectors[i].iter().zip(&vectors[j]).all(|(&a, &b)| (a - b).abs() <= tol) {
                    return param(format!("shift vectors {j} and {i} coincide"));
                }
            }
        }
        Ok(Self { vectors })
    }

    /// H = {a, b, c}: the origin and the two triangle barycentres of A₂ with side 1.
    pub fn triangular() -> Self {
        let h = T::lit(0.5);
        let r3 = T::lit(3.0).sqrt();
        Self { vectors: vec![vec![T::zero(), T::zero()], vec![h, h / r3], vec![T::zero(), T::one() / r3]] }
    }

    /// H = {(0,0), (½,½)} over ℤ².
    pub fn square_center() -> Self {
        let h = T::lit(0.5);
        Self { vectors: vec![vec![T::zero(), T::zero()], vec![h, h]] }
    }

    pub fn dim_base(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftSequence {
    indices: Vec<usize>,
}

impl ShiftSequence {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return param("shift sequence needs period at least 1");
        }
        Ok(Self { indices })
    }

    pub fn period(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// s(k) for any integer k.
    pub fn at(&self, k: i64) -> usize {
        self.indices[k.rem_euclid(self.period() as i64) as usize]
    }

    /// The same map written with period `times · P`.
    pub fn repeated(&self, times: usize) -> Self {
        Self { indices: self.indices.repeat(times.max(1)) }
    }

    /// Smallest representative under cyclic shift and relabelling of the alphabet.
    pub fn canonical(&self) -> Self {
        let p = self.period();
        (0..p)
            .map(|r| {
                let mut map: HashMap<usize, usize> = HashMap::new();
                let indices = (0..p)
                    .map(|i| {
                        let v = self.indices[(i + r) % p];
                        let next = map.len();
                        *map.entry(v).or_insert(next)
                    })
                    .collect();
                Self { indices }
            })
            .min()
            .expect("period is positive")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredConfig<T> {
    pub base: BravaisLattice<T>,
    pub alphabet: ShiftAlphabet<T>,
    pub sequence: ShiftSequence,
    pub spacing_t: T,
    pub scale_l: T,
}

impl<T: Scalar> LayeredConfig<T> {
    pub fn new(
        base: BravaisLattice<T>,
        alphabet: ShiftAlphabet<T>,
        sequence: ShiftSequence,
        spacing_t: T,
        scale_l: T,
    ) -> Result<Self> {
        if alphabet.dim_base() != base.dim() {
            return param("shift vectors must live in the base lattice's space");
        }
        if sequence.indices().iter().any(|&i| i >= alphabet.len()) {
            return param("shift sequence index outside the alphabet");
        }
        if !(spacing_t > T::zero()) || !(scale_l > T::zero()) {
            return param("spacing and scale must be positive");
        }
        Ok(Self { base, alphabet, sequence, spacing_t, scale_l })
    }

    /// Volume per point, t·ℓ^{d−1}·|Λ₀|.
    pub fn cell_volume(&self) -> T {
        self.spacing_t * self.scale_l.powi(self.base.dim() as i32) * self.base.covolume()
    }

    /// The stacking as a Bravais lattice when consecutive shifts differ by a
    /// constant modulo Λ₀.
    pub fn as_bravais(&self) -> Option<BravaisLattice<T>> {
        let h = &self.alphabet.vectors;
        let step = |k: i64| -> Vec<T> {
            let a = &h[self.sequence.at(k + 1)];
            let b = &h[self.sequence.at(k)];
            a.iter().zip(b).map(|(&x, &y)| x - y).collect()
        };
        let s0 = step(0);
        for k in 1..self.sequence.period() as i64 {
            let diff: Vec<T> = step(k).iter().zip(&s0).map(|(&a, &b)| a - b).collect();
            if !self.base.contains(&diff, T::lit(1e-9)).ok()? {
                return None;
            }
        }
        let d = self.base.dim();
        let mut gens: Vec<Vec<T>> = self
            .base
            .generators()
            .into_iter()
            .map(|g| {
                let mut v: Vec<T> = g.iter().map(|&x| x * self.scale_l).collect();
                v.push(T::zero());
                v
            })
            .collect();
        let mut last: Vec<T> = s0.iter().map(|&x| x * self.scale_l).collect();
        last.push(self.spacing_t);
        gens.push(last);
        debug_assert_eq!(gens.len(), d + 1);
        BravaisLattice::from_generators(&gens).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayeredPreset {
    Fcc,
    Bcc,
    Hcp,
}

impl FromStr for LayeredPreset {
    type Err = ThetaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fcc" => Ok(Self::Fcc),
            "bcc" => Ok(Self::Bcc),
            "hcp" => Ok(Self::Hcp),
            _ => param(format!("unknown layered preset '{s}'")),
        }
    }
}

/// FCC and BCC as the ABC stacking of A₂, HCP as the AB stacking.
///
/// Without `unit_density` the in-layer scale is 1 and only the ratio ℓ/t is fixed
/// (√3/√2 for FCC and HCP, 2√6 for BCC).
pub fn preset_layered<T: Scalar>(name: LayeredPreset, unit_density: bool) -> LayeredConfig<T> {
    let base = make_preset(Preset::A2, &[T::one()]).expect("A2 with unit side");
    let (sequence, t, l) = match name {
        LayeredPreset::Fcc | LayeredPreset::Hcp => {
            let seq = if name == LayeredPreset::Fcc { vec![0, 1, 2] } else { vec![0, 1] };
            if unit_density {
                (seq, t_fcc(), l_fcc())
            } else {
                (seq, T::lit(2.0f64.sqrt() / 3f64.sqrt()), T::one())
            }
        }
        LayeredPreset::Bcc => {
            if unit_density {
                (vec![0, 1, 2], t_bcc(), l_bcc())
            } else {
                (vec![0, 1, 2], T::one() / T::lit(2.0 * 6f64.sqrt()), T::one())
            }
        }
    };
    LayeredConfig {
        base,
        alphabet: ShiftAlphabet::triangular(),
        sequence: ShiftSequence { indices: sequence },
        spacing_t: t,
        scale_l: l,
    }
}

/// Theta energy per point of the stacking,
/// (1/P) Σ_h Σ_k e^{−πα(h−k)²t²} θ_{ℓ(Λ₀ + s(h) − s(k))}(α).
pub fn layered_theta<T: Scalar>(config: &LayeredConfig<T>, alpha: T, rtol: T) -> Result<ThetaResult<T>> {
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    if !(rtol > T::zero()) {
        return param("rtol must be positive");
    }
    let p = config.sequence.period();
    let t = config.spacing_t;
    let l = config.scale_l;
    let pi = T::PI();
    let eps = (rtol * T::lit(0.1)).to_f64_lossy();
    let at2 = (pi * alpha * t * t).to_f64_lossy();
    let jmax = ((1.0 / eps).ln() / at2).sqrt().ceil() as i64 + p as i64;

    let scaled = config.base.scaled(l);
    let h = config.alphabet.vectors();
    let inner_rtol = rtol * T::lit(0.5);
    let mut cache: HashMap<(usize, usize), ThetaResult<T>> = HashMap::new();
    let mut get = |a: usize, b: usize| -> Result<ThetaResult<T>> {
        if let Some(r) = cache.get(&(a, b)) {
            return Ok(*r);
        }
        let delta: Vec<T> = h[a].iter().zip(&h[b]).map(|(&x, &y)| l * (x - y)).collect();
        let r = theta(&scaled, &delta, alpha, inner_rtol)?;
        cache.insert((a, b), r);
        Ok(r)
    };

    let mut value = T::zero();
    let mut err = T::zero();
    let mut points = 0usize;
    for hh in 0..p as i64 {
        for j in -jmax..=jmax {
            let w = (-pi * alpha * T::from_i64_lossy(j * j) * t * t).exp();
            let r = get(config.sequence.at(hh), config.sequence.at(hh + j))?;
            value += w * r.value;
            err += w * r.abs_error;
            points += r.points_summed;
        }
    }
    // remaining layers: each translated sum is at most θ_{ℓΛ₀}(α)
    let top = get(0, 0)?;
    let q = T::lit((-at2 * (2 * jmax + 3) as f64).exp());
    let first = T::lit((-at2 * ((jmax + 1) * (jmax + 1)) as f64).exp());
    let tail = T::lit(2.0) * first / (T::one() - q) * (top.value + top.abs_error) * T::from_usize_lossy(p);
    let pf = T::from_usize_lossy(p);
    Ok(ThetaResult {
        value: value / pf,
        abs_error: (err + tail) / pf + T::lit(4.0) * T::epsilon() * value / pf,
        method: top.method,
        points_summed: points,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Translation classes δ + Λ₀ of shift differences, identified up to δ ↦ −δ
/// (θ_{Λ₀+δ} = θ_{Λ₀−δ} since Λ₀ = −Λ₀).
struct ShiftClasses<T> {
    reps: Vec<Vec<T>>,
    of_pair: Vec<Vec<usize>>,
}

impl<T: Scalar> ShiftClasses<T> {
    fn new(base: &BravaisLattice<T>, h: &[Vec<T>]) -> Result<Self> {
        let tol = T::lit(1e-9);
        let near = |a: &[T], b: &[T]| {
            a.iter().zip(b).all(|(&x, &y)| {
                let d = (x - y).abs();
                d.min(T::one() - d) <= tol
            })
        };
        let mut reps: Vec<Vec<T>> = Vec::new();
        let mut of_pair = vec![vec![0; h.len()]; h.len()];
        for (a, ha) in h.iter().enumerate() {
            for (b, hb) in h.iter().enumerate() {
                let delta: Vec<T> = ha.iter().zip(hb).map(|(&x, &y)| x - y).collect();
                let c = base.cell_coords(&delta)?;
                let neg: Vec<T> = base.cell_coords(&delta.iter().map(|&x| -x).collect::<Vec<_>>())?;
                of_pair[a][b] = match reps.iter().position(|r| near(r, &c) || near(r, &neg)) {
                    Some(i) => i,
                    None => {
                        reps.push(c);
                        reps.len() - 1
                    }
                };
            }
        }
        Ok(Self { reps, of_pair })
    }
}

/// θ of `b` minus θ of `a` for two stackings sharing base, alphabet, t and ℓ.
///
/// Layer pairs are grouped by translation class so that equal contributions
/// cancel exactly; the error bound is relative to the difference itself, which
/// can lie far below the rounding level of either energy.
pub fn layered_theta_difference<T: Scalar>(
    a: &LayeredConfig<T>,
    b: &LayeredConfig<T>,
    alpha: T,
    rtol: T,
) -> Result<ThetaResult<T>> {
    if !(alpha > T::zero()) || !(rtol > T::zero()) {
        return param("alpha and rtol must be positive");
    }
    if a.base != b.base || a.alphabet != b.alphabet || a.spacing_t != b.spacing_t || a.scale_l != b.scale_l {
        return param("stackings must share base lattice, alphabet, spacing and scale");
    }
    let (pa, pb) = (a.sequence.period(), b.sequence.period());
    let p = pa / gcd(pa, pb) * pb;
    let classes = ShiftClasses::new(&a.base, a.alphabet.vectors())?;
    let scaled = a.base.scaled(a.scale_l);
    // per-pair counts of both stackings agree in total, so only differences
    // against one reference class enter
    let reference = scaled.from_coords(&classes.reps[0]);
    let mut diffs = Vec::with_capacity(classes.reps.len());
    for r in &classes.reps {
        let delta = scaled.from_coords(r);
        diffs.push(theta_shift_difference(&scaled, &delta, &reference, alpha, rtol * T::lit(0.1))?);
    }
    let method = diffs.last().map_or(Method::Direct, |d| d.method);
    let dmax = diffs.iter().fold(T::zero(), |m, d| m.max(d.value.abs() + d.abs_error));
    let pi = T::PI();
    let at2 = pi * alpha * a.spacing_t * a.spacing_t;
    let pf = T::from_usize_lossy(p);
    let mut value = T::zero();
    let mut err = T::zero();
    let points: usize = diffs.iter().map(|v| v.points_summed).sum();
    let mut counts = vec![0i64; diffs.len()];
    let mut jmax: i64 = -1;
    loop {
        let next = [jmax + 1, -(jmax + 1)];
        for &j in next.iter().take(if jmax < 0 { 1 } else { 2 }) {
            counts.iter_mut().for_each(|c| *c = 0);
            for h in 0..p as i64 {
                counts[classes.of_pair[b.sequence.at(h)][b.sequence.at(h + j)]] += 1;
                counts[classes.of_pair[a.sequence.at(h)][a.sequence.at(h + j)]] -= 1;
            }
            if counts.iter().all(|&c| c == 0) {
                continue;
            }
            let w = (-at2 * T::from_i64_lossy(j * j)).exp();
            let mut term = T::zero();
            let mut term_err = T::zero();
            for (c, v) in counts.iter().zip(&diffs) {
                let cf = T::from_i64_lossy(*c);
                term += cf * v.value;
                term_err += cf.abs() * (v.abs_error + T::lit(4.0) * T::epsilon() * v.value.abs());
            }
            value += w * term;
            err += w * term_err;
        }
        jmax += 1;
        if dmax == T::zero() {
            break;
        }
        // |contribution of layer offset ±j| ≤ 2·2P·max_c|D_c|·e^{−παt²j²}
        let k = T::from_i64_lossy(jmax + 1);
        let q = (-at2 * (T::lit(2.0) * k + T::one())).exp();
        let log_tail = -at2 * k * k + (T::lit(4.0) * pf * dmax / (T::one() - q)).ln();
        let target = rtol * value.abs();
        if jmax >= p as i64 && target > T::zero() && log_tail <= target.ln() {
            err += log_tail.exp();
            break;
        }
        if jmax > 100_000 || (log_tail < T::ln_min_positive() && jmax >= p as i64) {
            err += log_tail.exp();
            break;
        }
    }
    Ok(ThetaResult { value: value / pf, abs_error: err / pf, method, points_summed: points })
}

/// Finite-radius necessary condition for "Λ₀ has the same symmetries as H":
/// for all ordered pairs x ≠ y in H the distance spectra of Λ₀ + x − y agree.
pub fn same_symmetries_check<T: Scalar>(base: &BravaisLattice<T>, alphabet: &ShiftAlphabet<T>, radius: T) -> Result<bool> {
    if alphabet.dim_base() != base.dim() {
        return param("alphabet and base lattice dimensions differ");
    }
    let h = alphabet.vectors();
    let mut hmax = T::zero();
    let mut diam = T::zero();
    for a in h {
        hmax = hmax.max(norm_sq(a).sqrt());
        for b in h {
            let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
            diam = diam.max(norm_sq(&d).sqrt());
        }
    }
    if !(radius > T::lit(2.0) * hmax) || !(radius > diam) {
        return Err(ThetaError::Refused(format!("radius {radius} too small for this alphabet")));
    }
    let keep = radius - diam;
    let keep2 = keep * keep;
    let mut reference: Option<Vec<T>> = None;
    for (i, x) in h.iter().enumerate() {
        for (j, y) in h.iter().enumerate() {
            if i == j {
                continue;
            }
            let center: Vec<T> = x.iter().zip(y).map(|(&a, &b)| b - a).collect();
            let mut dists: Vec<T> = base.ball_points(&center, keep2)?.into_iter().map(|(_, n2)| n2).collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            match &reference {
                None => reference = Some(dists),
                Some(r) => {
                    if r.len() != dists.len() {
                        return Ok(false);
                    }
                    let tol = T::lit(1e-9);
                    if r.iter().zip(&dists).any(|(&a, &b)| (a - b).abs() > tol * T::one().max(a)) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// m_k(s): fraction of pairs (h, ±) with s(h ± k) ≠ s(h), for stacking index lattice τℤ.
pub fn mismatch_fraction(sequence: &ShiftSequence, k: usize) -> Result<f64> {
    if k == 0 {
        return param("k must be at least 1");
    }
    let p = sequence.period() as i64;
    let k = k as i64;
    let count = (0..p)
        .map(|h| {
            let s = sequence.at(h);
            (sequence.at(h + k) != s) as usize + (sequence.at(h - k) != s) as usize
        })
        .sum::<usize>();
    Ok(count as f64 / (2 * p) as f64)
}

pub const GREEDY_SEARCH_LIMIT: u64 = 10_000_000;

/// Sequences of the given period that maximize m₁, then m₂ among those, and so
/// on for `depth` rounds; reported once per class under cyclic shift and
/// alphabet relabelling, in ascending order.
pub fn greedy_a_conditions(alphabet_size: usize, period: usize, depth: usize) -> Result<Vec<ShiftSequence>> {
    if alphabet_size == 0 || period == 0 {
        return param("alphabet size and period must be positive");
    }
    let total = (alphabet_size as u64).checked_pow(period as u32).filter(|&n| n <= GREEDY_SEARCH_LIMIT);
    let Some(total) = total else {
        return Err(ThetaError::SearchSpace(format!(
            "{alphabet_size}^{period} sequences exceed the limit of {GREEDY_SEARCH_LIMIT}"
        )));
    };
    let mut classes: BTreeSet<ShiftSequence> = BTreeSet::new();
    let mut digits = vec![0usize; period];
    for _ in 0..total {
        classes.insert(ShiftSequence { indices: digits.clone() }.canonical());
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < alphabet_size {
                break;
            }
            *dgt = 0;
        }
    }
    let mut survivors: Vec<ShiftSequence> = classes.into_iter().collect();
    for k in 1..=depth {
        let scores: Vec<f64> = survivors.iter().map(|s| mismatch_fraction(s, k).unwrap()).collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        survivors = survivors
            .into_iter()
            .zip(scores)
            .filter(|(_, m)| (m - best).abs() < 1e-12)
            .map(|(s, _)| s)
            .collect();
    }
    Ok(survivors)
}
