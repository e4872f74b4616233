mod common;

use lattice_theta::{
    enumerate_shells, greedy_a_conditions, jacobi_theta, layered_theta, layered_theta_difference, make_preset, mismatch_fraction, normalize_density,
    preset_layered, same_symmetries_check, theta, JacobiKind, Lattice, LayeredConfig, LayeredPreset, Preset,
    ShiftAlphabet, ShiftSequence, ThetaError,
};
use rand::Rng;

const RT: f64 = 1e-13;

fn a2() -> Lattice {
    make_preset(Preset::A2, &[1.0]).unwrap()
}

fn stacking(seq: Vec<usize>, t: f64) -> LayeredConfig<f64> {
    LayeredConfig::new(a2(), ShiftAlphabet::triangular(), ShiftSequence::new(seq).unwrap(), t, 1.0).unwrap()
}

fn lt(cfg: &LayeredConfig<f64>, alpha: f64) -> f64 {
    layered_theta(cfg, alpha, RT).unwrap().value
}

/// Consecutive layers distinct and the pattern repeats every three layers.
fn is_bijection_pattern(seq: &ShiftSequence) -> bool {
    let p = seq.period() as i64;
    (0..p).all(|k| seq.at(k) == seq.at(k + 3)) && (0..p).all(|k| seq.at(k) != seq.at(k + 1) && seq.at(k) != seq.at(k + 2))
}

#[test]
fn presets() {
    let fcc = preset_layered::<f64>(LayeredPreset::Fcc, false);
    let hcp = preset_layered::<f64>(LayeredPreset::Hcp, false);
    let bcc = preset_layered::<f64>(LayeredPreset::Bcc, false);
    assert_eq!(fcc.sequence.indices(), &[0, 1, 2]);
    assert_eq!(hcp.sequence.indices(), &[0, 1]);
    assert!((fcc.scale_l / fcc.spacing_t - 3f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
    assert!((bcc.scale_l / bcc.spacing_t - 2.0 * 6f64.sqrt()).abs() < 1e-12);
    for name in [LayeredPreset::Fcc, LayeredPreset::Bcc, LayeredPreset::Hcp] {
        let c = preset_layered::<f64>(name, true);
        assert!((c.cell_volume() - 1.0).abs() < 1e-12);
        let tri = 3f64.sqrt() / 2.0 * c.spacing_t * c.scale_l * c.scale_l;
        assert!((c.cell_volume() - tri).abs() < 1e-14);
    }
    assert!("ccp".parse::<LayeredPreset>().is_err());
}

#[test]
fn stackings_reproduce_bravais_lattices() {
    for (name, preset) in [(LayeredPreset::Fcc, Preset::Fcc), (LayeredPreset::Bcc, Preset::Bcc)] {
        let cfg = preset_layered::<f64>(name, true);
        let bravais = normalize_density(&make_preset(preset, &[]).unwrap());
        for &alpha in &[0.3, 1.0, 3.0] {
            let a = lt(&cfg, alpha);
            let b = theta(&bravais, &[0.0; 3], alpha, RT).unwrap().value;
            assert!((a - b).abs() < 1e-10, "{name:?} alpha {alpha}: {a} vs {b}");
        }
    }
}

#[test]
fn constant_sequence_factorizes() {
    let t = 0.8;
    let cfg = stacking(vec![1], t);
    for &alpha in &[0.2, 1.0, 4.0] {
        let want = jacobi_theta(JacobiKind::Three, alpha * t * t, 0, 1e-15).unwrap().value
            * theta(&a2(), &[0.0, 0.0], alpha, 1e-15).unwrap().value;
        assert!((lt(&cfg, alpha) - want).abs() < 1e-12 * want);
    }
}

#[test]
fn hcp_is_above_fcc() {
    let fcc = preset_layered::<f64>(LayeredPreset::Fcc, true);
    let hcp = preset_layered::<f64>(LayeredPreset::Hcp, true);
    for &alpha in &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let a = layered_theta(&fcc, alpha, RT).unwrap();
        let b = layered_theta(&hcp, alpha, RT).unwrap();
        let gap = layered_theta_difference(&fcc, &hcp, alpha, 1e-10).unwrap();
        assert!(gap.value > gap.abs_error, "alpha {alpha}");
        assert!(b.value >= a.value - a.abs_error - b.abs_error);
        if alpha <= 2.0 {
            assert!(b.value - a.value > a.abs_error + b.abs_error, "alpha {alpha}");
            assert!((gap.value - (b.value - a.value)).abs() <= gap.abs_error + a.abs_error + b.abs_error);
        }
    }
}

#[test]
fn value_does_not_depend_on_the_period_used() {
    let mut rng = common::rng(31);
    for _ in 0..30 {
        let p = rng.gen_range(1..=8);
        let seq: Vec<usize> = (0..p).map(|_| rng.gen_range(0..3)).collect();
        let t = rng.gen_range(0.4..1.5);
        let alpha = rng.gen_range(0.1..5.0);
        let one = stacking(seq.clone(), t);
        let mut two = one.clone();
        two.sequence = one.sequence.repeated(2);
        let (x, y) = (lt(&one, alpha), lt(&two, alpha));
        assert!((x - y).abs() <= 1e-12 * x);
    }
}

#[test]
fn bijection_layering_beats_random_sequences() {
    let mut rng = common::rng(32);
    let cases = [(0.05, 2.0), (0.2, 1.0), (1.0, 1.0), (5.0, 1.0), (1.0, 0.5)];
    for &(alpha, t) in &cases {
        assert!(alpha >= 1.0 / (2.0 * std::f64::consts::PI * t * t));
        let best = lt(&stacking(vec![0, 1, 2], t), alpha);
        for _ in 0..200 {
            let p = rng.gen_range(1..=12);
            let seq = ShiftSequence::new((0..p).map(|_| rng.gen_range(0..3)).collect()).unwrap();
            let v = lt(&stacking(seq.indices().to_vec(), t), alpha);
            if is_bijection_pattern(&seq) {
                assert!((v - best).abs() <= 1e-12 * best);
            } else {
                let gap = layered_theta_difference(&stacking(vec![0, 1, 2], t), &stacking(seq.indices().to_vec(), t), alpha, 1e-8)
                    .unwrap();
                assert!(gap.value > gap.abs_error, "alpha {alpha} t {t} {:?}: gap {} ± {}", seq.indices(), gap.value, gap.abs_error);
                assert!(v >= best * (1.0 - 1e-13));
            }
        }
    }
}

#[test]
fn short_periods_lose_at_every_alpha() {
    let mut all = Vec::new();
    for p in 1..=3usize {
        for code in 0..3usize.pow(p as u32) {
            let mut c = code;
            all.push((0..p).map(|_| { let v = c % 3; c /= 3; v }).collect::<Vec<_>>());
        }
    }
    for &alpha in &[0.05, 0.2, 1.0, 5.0] {
        let best = lt(&stacking(vec![0, 1, 2], 1.0), alpha);
        for seq in &all {
            assert!(lt(&stacking(seq.clone(), 1.0), alpha) >= best * (1.0 - 1e-13), "{seq:?} at {alpha}");
            if !is_bijection_pattern(&ShiftSequence::new(seq.clone()).unwrap()) {
                let gap = layered_theta_difference(&stacking(vec![0, 1, 2], 1.0), &stacking(seq.clone(), 1.0), alpha, 1e-8).unwrap();
                assert!(gap.value > gap.abs_error, "{seq:?} at {alpha}: {} ± {}", gap.value, gap.abs_error);
            }
        }
    }
}

/// Squared norms through `count` shells, divided by the first nonzero one.
fn normalized_spectrum(l: &Lattice, count: usize) -> Vec<(f64, usize)> {
    let s = enumerate_shells(l, &[0.0; 3], count).unwrap();
    let m = s[1].sq_norm;
    s.iter().map(|x| (x.sq_norm / m, x.points.len())).collect()
}

#[test]
fn square_stackings() {
    let z2 = make_preset(Preset::Zd, &[2.0]).unwrap();
    let seq = ShiftSequence::new(vec![0, 1]).unwrap();
    for (t, preset) in [(0.5, Preset::Bcc), (1.0 / 2f64.sqrt(), Preset::Fcc)] {
        let cfg = LayeredConfig::new(z2.clone(), ShiftAlphabet::square_center(), seq.clone(), t, 1.0).unwrap();
        let l = cfg.as_bravais().expect("alternating centred squares form a lattice");
        let a = normalized_spectrum(&l, 7);
        let b = normalized_spectrum(&make_preset(preset, &[]).unwrap(), 7);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.0 - y.0).abs() < 1e-12);
            assert_eq!(x.1, y.1);
        }
    }
}

#[test]
fn symmetry_checks() {
    let tri = ShiftAlphabet::triangular();
    assert!(same_symmetries_check(&a2(), &tri, 8.0).unwrap());
    let z2 = make_preset(Preset::Zd, &[2.0]).unwrap();
    assert!(same_symmetries_check(&z2, &ShiftAlphabet::square_center(), 8.0).unwrap());
    let two = ShiftAlphabet::new(vec![vec![0.0, 0.0], vec![0.3, 0.0]]).unwrap();
    // a two-letter alphabet only sees ±(x − y), and p ↦ −p is a symmetry of every lattice
    assert!(same_symmetries_check(&z2, &two, 10.0).unwrap());
    let three = ShiftAlphabet::new(vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![0.5, 0.5]]).unwrap();
    assert!(!same_symmetries_check(&z2, &three, 10.0).unwrap());
    assert!(matches!(same_symmetries_check(&z2, &three, 0.5), Err(ThetaError::Refused(_))));
    assert!(ShiftAlphabet::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
}

#[test]
fn mismatch_fractions() {
    let s1 = ShiftSequence::new(vec![0, 1, 2]).unwrap();
    let s2 = ShiftSequence::new(vec![0, 1]).unwrap();
    assert_eq!(mismatch_fraction(&s1, 1).unwrap(), 1.0);
    assert_eq!(mismatch_fraction(&s1, 3).unwrap(), 0.0);
    assert_eq!(mismatch_fraction(&s2, 1).unwrap(), 1.0);
    assert_eq!(mismatch_fraction(&s2, 2).unwrap(), 0.0);
    assert!(mismatch_fraction(&s1, 0).is_err());
    let s = ShiftSequence::new(vec![0, 0, 1, 2]).unwrap();
    assert_eq!(mismatch_fraction(&s, 1).unwrap(), 0.75);
}

/// Exhaustive oracle: all sequences maximizing m₁, …, m_depth lexicographically, canonicalized.
fn brute_force_greedy(h: usize, p: usize, depth: usize) -> Vec<ShiftSequence> {
    let mut cands: Vec<ShiftSequence> = (0..h.pow(p as u32))
        .map(|mut c| ShiftSequence::new((0..p).map(|_| { let v = c % h; c /= h; v }).collect()).unwrap())
        .collect();
    for k in 1..=depth {
        let best = cands.iter().map(|s| mismatch_fraction(s, k).unwrap()).fold(f64::MIN, f64::max);
        cands.retain(|s| mismatch_fraction(s, k).unwrap() == best);
    }
    let mut out: Vec<ShiftSequence> = cands.iter().map(|s| s.canonical()).collect();
    out.sort();
    out.dedup();
    out
}

#[test]
fn greedy_conditions() {
    assert_eq!(greedy_a_conditions(3, 3, 1).unwrap(), vec![ShiftSequence::new(vec![0, 1, 2]).unwrap()]);
    assert_eq!(greedy_a_conditions(2, 2, 1).unwrap(), vec![ShiftSequence::new(vec![0, 1]).unwrap()]);
    let six = greedy_a_conditions(3, 6, 3).unwrap();
    assert_eq!(six, vec![ShiftSequence::new(vec![0, 1, 2, 0, 1, 2]).unwrap()]);
    for (h, p, d) in [(3, 6, 3), (3, 5, 2), (2, 6, 2), (4, 4, 2)] {
        assert_eq!(greedy_a_conditions(h, p, d).unwrap(), brute_force_greedy(h, p, d));
    }
    assert!(matches!(greedy_a_conditions(10, 8, 1), Err(ThetaError::SearchSpace(_))));
}
