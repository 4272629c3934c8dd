use serde::Serialize;

use super::scan::validate_forms;
use super::LinearPhase;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::Direction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockSelector {
    pub ell: u32,
    pub ell_k: Vec<u32>,
}

/// Lattice points with `2^ℓ <= |n| < 2^{ℓ+1}` and
/// `2^{ℓ_k} <= |L_k(n)| + 1 < 2^{ℓ_k+1}` for every form.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicBlock {
    pub ell: u32,
    pub ell_k: Vec<u32>,
    pub h: u64,
    pub members: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub ell: u32,
    pub ell_k: Vec<u32>,
    pub h: u64,
    pub members: usize,
    pub inv_h: f64,
    pub min_abs_g: Option<f64>,
    pub min_gap: Option<f64>,
    /// Members with `|g(n)| < 1/H`.
    pub small_values: Vec<Vec<i64>>,
    /// Neighbouring members (in the order of `g`) closer than `1/H`.
    pub violating_pairs: Vec<(Vec<i64>, Vec<i64>)>,
    pub passed: bool,
}

const MAX_ELL: u32 = 30;

fn dyadic_exponent(x: f64) -> u32 {
    // floor(log2 x) for x >= 1, robust at exact powers of two
    let mut e = x.log2().floor() as i64;
    while (2f64).powi(e as i32 + 1) <= x {
        e += 1;
    }
    while e > 0 && (2f64).powi(e as i32) > x {
        e -= 1;
    }
    e.max(0) as u32
}

fn form_values(forms: &[Vec<f64>], n: &[i64]) -> Vec<f64> {
    forms.iter().map(|f| f.iter().zip(n).map(|(c, &k)| c * k as f64).sum::<f64>().abs() + 1.0).collect()
}

fn norm_sq(n: &[i64]) -> i128 {
    n.iter().map(|&k| (k as i128) * (k as i128)).sum()
}

/// `H = ⌈C^{−1} 2^{Σ(ℓ_k+2)} 2^{γ(ℓ+2)}⌉`, saturating.
fn block_h(sel: &BlockSelector, gamma: f64, c: f64) -> u64 {
    let exp: f64 = sel.ell_k.iter().map(|&l| l as f64 + 2.0).sum::<f64>() + gamma * (sel.ell as f64 + 2.0);
    let h = (exp * std::f64::consts::LN_2).exp() / c;
    if h >= u64::MAX as f64 {
        u64::MAX
    } else {
        h.ceil().max(1.0) as u64
    }
}

/// Visits the box `|n_i| < 2^{ℓ+1}` restricted to the Euclidean shell.
fn for_each_in_shell(k: usize, ell: u32, mut visit: impl FnMut(&[i64])) {
    let r = 1i64 << (ell + 1);
    let (lo2, hi2) = (1i128 << (2 * ell), 1i128 << (2 * ell + 2));
    let mut n = vec![-(r - 1); k];
    loop {
        let s = norm_sq(&n);
        if s >= lo2 && s < hi2 {
            visit(&n);
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if n[i] < r - 1 {
                n[i] += 1;
                break;
            }
            n[i] = -(r - 1);
        }
    }
}

fn check_inputs(alpha: &Direction, forms: &[Vec<f64>], gamma: f64, c: f64, ell: u32) -> Result<()> {
    alpha.require_normalized()?;
    validate_forms(forms, alpha.d() - 1)?;
    if !(c > 0.0 && c.is_finite()) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!("need C > 0 and finite γ, got C = {c}, γ = {gamma}")));
    }
    if ell > MAX_ELL {
        return Err(Error::InvalidInput(format!("ℓ = {ell} exceeds {MAX_ELL}")));
    }
    Ok(())
}

/// Materializes one block by enumerating the dyadic shell `2^ℓ <= |n| < 2^{ℓ+1}`.
pub fn dyadic_block(alpha: &Direction, forms: &[Vec<f64>], gamma: f64, c: f64, sel: &BlockSelector) -> Result<DyadicBlock> {
    check_inputs(alpha, forms, gamma, c, sel.ell)?;
    if sel.ell_k.len() != forms.len() {
        return Err(Error::InvalidInput("one ℓ_k per form is required".into()));
    }
    let mut members = Vec::new();
    for_each_in_shell(forms.len(), sel.ell, |n| {
        let vals = form_values(forms, n);
        if vals.iter().zip(&sel.ell_k).all(|(&v, &l)| dyadic_exponent(v) == l) {
            members.push(n.to_vec());
        }
    });
    Ok(DyadicBlock { ell: sel.ell, ell_k: sel.ell_k.clone(), h: block_h(sel, gamma, c), members })
}

/// Every nonempty block with `ℓ <= max_ell`, in increasing `(ℓ, ℓ_k)` order.
pub fn occupied_blocks(alpha: &Direction, forms: &[Vec<f64>], max_ell: u32) -> Result<Vec<BlockSelector>> {
    check_inputs(alpha, forms, 0.0, 1.0, max_ell)?;
    let mut out: Vec<BlockSelector> = Vec::new();
    for ell in 0..=max_ell {
        let mut here: Vec<Vec<u32>> = Vec::new();
        for_each_in_shell(forms.len(), ell, |n| {
            let key: Vec<u32> = form_values(forms, n).into_iter().map(dyadic_exponent).collect();
            if !here.contains(&key) {
                here.push(key);
            }
        });
        here.sort();
        out.extend(here.into_iter().map(|ell_k| BlockSelector { ell, ell_k }));
    }
    Ok(out)
}

/// Checks that `g(n) = ⟨α*, n⟩ mod 1` (in `(−1/2, 1/2]`) stays `1/H` away
/// from 0 and that distinct members are more than `1/H` apart.
///
/// The pairwise condition is checked on neighbours after sorting by `g`,
/// which finds a violating pair whenever one exists.
pub fn dyadic_spacing_audit(
    alpha: &Direction,
    forms: &[Vec<f64>],
    gamma: f64,
    c: f64,
    sel: &BlockSelector,
) -> Result<AuditReport> {
    let block = dyadic_block(alpha, forms, gamma, c, sel)?;
    let phase = LinearPhase::new(&alpha.alpha()[..alpha.d() - 1]);
    let inv_h = Dd::ONE / Dd::from_f64(block.h as f64);
    let mut g: Vec<(Dd, usize)> = Vec::with_capacity(block.members.len());
    for (i, n) in block.members.iter().enumerate() {
        // the audit compares against 1/H, so require the phase to beat that scale
        let v = phase.centered(n);
        if phase.error_bound(n) * 1e6 > inv_h.to_f64() {
            return Err(Error::PrecisionExhausted(format!("phase error at {n:?} is too large to audit H = {}", block.h)));
        }
        g.push((v, i));
    }
    let small_values: Vec<Vec<i64>> =
        g.iter().filter(|(v, _)| v.abs() < inv_h).map(|&(_, i)| block.members[i].clone()).collect();
    let min_abs_g = g.iter().map(|(v, _)| v.abs().to_f64()).reduce(f64::min);
    g.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut violating_pairs = Vec::new();
    let mut min_gap: Option<f64> = None;
    for w in g.windows(2) {
        let gap = w[1].0 - w[0].0;
        min_gap = Some(min_gap.map_or(gap.to_f64(), |m| m.min(gap.to_f64())));
        if gap <= inv_h {
            violating_pairs.push((block.members[w[0].1].clone(), block.members[w[1].1].clone()));
        }
    }
    let passed = small_values.is_empty() && violating_pairs.is_empty();
    Ok(AuditReport {
        ell: block.ell,
        ell_k: block.ell_k,
        h: block.h,
        members: block.members.len(),
        inv_h: inv_h.to_f64(),
        min_abs_g,
        min_gap,
        small_values,
        violating_pairs,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::fit_schmidt_constant;

    fn silver() -> Direction {
        Direction::parse(&["sqrt(2)-1", "1"]).unwrap()
    }

    #[test]
    fn exponent_edges() {
        assert_eq!(dyadic_exponent(1.0), 0);
        assert_eq!(dyadic_exponent(2.0), 1);
        assert_eq!(dyadic_exponent(3.999), 1);
        assert_eq!(dyadic_exponent(4.0), 2);
    }

    #[test]
    fn members_satisfy_block_constraints() {
        let a = Direction::parse(&["sqrt(2)", "sqrt(3)", "1"]).unwrap();
        let forms = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let sel = BlockSelector { ell: 3, ell_k: vec![2, 3] };
        let b = dyadic_block(&a, &forms, 0.5, 0.1, &sel).unwrap();
        assert!(!b.members.is_empty());
        for n in &b.members {
            let r2 = (n[0] * n[0] + n[1] * n[1]) as f64;
            assert!((64.0..256.0).contains(&r2));
            assert!((4.0..8.0).contains(&((n[0].abs() + 1) as f64)));
            assert!((8.0..16.0).contains(&((n[1].abs() + 1) as f64)));
        }
        // H = ceil(10 · 2^{(2+2)+(3+2)} · 2^{0.5·5})
        assert_eq!(b.h, (10.0 * 512.0 * 2f64.powf(2.5)).ceil() as u64);
    }

    #[test]
    fn empty_and_singleton_blocks() {
        let a = silver();
        let forms = vec![vec![1.0]];
        // |n| in [1, 2) with |n|+1 in [4, 8) is impossible
        let r = dyadic_spacing_audit(&a, &forms, 0.5, 0.1, &BlockSelector { ell: 0, ell_k: vec![2] }).unwrap();
        assert_eq!(r.members, 0);
        assert!(r.passed);
        // |n| = 3 only: ell = 1, |n|+1 = 4 gives ell_1 = 2; members ±3
        let r = dyadic_spacing_audit(&a, &forms, 0.5, 0.1, &BlockSelector { ell: 1, ell_k: vec![2] }).unwrap();
        assert_eq!(r.members, 2);
    }

    #[test]
    fn silver_blocks_pass_with_fitted_constant() {
        let a = silver();
        let forms = vec![vec![1.0]];
        let (c, _) = fit_schmidt_constant(&a, &forms, 0.5, 10_000).unwrap();
        let c = c * (1.0 - 1e-9);
        let r = dyadic_spacing_audit(&a, &forms, 0.5, c, &BlockSelector { ell: 3, ell_k: vec![3] }).unwrap();
        assert!(r.passed, "{r:?}");
        // direct pairwise oracle on the same members
        let alpha = 2f64.sqrt() - 1.0;
        let mut ns: Vec<i64> = (-15i64..=15).filter(|n| (8..16).contains(&n.abs()) && (8..16).contains(&(n.abs() + 1))).collect();
        ns.sort();
        let g = |n: i64| {
            let v = n as f64 * alpha;
            let f = v - v.floor();
            if f > 0.5 { f - 1.0 } else { f }
        };
        let inv_h = r.inv_h;
        for &n in &ns {
            assert!(g(n).abs() >= inv_h);
            for &m in &ns {
                if m != n {
                    assert!((g(n) - g(m)).abs() > inv_h);
                }
            }
        }
    }

    #[test]
    fn wrong_constant_is_reported() {
        let a = silver();
        let forms = vec![vec![1.0]];
        let r = dyadic_spacing_audit(&a, &forms, 0.5, 1e-6, &BlockSelector { ell: 6, ell_k: vec![6] }).unwrap();
        assert!(r.passed);
        // an absurdly large C makes 1/H bigger than every gap
        let r = dyadic_spacing_audit(&a, &forms, 0.5, 1e6, &BlockSelector { ell: 6, ell_k: vec![6] }).unwrap();
        assert!(!r.passed);
        assert!(!r.violating_pairs.is_empty() || !r.small_values.is_empty());
    }

    #[test]
    fn occupied_blocks_cover_shells() {
        let blocks = occupied_blocks(&silver(), &[vec![1.0]], 5).unwrap();
        // each shell [2^l, 2^{l+1}) yields ell_1 = l, plus ell_1 = l+1 from |n| = 2^{l+1}-1
        assert_eq!(blocks.len(), 1 + 2 * 5);
        assert_eq!(blocks[0], BlockSelector { ell: 0, ell_k: vec![1] });
    }
}
