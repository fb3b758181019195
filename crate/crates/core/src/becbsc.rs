//! Bernoulli(p) source, legitimate side information through a BEC(α) and
//! eavesdropper side information through a BSC(β), Hamming distortion.
//!
//! With a public-layer atom `U = i` of weight `u_i` and conditional bias
//! `δ_i = P(X = 0 | U = i)`, the best eavesdropper distortion the lossless
//! scheme guarantees is
//!
//! ```text
//! max  Σ u_i min(δ_i, 1 - δ_i, β)
//! s.t. Σ u_i = 1,  Σ u_i δ_i = 1 - p,
//!      Σ u_i [(1 - α) h(δ_i) - h(δ_i ∗ β)] + h(β) ≥ 0.
//! ```
//!
//! [`solve_three_atom`] solves it numerically; [`outer_dw`] is the matching
//! upper bound.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::info::{conv, h2};
use crate::prob::DEFAULT_ENUMERATION_BUDGET;
use crate::search::{refine, Landscape, RefineOptions, Score};

/// Tolerance when labelling the capability gap's sign.
pub const REGIME_TOLERANCE: f64 = 1e-9;

// Absorbs rounding in h(1 - β) versus h(β); not a modelling margin.
const ROUNDOFF: f64 = 1e-12;
const TOP_K: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BecBscParams {
    p: f64,
    alpha: f64,
    beta: f64,
}

impl BecBscParams {
    pub fn new(p: f64, alpha: f64, beta: f64) -> Result<Self> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(p) || !unit(alpha) || !(0.0..=0.5).contains(&beta) {
            return Err(invalid(format!(
                "need p, α ∈ [0, 1] and β ∈ [0, 0.5]; got p={p}, α={alpha}, β={beta}"
            )));
        }
        Ok(Self { p, alpha, beta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `α h(p)`, the Wyner-Ziv rate for lossless reconstruction.
pub fn rate_floor(params: &BecBscParams) -> f64 {
    params.alpha * h2(params.p)
}

/// Eavesdropper MAP error from `W` alone, `Σ_w min_x P(x, w)`.
pub fn outer_dw(params: &BecBscParams) -> f64 {
    let (p, b) = (params.p, params.beta);
    let w0 = ((1.0 - p) * (1.0 - b)).min(p * b);
    let w1 = ((1.0 - p) * b).min(p * (1.0 - b));
    w0 + w1
}

/// `I(X;B) - I(X;W) = (1-α) h(p) - h(p ∗ β) + h(β)`.
pub fn capability_gap(params: &BecBscParams) -> f64 {
    gap(params.p, params.alpha, params.beta)
}

fn gap(p: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 - alpha) * h2(p) - h2(conv(p, beta)) + h2(beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "B-more-capable")]
    BMoreCapable,
    #[serde(rename = "W-more-capable")]
    WMoreCapable,
    #[serde(rename = "boundary")]
    Boundary,
}

impl Regime {
    pub fn of(params: &BecBscParams) -> Self {
        let g = capability_gap(params);
        if g > REGIME_TOLERANCE {
            Regime::BMoreCapable
        } else if g < -REGIME_TOLERANCE {
            Regime::WMoreCapable
        } else {
            Regime::Boundary
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::BMoreCapable => "B-more-capable",
            Regime::WMoreCapable => "W-more-capable",
            Regime::Boundary => "boundary",
        })
    }
}

/// Optimizer output. Named for the default three atoms; holds as many as
/// were requested.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeAtomSolution {
    pub u: Vec<f64>,
    pub delta: Vec<f64>,
    pub objective: f64,
    pub constraint_slack: f64,
    pub lattice_points: usize,
    pub diagnostic: Option<String>,
}

impl ThreeAtomSolution {
    pub fn mean_residual(&self, p: f64) -> f64 {
        self.u
            .iter()
            .zip(&self.delta)
            .map(|(u, d)| u * d)
            .sum::<f64>()
            - (1.0 - p)
    }

    pub fn mass_residual(&self) -> f64 {
        self.u.iter().sum::<f64>() - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Lattice spacing `1 / grid_resolution` for `u` and `δ`.
    pub grid_resolution: usize,
    pub refine_iters: usize,
    /// Number of atoms of `U`.
    pub atoms: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 40,
            refine_iters: 300,
            atoms: 3,
        }
    }
}

/// Free variables `(u_1..u_{k-1}, δ_1..δ_{k-1})`; `u_k` and `δ_k` follow from
/// the two equality constraints.
struct AtomSpace {
    k: usize,
    mean: f64,
    alpha: f64,
    beta: f64,
    h_beta: f64,
}

impl AtomSpace {
    fn new(params: &BecBscParams, k: usize) -> Self {
        Self {
            k,
            mean: 1.0 - params.p,
            alpha: params.alpha,
            beta: params.beta,
            h_beta: h2(params.beta),
        }
    }

    fn g(&self, d: f64) -> f64 {
        (1.0 - self.alpha) * h2(d) - h2(conv(d, self.beta))
    }

    fn o(&self, d: f64) -> f64 {
        d.min(1.0 - d).min(self.beta)
    }

    /// The eliminated atom `(u_k, δ_k)` given the free part's mass, first
    /// moment, and the rest of the mean.
    fn last_atom(&self, mass: f64, moment: f64) -> Option<(f64, f64)> {
        if mass > 1.0 + 1e-15 {
            return None;
        }
        let uk = (1.0 - mass).max(0.0);
        let r = self.mean - moment;
        if uk <= 1e-12 {
            return (r.abs() <= 1e-12).then_some((uk, self.mean));
        }
        let dk = r / uk;
        if !(-1e-12..=1.0 + 1e-12).contains(&dk) {
            return None;
        }
        Some((uk, dk.clamp(0.0, 1.0)))
    }

    fn atoms(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = self.k - 1;
        let mut u = x[..m].to_vec();
        let mut d = x[m..].to_vec();
        let mass: f64 = u.iter().sum();
        let moment: f64 = u.iter().zip(&d).map(|(a, b)| a * b).sum();
        let (uk, dk) = self.last_atom(mass, moment)?;
        u.push(uk);
        d.push(dk);
        Some((u, d))
    }

    fn raw_score(&self, u: &[f64], d: &[f64]) -> Score {
        let mut objective = 0.0;
        let mut slack = self.h_beta;
        for (&ui, &di) in u.iter().zip(d) {
            if ui > 0.0 {
                objective += ui * self.o(di);
                slack += ui * self.g(di);
            }
        }
        Score { objective, slack }
    }

    fn point(&self, u: &[f64], d: &[f64]) -> Vec<f64> {
        let m = self.k - 1;
        [&u[..m], &d[..m]].concat()
    }
}

impl Landscape for AtomSpace {
    type Point = Vec<f64>;

    fn directions(&self) -> usize {
        2 * (self.k - 1)
    }

    fn step(&self, x: &Vec<f64>, dir: usize, amount: f64) -> Option<Vec<f64>> {
        let mut y = x.clone();
        y[dir] = (y[dir] + amount).clamp(0.0, 1.0);
        (y[dir] != x[dir]).then_some(y)
    }

    fn score(&self, x: &Vec<f64>) -> Option<Score> {
        let (u, d) = self.atoms(x)?;
        let s = self.raw_score(&u, &d);
        Some(Score {
            objective: s.objective,
            slack: s.slack + ROUNDOFF,
        })
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    objective: f64,
    slack: f64,
    comp: usize,
    cell: usize,
}

fn push_top(top: &mut Vec<Candidate>, c: Candidate) {
    top.push(c);
    top.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then(b.slack.total_cmp(&a.slack))
            .then(a.comp.cmp(&b.comp))
            .then(a.cell.cmp(&b.cell))
    });
    top.truncate(TOP_K);
}

/// [`solve_three_atom_with`] with three atoms.
pub fn solve_three_atom(
    params: &BecBscParams,
    grid_resolution: usize,
    refine_iters: usize,
) -> Result<ThreeAtomSolution> {
    solve_three_atom_with(
        params,
        &SolveOptions {
            grid_resolution,
            refine_iters,
            atoms: 3,
        },
    )
}

/// Lattice search over the free variables, then pattern-search refinement of
/// the best lattice points, the single-atom point `δ_1 = 1 - p` and the
/// zero-distortion point `δ ∈ {0, 1}`. Deterministic.
pub fn solve_three_atom_with(
    params: &BecBscParams,
    options: &SolveOptions,
) -> Result<ThreeAtomSolution> {
    let k = options.atoms;
    let r = options.grid_resolution;
    if k == 0 {
        return Err(invalid("at least one atom is required"));
    }
    if r < 1 {
        return Err(invalid("grid_resolution must be at least 1"));
    }
    let space = AtomSpace::new(params, k);
    let m = space.mean;

    let single = {
        let mut u = vec![0.0; k];
        let mut d = vec![0.0; k];
        u[0] = 1.0;
        d[0] = m;
        (u, d)
    };
    if k == 1 {
        let s = space.raw_score(&single.0, &single.1);
        let diagnostic = (s.slack + ROUNDOFF < 0.0)
            .then(|| "infeasible: the single atom violates the capability constraint".to_string());
        return Ok(ThreeAtomSolution {
            u: single.0,
            delta: single.1,
            objective: s.objective,
            constraint_slack: s.slack,
            lattice_points: 1,
            diagnostic,
        });
    }

    let cells = (r as u128 + 1).pow(k as u32 - 1);
    let total = binomial(r + k - 1, k - 1).saturating_mul(cells);
    if total > DEFAULT_ENUMERATION_BUDGET {
        return Err(Error::ResourceLimit {
            what: format!("{k}-atom lattice at resolution 1/{r}"),
            requested: total,
            budget: DEFAULT_ENUMERATION_BUDGET,
        });
    }
    let comps = compositions(r, k);
    let cells = cells as usize;
    let grid: Vec<f64> = (0..=r).map(|i| i as f64 / r as f64).collect();
    let gtab: Vec<f64> = grid.iter().map(|&d| space.g(d)).collect();
    let otab: Vec<f64> = grid.iter().map(|&d| space.o(d)).collect();

    let cell_index = |mut c: usize, idx: &mut [usize]| {
        for slot in idx.iter_mut().rev() {
            *slot = c % (r + 1);
            c /= r + 1;
        }
    };

    let tops: Vec<Vec<Candidate>> = comps
        .par_iter()
        .enumerate()
        .map(|(ci, comp)| {
            let u: Vec<f64> = comp.iter().map(|&c| c as f64 / r as f64).collect();
            let mass: f64 = u[..k - 1].iter().sum();
            let mut top = Vec::with_capacity(TOP_K + 1);
            let mut idx = vec![0usize; k - 1];
            for cell in 0..cells {
                cell_index(cell, &mut idx);
                let mut moment = 0.0;
                let mut objective = 0.0;
                let mut slack = space.h_beta + ROUNDOFF;
                for (i, &j) in idx.iter().enumerate() {
                    moment += u[i] * grid[j];
                    objective += u[i] * otab[j];
                    slack += u[i] * gtab[j];
                }
                let Some((uk, dk)) = space.last_atom(mass, moment) else {
                    continue;
                };
                if uk > 0.0 {
                    objective += uk * space.o(dk);
                    slack += uk * space.g(dk);
                }
                if slack >= 0.0 {
                    push_top(
                        &mut top,
                        Candidate {
                            objective,
                            slack,
                            comp: ci,
                            cell,
                        },
                    );
                }
            }
            top
        })
        .collect();
    let mut top = Vec::new();
    for c in tops.into_iter().flatten() {
        push_top(&mut top, c);
    }

    let mut seeds: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx = vec![0usize; k - 1];
    for c in &top {
        cell_index(c.cell, &mut idx);
        let u: Vec<f64> = comps[c.comp].iter().map(|&x| x as f64 / r as f64).collect();
        let d: Vec<f64> = idx.iter().map(|&j| grid[j]).collect();
        seeds.push(([&u[..k - 1], &d[..]].concat(), 1.0 / r as f64));
    }
    seeds.push((space.point(&single.0, &single.1), 0.05));
    {
        // The eliminated atom carries the δ = 1 mass so that moving δ_1
        // off zero stays on the mean constraint.
        let mut u = vec![0.0; k];
        let mut d = vec![0.0; k];
        u[0] = params.p;
        u[k - 1] = 1.0 - params.p;
        d[k - 1] = 1.0;
        seeds.push((space.point(&u, &d), 0.05));
    }

    let refined: Vec<Option<(Vec<f64>, Score)>> = seeds
        .par_iter()
        .map(|(x, step)| {
            let s = space.score(x)?;
            if !s.feasible() {
                return None;
            }
            let opts = RefineOptions {
                initial_step: *step,
                min_step: 1e-11,
                max_sweeps: options.refine_iters,
            };
            Some(refine(&space, x.clone(), s, opts))
        })
        .collect();

    let mut best: Option<(Vec<f64>, Score)> = None;
    for (x, s) in refined.into_iter().flatten() {
        if best
            .as_ref()
            .is_none_or(|(_, b)| s.objective > b.objective)
        {
            best = Some((x, s));
        }
    }
    let single_feasible = gap(params.p, params.alpha, params.beta) + ROUNDOFF >= 0.0;
    let (x, _) = best.expect("the zero-distortion point is always feasible");
    let (u, mut delta) = space.atoms(&x).expect("refined points are in the domain");
    // Put any leftover mean residual on the heaviest atom.
    let heaviest = (0..k)
        .max_by(|&a, &b| u[a].total_cmp(&u[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let r = m - u.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
    delta[heaviest] = (delta[heaviest] + r / u[heaviest]).clamp(0.0, 1.0);
    let raw = space.raw_score(&u, &delta);
    // Feasible atoms never exceed the outer value; any excess is round-off
    // from the tolerance on the mean constraint.
    Ok(ThreeAtomSolution {
        u,
        delta,
        objective: raw.objective.min(outer_dw(params)),
        constraint_slack: raw.slack,
        lattice_points: total as usize,
        diagnostic: (!single_feasible)
            .then(|| "eavesdropper more capable: the single-atom point is infeasible".to_string()),
    })
}

/// One row of a Dw-versus-p sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub rate_floor: f64,
    pub inner_dw: f64,
    pub outer_dw: f64,
    pub regime: Regime,
    pub solution: ThreeAtomSolution,
}

/// 101 uniform points on `[0, 1]`.
pub fn default_p_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

pub fn sweep_curve(alpha: f64, beta: f64, p_grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_curve_with(alpha, beta, p_grid, &SolveOptions::default())
}

pub fn sweep_curve_with(
    alpha: f64,
    beta: f64,
    p_grid: &[f64],
    options: &SolveOptions,
) -> Result<Vec<SweepRow>> {
    p_grid
        .par_iter()
        .map(|&p| {
            let params = BecBscParams::new(p, alpha, beta)?;
            let solution = solve_three_atom_with(&params, options)?;
            Ok(SweepRow {
                p,
                rate_floor: rate_floor(&params),
                inner_dw: solution.objective,
                outer_dw: outer_dw(&params),
                regime: Regime::of(&params),
                solution,
            })
        })
        .collect()
}

/// Roots of the capability gap in `(0, 1)`: sign changes on a 5000-point
/// scan of `(0, 0.5]`, bisected to `1e-10`, mirrored about `1/2`.
pub fn capability_crossover(alpha: f64, beta: f64) -> Result<Vec<f64>> {
    BecBscParams::new(0.5, alpha, beta)?;
    const SCAN: usize = 5000;
    let f = |p: f64| gap(p, alpha, beta);
    let mut roots = Vec::new();
    let mut prev_p = 0.5 / SCAN as f64;
    let mut prev = f(prev_p);
    if prev == 0.0 {
        roots.push(prev_p);
    }
    for i in 2..=SCAN {
        let p = 0.5 * i as f64 / SCAN as f64;
        let v = f(p);
        if v == 0.0 {
            roots.push(p);
        } else if prev * v < 0.0 {
            let (mut lo, mut hi) = (prev_p, p);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (prev < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_p = p;
        prev = v;
    }
    let mirrored: Vec<f64> = roots
        .iter()
        .filter(|&&r| (r - 0.5).abs() > 1e-10)
        .map(|r| 1.0 - r)
        .collect();
    roots.extend(mirrored);
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// CSV header for `atoms` atoms; three atoms give
/// `p,rate_floor_bits,inner_dw,outer_dw,regime,u1,u2,u3,d1,d2,d3`.
pub fn curve_header(atoms: usize) -> String {
    let mut h = String::from("p,rate_floor_bits,inner_dw,outer_dw,regime");
    for i in 1..=atoms {
        h.push_str(&format!(",u{i}"));
    }
    for i in 1..=atoms {
        h.push_str(&format!(",d{i}"));
    }
    h
}

pub fn write_curve_rows<Wr: std::io::Write>(
    out: &mut Wr,
    rows: &[SweepRow],
) -> std::io::Result<()> {
    for row in rows {
        write!(
            out,
            "{},{},{},{},{}",
            row.p, row.rate_floor, row.inner_dw, row.outer_dw, row.regime
        )?;
        for v in row.solution.u.iter().chain(&row.solution.delta) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, a: f64, b: f64) -> BecBscParams {
        BecBscParams::new(p, a, b).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(BecBscParams::new(0.5, 0.4, 0.6).is_err());
        assert!(BecBscParams::new(-0.1, 0.4, 0.1).is_err());
        assert!(BecBscParams::new(0.5, 1.1, 0.1).is_err());
    }

    #[test]
    fn rate_floor_examples() {
        assert_eq!(rate_floor(&params(0.0, 0.4, 0.1)), 0.0);
        assert!((rate_floor(&params(0.5, 0.4, 0.1)) - 0.4).abs() < 1e-12);
        assert!((rate_floor(&params(0.11, 0.4, 0.1)) - 0.4 * h2(0.11)).abs() < 1e-15);
        assert!((rate_floor(&params(0.11, 0.4, 0.1)) - 0.2).abs() < 1e-3);
    }

    #[test]
    fn outer_examples() {
        assert_eq!(outer_dw(&params(0.3, 0.4, 0.0)), 0.0);
        assert!((outer_dw(&params(0.5, 0.4, 0.1)) - 0.1).abs() < 1e-12);
        assert!((outer_dw(&params(0.01, 0.4, 0.1)) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn solver_examples() {
        let s = solve_three_atom(&params(0.5, 0.4, 0.1), 40, 300).unwrap();
        assert!((s.objective - 0.1).abs() < 1e-9);
        assert!(s.diagnostic.is_none());

        let s = solve_three_atom(&params(0.0, 0.4, 0.1), 40, 300).unwrap();
        assert!(s.objective.abs() < 1e-12, "{s:?}");

        let s = solve_three_atom(&params(0.5, 0.4, 0.04), 40, 300).unwrap();
        assert!(s.objective > 0.0 && s.objective < 0.04, "{}", s.objective);
        assert!(s.diagnostic.is_some());
        assert!(s.constraint_slack >= -1e-9);
    }

    #[test]
    fn crossover_examples() {
        assert!(capability_crossover(0.0, 0.1).unwrap().is_empty());
        assert!(capability_crossover(0.4, 0.1).unwrap().is_empty());
        let r = capability_crossover(0.4, 0.04).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] + r[1] - 1.0).abs() < 1e-9);
        assert!(gap(r[0], 0.4, 0.04).abs() < 1e-8);
        assert_eq!(Regime::of(&params(r[0], 0.4, 0.04)), Regime::Boundary);
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::of(&params(0.3, 0.4, 0.1)), Regime::BMoreCapable);
        assert_eq!(Regime::of(&params(0.3, 0.4, 0.04)), Regime::WMoreCapable);
        assert_eq!(Regime::of(&params(0.0, 0.4, 0.04)), Regime::Boundary);
        assert_eq!(Regime::BMoreCapable.to_string(), "B-more-capable");
    }

    #[test]
    fn header_and_rows() {
        assert_eq!(
            curve_header(3),
            "p,rate_floor_bits,inner_dw,outer_dw,regime,u1,u2,u3,d1,d2,d3"
        );
        let rows = sweep_curve_with(
            0.4,
            0.1,
            &[0.5],
            &SolveOptions {
                grid_resolution: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_curve_rows(&mut buf, &rows).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim().split(',').count(), 11);
        assert!(line.starts_with("0.5,0.4,"));
    }

    #[test]
    fn atom_override() {
        let p = params(0.5, 0.4, 0.04);
        let one = solve_three_atom_with(
            &p,
            &SolveOptions {
                atoms: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(one.diagnostic.is_some());
        let two = solve_three_atom_with(
            &p,
            &SolveOptions {
                atoms: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let three = solve_three_atom(&p, 40, 300).unwrap();
        assert!(three.objective >= two.objective - 1e-6);
        assert!(two.objective > 0.0);
        let huge = SolveOptions {
            atoms: 6,
            grid_resolution: 100,
            refine_iters: 1,
        };
        assert!(matches!(
            solve_three_atom_with(&p, &huge),
            Err(Error::ResourceLimit { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

        #[test]
        fn chained_bounds_and_constraints(p in 0.0..=1.0f64, a in 0.0..=1.0f64, b in 0.0..=0.5f64) {
            let prm = params(p, a, b);
            let s = solve_three_atom(&prm, 20, 200).unwrap();
            let outer = outer_dw(&prm);
            prop_assert!(s.objective >= -1e-15);
            prop_assert!(s.objective <= outer + 1e-9);
            prop_assert!(outer <= p.min(1.0 - p).min(b) + 1e-12);
            prop_assert!(s.mass_residual().abs() < 1e-9);
            prop_assert!(s.mean_residual(p).abs() < 1e-9);
            prop_assert!(s.constraint_slack >= -1e-9);
            if capability_gap(&prm) >= 0.0 {
                prop_assert!(s.objective >= p.min(1.0 - p).min(b) - 1e-9);
            }
            if capability_gap(&prm) > 1e-6 {
                prop_assert!((s.objective - outer).abs() < 1e-6);
            }
        }

        #[test]
        fn symmetric_in_p(p in 0.0..=0.5f64, a in 0.0..=1.0f64, b in 0.0..=0.5f64) {
            let lo = solve_three_atom(&params(p, a, b), 20, 200).unwrap();
            let hi = solve_three_atom(&params(1.0 - p, a, b), 20, 200).unwrap();
            prop_assert!((lo.objective - hi.objective).abs() < 1e-3, "{} {}", lo.objective, hi.objective);
        }
    }
}
