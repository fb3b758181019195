//! Derivative-free local refinement for small constrained maximizations.
//!
//! Coordinate-style pattern search with a shrinking step. A move that
//! improves the objective but breaks the constraint is not discarded
//! outright: a second move along another direction is searched (by
//! bisection on its length) for the shortest step that restores
//! feasibility. The pair behaves like a step along a curved constraint
//! boundary, which plain coordinate moves cannot take.

/// Objective to maximize and constraint slack; feasible iff `slack >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Score {
    pub objective: f64,
    pub slack: f64,
}

impl Score {
    pub fn feasible(&self) -> bool {
        self.slack >= 0.0
    }
}

pub(crate) trait Landscape {
    type Point: Clone;

    fn directions(&self) -> usize;

    /// Moves `x` along direction `dir` by the signed `amount`. `None` when
    /// the move leaves the domain entirely.
    fn step(&self, x: &Self::Point, dir: usize, amount: f64) -> Option<Self::Point>;

    /// `None` outside the domain.
    fn score(&self, x: &Self::Point) -> Option<Score>;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RefineOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_sweeps: usize,
}

const IMPROVEMENT: f64 = 1e-13;
const BISECTIONS: usize = 40;

pub(crate) fn refine<L: Landscape>(
    landscape: &L,
    start: L::Point,
    start_score: Score,
    options: RefineOptions,
) -> (L::Point, Score) {
    let mut x = start;
    let mut best = start_score;
    let mut step = options.initial_step;
    let dirs = landscape.directions();
    for _ in 0..options.max_sweeps {
        if step < options.min_step {
            break;
        }
        let mut improved = false;
        for dir in 0..dirs {
            for sign in [1.0, -1.0] {
                let Some(y) = landscape.step(&x, dir, sign * step) else {
                    continue;
                };
                let Some(sy) = landscape.score(&y) else {
                    continue;
                };
                if sy.objective <= best.objective + IMPROVEMENT {
                    continue;
                }
                if sy.feasible() {
                    x = y;
                    best = sy;
                    improved = true;
                } else if let Some((z, sz)) = restore(landscape, &y, dir, step, best.objective) {
                    x = z;
                    best = sz;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

fn restore<L: Landscape>(
    landscape: &L,
    y: &L::Point,
    skip: usize,
    step: f64,
    to_beat: f64,
) -> Option<(L::Point, Score)> {
    let mut best: Option<(L::Point, Score)> = None;
    for dir in (0..landscape.directions()).filter(|&d| d != skip) {
        for sign in [1.0, -1.0] {
            let mut hi = None;
            for scale in [0.5, 1.0, 2.0, 4.0] {
                let t = scale * step;
                if let Some(z) = landscape.step(y, dir, sign * t) {
                    if landscape.score(&z).is_some_and(|s| s.feasible()) {
                        hi = Some(t);
                        break;
                    }
                }
            }
            let Some(mut hi) = hi else { continue };
            let mut lo = 0.0;
            for _ in 0..BISECTIONS {
                let mid = 0.5 * (lo + hi);
                let ok = landscape
                    .step(y, dir, sign * mid)
                    .and_then(|z| landscape.score(&z))
                    .is_some_and(|s| s.feasible());
                if ok {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let Some(z) = landscape.step(y, dir, sign * hi) else {
                continue;
            };
            let Some(sz) = landscape.score(&z) else {
                continue;
            };
            let bar = best.as_ref().map_or(to_beat, |b| b.1.objective);
            if sz.feasible() && sz.objective > bar + IMPROVEMENT {
                best = Some((z, sz));
            }
        }
    }
    best
}

/// The same domain with the constraint slack as the objective and no
/// constraint; maximizing it finds a feasible start.
pub(crate) struct SlackOnly<'a, L>(pub &'a L);

impl<L: Landscape> Landscape for SlackOnly<'_, L> {
    type Point = L::Point;

    fn directions(&self) -> usize {
        self.0.directions()
    }

    fn step(&self, x: &Self::Point, dir: usize, amount: f64) -> Option<Self::Point> {
        self.0.step(x, dir, amount)
    }

    fn score(&self, x: &Self::Point) -> Option<Score> {
        self.0.score(x).map(|s| Score {
            objective: s.slack,
            slack: 0.0,
        })
    }
}
