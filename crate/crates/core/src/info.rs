//! Entropies and mutual informations (in bits) over joint pmfs, plus the
//! side-information orderings used to compare a legitimate receiver with an
//! eavesdropper.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::numeric::xlog2x;
use crate::prob::{Channel, JointPmf, Pmf};
use crate::rng::{stream_rng, Stream};

/// Default margin for strict information inequalities.
pub const DEFAULT_MARGIN: f64 = 1e-9;

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let s: f64 = probs.iter().map(|&p| xlog2x(p)).sum();
    (-s).max(0.0)
}

/// Binary entropy without range checks; callers guarantee `q ∈ [0, 1]`.
#[inline]
pub(crate) fn h2(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        0.0
    } else {
        -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
    }
}

#[inline]
pub(crate) fn conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + (1.0 - a) * b
}

/// Shannon entropy of the marginal over `coords`, in bits.
pub fn entropy(j: &JointPmf, coords: &[usize]) -> Result<f64> {
    Ok(entropy_of(j.marginal(coords)?.probs()))
}

/// `H(A | C)`.
pub fn conditional_entropy(j: &JointPmf, a: &[usize], given: &[usize]) -> Result<f64> {
    disjoint(&[a, given])?;
    if given.is_empty() {
        return entropy(j, a);
    }
    let both = [a, given].concat();
    Ok((entropy(j, &both)? - entropy(j, given)?).max(0.0))
}

/// `h(q) = -q log₂ q - (1-q) log₂(1-q)`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("binary_entropy: {q} outside [0, 1]")));
    }
    Ok(h2(q))
}

/// Binary convolution `a ∗ b = a(1-b) + (1-a)b`.
pub fn binary_convolve(a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(invalid(format!(
            "binary_convolve: ({a}, {b}) outside [0, 1]"
        )));
    }
    Ok(conv(a, b))
}

fn disjoint(sets: &[&[usize]]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(c) = a.iter().find(|c| b.contains(c)) {
                return Err(invalid(format!(
                    "coordinate {c} appears in two argument sets"
                )));
            }
        }
    }
    Ok(())
}

/// `I(A; B) = H(A) + H(B) - H(A, B)`.
pub fn mutual_information(j: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    disjoint(&[a, b])?;
    let ab = [a, b].concat();
    Ok((entropy(j, a)? + entropy(j, b)? - entropy(j, &ab)?).max(0.0))
}

/// `I(A; B | C)`; an empty `c` gives the unconditional measure.
pub fn conditional_mutual_information(
    j: &JointPmf,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    disjoint(&[a, b, c])?;
    if c.is_empty() {
        return mutual_information(j, a, b);
    }
    let ac = [a, c].concat();
    let bc = [b, c].concat();
    let abc = [a, b, c].concat();
    let value = entropy(j, &ac)? + entropy(j, &bc)? - entropy(j, &abc)? - entropy(j, c)?;
    Ok(value.max(0.0))
}

/// Three-way outcome of a strict comparison evaluated with a margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StrictYes,
    StrictNo,
    WithinMargin,
}

impl Verdict {
    pub fn from_difference(diff: f64, margin: f64) -> Self {
        if diff > margin {
            Verdict::StrictYes
        } else if diff < -margin {
            Verdict::StrictNo
        } else {
            Verdict::WithinMargin
        }
    }
}

/// Joint of `(X, B, W)` with `B` and `W` conditionally independent given `X`.
pub fn side_information_joint(source: &Pmf, ch_b: &Channel, ch_w: &Channel) -> Result<JointPmf> {
    if ch_b.input_size() != source.len() || ch_w.input_size() != source.len() {
        return Err(invalid(
            "side-information channels must take the source alphabet as input",
        ));
    }
    source.to_joint().attach(&[0], ch_b)?.attach(&[0], ch_w)
}

/// Is `B` strictly more capable than `W`, i.e. `I(X;B) > I(X;W)`?
pub fn is_more_capable(
    source: &Pmf,
    ch_b: &Channel,
    ch_w: &Channel,
    margin: f64,
) -> Result<Verdict> {
    let j = side_information_joint(source, ch_b, ch_w)?;
    let gap = mutual_information(&j, &[0], &[1])? - mutual_information(&j, &[0], &[2])?;
    Ok(Verdict::from_difference(gap, margin))
}

/// Whether `X - B - W` holds for the given joint over `(X, B, W)`, tested as
/// `I(X; W | B) ≤ 1e-12`. Degradedness implies `B` is less noisy than `W`.
pub fn is_degraded(joint_xbw: &JointPmf) -> Result<bool> {
    if joint_xbw.rank() != 3 {
        return Err(invalid("is_degraded expects a joint over (X, B, W)"));
    }
    Ok(conditional_mutual_information(joint_xbw, &[0], &[2], &[1])? <= 1e-12)
}

/// A candidate `P(V|X)` and the informations it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub v_given_x: Channel,
    pub i_vb: f64,
    pub i_vw: f64,
}

/// Result of [`less_noisy_falsifier`].
///
/// `NoCounterexample` only means the search found none; it does not prove
/// the less-noisy ordering.
#[derive(Clone, Debug, PartialEq)]
pub enum LessNoisyOutcome {
    NoCounterexample {
        candidates: usize,
        /// A `V` with `I(V;B) = 0 < I(V;W)`, reported apart from genuine
        /// counterexamples because the ordering only constrains `V` with
        /// `I(V;B) > 0`.
        zero_information_leak: Option<Witness>,
    },
    Counterexample(Witness),
}

/// `I(V;B)` below this counts as zero.
const ZERO_INFORMATION: f64 = 1e-9;

fn witness(source: &Pmf, ch_b: &Channel, ch_w: &Channel, v: Channel) -> Result<Witness> {
    let j = side_information_joint(source, ch_b, ch_w)?.attach(&[0], &v)?;
    Ok(Witness {
        i_vb: mutual_information(&j, &[3], &[1])?,
        i_vw: mutual_information(&j, &[3], &[2])?,
        v_given_x: v,
    })
}

fn random_row<R: Rng>(rng: &mut R, size: usize, sparse: bool) -> Vec<f64> {
    let mut row: Vec<f64> = (0..size)
        .map(|_| {
            let e = -(1.0 - rng.random::<f64>()).ln();
            if sparse {
                e.powi(4)
            } else {
                e
            }
        })
        .collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

fn deterministic_maps(x_size: usize, v_card: usize) -> Vec<Channel> {
    let count = v_card
        .checked_pow(x_size as u32)
        .unwrap_or(usize::MAX)
        .min(4096);
    (0..count)
        .filter_map(|mut code| {
            let rows = (0..x_size)
                .map(|_| {
                    let v = code % v_card;
                    code /= v_card;
                    (0..v_card)
                        .map(|k| if k == v { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            Channel::new(rows).ok()
        })
        .collect()
}

/// Searches for `V` with `V - X - (B, W)`, `I(V;B) > 0` and `I(V;B) ≤ I(V;W)`.
///
/// Candidates are every deterministic map `X → V` followed by `trials`
/// random channels (half of them near-deterministic). Random candidate `i`
/// draws from its own substream of `seed`, so the outcome does not depend on
/// thread count.
pub fn less_noisy_falsifier(
    source: &Pmf,
    ch_b: &Channel,
    ch_w: &Channel,
    v_card: usize,
    trials: usize,
    seed: u64,
) -> Result<LessNoisyOutcome> {
    if v_card < 2 {
        return Err(invalid("less_noisy_falsifier needs |V| >= 2"));
    }
    if trials == 0 {
        return Err(invalid("less_noisy_falsifier needs at least one trial"));
    }
    side_information_joint(source, ch_b, ch_w)?;
    let x_size = source.len();

    let grid = deterministic_maps(x_size, v_card);
    let grid_len = grid.len();
    let candidate = |i: usize| -> Result<Witness> {
        let v = if i < grid_len {
            grid[i].clone()
        } else {
            let mut rng = stream_rng(seed, Stream::Falsifier, i as u64);
            let sparse = i % 2 == 1;
            let rows = (0..x_size)
                .map(|_| random_row(&mut rng, v_card, sparse))
                .collect();
            Channel::new(rows)?
        };
        witness(source, ch_b, ch_w, v)
    };
    let total = grid_len + trials;
    let is_violation = |w: &Witness| w.i_vb > ZERO_INFORMATION && w.i_vb - w.i_vw <= 1e-12;

    let found = (0..total)
        .into_par_iter()
        .map(&candidate)
        .find_first(|r| r.as_ref().map_or(true, is_violation));
    if let Some(r) = found {
        return Ok(LessNoisyOutcome::Counterexample(r?));
    }
    let leak = (0..total)
        .into_par_iter()
        .map(candidate)
        .find_first(|r| {
            r.as_ref().map_or(true, |w| {
                w.i_vb <= ZERO_INFORMATION && w.i_vw > ZERO_INFORMATION
            })
        })
        .transpose()?;
    Ok(LessNoisyOutcome::NoCounterexample {
        candidates: total,
        zero_information_leak: leak,
    })
}
