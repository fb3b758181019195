//! Inner and outer bounds on the achievable `(R, D_b, D_w)` region and the
//! search over auxiliary variables.
//!
//! A [`SystemSpec`] fixes the source and side-information joint `P(x, b, w)`
//! together with the two distortion measures. An [`AuxScheme`] picks
//! `P(v|x)`, `P(u|v)` and the receiver's reconstruction `y = φ(v, b)`. For a
//! scheme, the inner bound certifies every triple with
//!
//! * `R > I(V; X | B)`,
//! * `D_b ≥ E[d_b(X, φ(V, B))]`,
//! * `D_w ≤ min_{z(u, w)} E[d_w(X, z(U, W))]`,
//!
//! provided `I(V; B | U) > I(V; W | U)`. The outer bound keeps the first two
//! and caps `D_w` by the eavesdropper's distortion from `W` alone.
//!
//! No cardinality bound on `U` and `V` is known for the inner bound, so the
//! frontier found by [`optimize_inner`] is a lower estimate of the region.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::info::{
    conditional_entropy, conditional_mutual_information, side_information_joint, DEFAULT_MARGIN,
};
use crate::numeric::{argmin, CompensatedSum};
use crate::prob::{expected_distortion, Channel, DistortionMeasure, JointPmf, Pmf};
use crate::rng::{stream_rng, Stream};
use crate::search::{refine, Landscape, RefineOptions, Score, SlackOnly};

// Coordinates of the scheme joint.
const X: usize = 0;
const B: usize = 1;
const W: usize = 2;
const V: usize = 3;
const U: usize = 4;
const Y: usize = 5;

const SEEDS_BY_DW: usize = 3;
const SEEDS_BY_SLACK: usize = 2;

/// Source, side information and distortion measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    joint: JointPmf,
    d_b: DistortionMeasure,
    d_w: DistortionMeasure,
}

impl SystemSpec {
    /// `joint` is over `(X, B, W)`; both distortions take `X` as their row
    /// index.
    pub fn new(joint: JointPmf, d_b: DistortionMeasure, d_w: DistortionMeasure) -> Result<Self> {
        if joint.rank() != 3 {
            return Err(invalid(format!(
                "system joint must be over (X, B, W), got rank {}",
                joint.rank()
            )));
        }
        let x = joint.dims()[X];
        if d_b.source_size() != x || d_w.source_size() != x {
            return Err(invalid(format!(
                "distortion matrices must have {x} rows (one per source symbol)"
            )));
        }
        Ok(Self { joint, d_b, d_w })
    }

    /// `B` and `W` conditionally independent given `X`.
    pub fn from_channels(
        source: &Pmf,
        b_given_x: &Channel,
        w_given_x: &Channel,
        d_b: DistortionMeasure,
        d_w: DistortionMeasure,
    ) -> Result<Self> {
        Self::new(
            side_information_joint(source, b_given_x, w_given_x)?,
            d_b,
            d_w,
        )
    }

    /// Bern(p) source, BEC(α) legitimate side information, BSC(β)
    /// eavesdropper side information, Hamming distortion at both receivers.
    pub fn bec_bsc(p: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::from_channels(
            &Pmf::bernoulli(p)?,
            &Channel::bec(alpha)?,
            &Channel::bsc(beta)?,
            DistortionMeasure::hamming(2)?,
            DistortionMeasure::hamming(2)?,
        )
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn d_b(&self) -> &DistortionMeasure {
        &self.d_b
    }

    pub fn d_w(&self) -> &DistortionMeasure {
        &self.d_w
    }

    pub fn x_size(&self) -> usize {
        self.joint.dims()[X]
    }

    pub fn b_size(&self) -> usize {
        self.joint.dims()[B]
    }

    pub fn w_size(&self) -> usize {
        self.joint.dims()[W]
    }

    pub fn y_size(&self) -> usize {
        self.d_b.reconstruction_size()
    }

    pub fn z_size(&self) -> usize {
        self.d_w.reconstruction_size()
    }

    pub fn source(&self) -> Pmf {
        self.joint.marginal_pmf(&[X]).expect("rank checked")
    }
}

/// A deterministic map of two symbols, `f(a, b) ∈ {0, .., outputs-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DecisionTable", into = "DecisionTable")]
pub struct DecisionMap {
    rows: usize,
    cols: usize,
    outputs: usize,
    table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DecisionTable {
    outputs: usize,
    table: Vec<Vec<usize>>,
}

impl TryFrom<DecisionTable> for DecisionMap {
    type Error = Error;

    fn try_from(t: DecisionTable) -> Result<Self> {
        DecisionMap::new(t.outputs, t.table)
    }
}

impl From<DecisionMap> for DecisionTable {
    fn from(m: DecisionMap) -> Self {
        DecisionTable {
            outputs: m.outputs,
            table: m.table.chunks(m.cols).map(<[usize]>::to_vec).collect(),
        }
    }
}

impl DecisionMap {
    pub fn new(outputs: usize, table: Vec<Vec<usize>>) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || outputs == 0 {
            return Err(invalid("decision map must be nonempty"));
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for row in table {
            if row.len() != cols {
                return Err(invalid("decision map rows differ in length"));
            }
            if let Some(&bad) = row.iter().find(|&&y| y >= outputs) {
                return Err(invalid(format!("decision value {bad} >= {outputs}")));
            }
            flat.extend(row);
        }
        Ok(Self {
            rows,
            cols,
            outputs,
            table: flat,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        outputs: usize,
        f: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        Self::new(
            outputs,
            (0..rows)
                .map(|a| (0..cols).map(|b| f(a, b)).collect())
                .collect(),
        )
    }

    pub fn get(&self, a: usize, b: usize) -> usize {
        self.table[a * self.cols + b]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }
}

/// Auxiliary choice `(P(v|x), P(u|v), φ, z)`. The `z_map` is advisory: the
/// evaluator always uses the best eavesdropper estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxScheme {
    pub v_given_x: Channel,
    pub u_given_v: Channel,
    pub phi: DecisionMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_map: Option<DecisionMap>,
}

impl AuxScheme {
    pub fn new(v_given_x: Channel, u_given_v: Channel, phi: DecisionMap) -> Self {
        Self {
            v_given_x,
            u_given_v,
            phi,
            z_map: None,
        }
    }

    /// `U` constant, with the receiver's best `φ` for this `V`.
    pub fn without_public_layer(spec: &SystemSpec, v_given_x: Channel) -> Result<Self> {
        let phi = optimal_phi(spec, &v_given_x)?;
        let u = Channel::constant(v_given_x.output_size(), &Pmf::point_mass(1, 0)?)?;
        Ok(Self::new(v_given_x, u, phi))
    }

    pub fn v_size(&self) -> usize {
        self.v_given_x.output_size()
    }

    pub fn u_size(&self) -> usize {
        self.u_given_v.output_size()
    }

    fn check(&self, spec: &SystemSpec) -> Result<()> {
        if self.v_given_x.input_size() != spec.x_size() {
            return Err(invalid("P(v|x) input alphabet must be the source alphabet"));
        }
        if self.u_given_v.input_size() != self.v_size() {
            return Err(invalid("P(u|v) input alphabet must be the V alphabet"));
        }
        if self.phi.rows() != self.v_size()
            || self.phi.cols() != spec.b_size()
            || self.phi.outputs() != spec.y_size()
        {
            return Err(invalid(
                "φ must map V × B into the receiver's reconstruction alphabet",
            ));
        }
        Ok(())
    }

    /// Joint over `(X, B, W, V, U)`.
    pub fn joint(&self, spec: &SystemSpec) -> Result<JointPmf> {
        self.check(spec)?;
        spec.joint
            .attach(&[X], &self.v_given_x)?
            .attach(&[V], &self.u_given_v)
    }
}

/// Quantities the inner bound attaches to one scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerEvaluation {
    /// `I(V; X | B)`.
    pub rate_min: f64,
    /// `E[d_b(X, φ(V, B))]`.
    pub db_min: f64,
    /// `min_{z(u,w)} E[d_w(X, z(U, W))]`.
    pub dw_max: f64,
    /// `I(V; B | U) - I(V; W | U)`.
    pub secrecy_slack: f64,
}

/// Quantities the outer bound attaches to one `(P(v|x), φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OuterEvaluation {
    pub rate_min: f64,
    pub db_min: f64,
    /// `min_{z(w)} E[d_w(X, z(W))]`, independent of `V`.
    pub dw_cap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AchievabilityStatus {
    InnerAchievable,
    OuterViolated,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateDistortionTriple {
    pub rate: f64,
    pub db: f64,
    pub dw: f64,
    pub status: AchievabilityStatus,
}

impl InnerEvaluation {
    /// Whether this evaluation certifies `(rate, db, dw)`; strict
    /// inequalities must hold by more than `margin`.
    pub fn certifies(&self, rate: f64, db: f64, dw: f64, margin: f64) -> bool {
        self.secrecy_slack > margin
            && rate > self.rate_min + margin
            && db >= self.db_min
            && dw <= self.dw_max
    }
}

/// Labels a triple against one scheme's inner evaluation and the outer
/// eavesdropper cap.
pub fn classify_triple(
    rate: f64,
    db: f64,
    dw: f64,
    inner: &InnerEvaluation,
    dw_cap: f64,
    margin: f64,
) -> Result<RateDistortionTriple> {
    if rate < 0.0 || db < 0.0 || dw < 0.0 {
        return Err(invalid("rate and distortions must be nonnegative"));
    }
    let status = if inner.certifies(rate, db, dw, margin) {
        AchievabilityStatus::InnerAchievable
    } else if dw > dw_cap + margin {
        AchievabilityStatus::OuterViolated
    } else {
        AchievabilityStatus::Undetermined
    };
    Ok(RateDistortionTriple {
        rate,
        db,
        dw,
        status,
    })
}

/// Expected distortion of the best estimator of coordinate `target` from the
/// coordinates `observed`: `Σ_o min_z Σ_x P(o, x) d(x, z)`.
pub fn best_estimate_distortion(
    joint: &JointPmf,
    observed: &[usize],
    target: usize,
    d: &DistortionMeasure,
) -> Result<f64> {
    if d.source_size() != joint.dims().get(target).copied().unwrap_or(0) {
        return Err(invalid(
            "distortion rows must match the estimated coordinate",
        ));
    }
    let mut coords = observed.to_vec();
    coords.push(target);
    let m = joint.marginal(&coords)?;
    let xs = d.source_size();
    let mut acc = CompensatedSum::new();
    for block in m.probs().chunks(xs) {
        let (_, best) = argmin(
            (0..d.reconstruction_size())
                .map(|z| block.iter().enumerate().map(|(x, p)| p * d.get(x, z)).sum()),
        );
        acc.add(best);
    }
    Ok(acc.value())
}

/// `Σ_{u,w} P(u,w) min_z Σ_x P(x|u,w) d_w(x,z)` for a joint over `(U, W, X)`.
pub fn eavesdropper_best_distortion(joint_uwx: &JointPmf, d_w: &DistortionMeasure) -> Result<f64> {
    if joint_uwx.rank() != 3 {
        return Err(invalid("expected a joint over (U, W, X)"));
    }
    best_estimate_distortion(joint_uwx, &[0, 1], 2, d_w)
}

/// The receiver's best reconstruction `φ(v, b) = argmin_y E[d_b(X, y) | v, b]`,
/// ties to the lowest symbol.
pub fn optimal_phi(spec: &SystemSpec, v_given_x: &Channel) -> Result<DecisionMap> {
    if v_given_x.input_size() != spec.x_size() {
        return Err(invalid("P(v|x) input alphabet must be the source alphabet"));
    }
    let vbx = spec.joint.attach(&[X], v_given_x)?.marginal(&[V, B, X])?;
    let (vs, bs, xs) = (v_given_x.output_size(), spec.b_size(), spec.x_size());
    let d = &spec.d_b;
    DecisionMap::from_fn(vs, bs, spec.y_size(), |v, b| {
        let block = &vbx.probs()[(v * bs + b) * xs..(v * bs + b + 1) * xs];
        argmin(
            (0..d.reconstruction_size())
                .map(|y| block.iter().enumerate().map(|(x, p)| p * d.get(x, y)).sum()),
        )
        .0
    })
}

fn receiver_distortion(spec: &SystemSpec, joint: &JointPmf, phi: &DecisionMap) -> Result<f64> {
    let with_y = joint.attach_function(&[V, B], spec.y_size(), |a| phi.get(a[0], a[1]))?;
    expected_distortion(&with_y.marginal(&[X, Y])?, &spec.d_b)
}

/// Evaluates one scheme against the inner bound. The eavesdropper term uses
/// the optimal `z(u, w)`, whatever `aux.z_map` says.
pub fn evaluate_inner(spec: &SystemSpec, aux: &AuxScheme) -> Result<InnerEvaluation> {
    let j = aux.joint(spec)?;
    Ok(InnerEvaluation {
        rate_min: conditional_mutual_information(&j, &[V], &[X], &[B])?,
        db_min: receiver_distortion(spec, &j, &aux.phi)?,
        dw_max: best_estimate_distortion(&j, &[U, W], X, &spec.d_w)?,
        secrecy_slack: conditional_mutual_information(&j, &[V], &[B], &[U])?
            - conditional_mutual_information(&j, &[V], &[W], &[U])?,
    })
}

/// `min_{z(w)} E[d_w(X, z(W))]`.
pub fn eavesdropper_cap(spec: &SystemSpec) -> Result<f64> {
    best_estimate_distortion(&spec.joint, &[W], X, &spec.d_w)
}

pub fn evaluate_outer(
    spec: &SystemSpec,
    v_given_x: &Channel,
    phi: &DecisionMap,
) -> Result<OuterEvaluation> {
    let aux = AuxScheme::new(
        v_given_x.clone(),
        Channel::constant(v_given_x.output_size(), &Pmf::point_mass(1, 0)?)?,
        phi.clone(),
    );
    let j = aux.joint(spec)?;
    Ok(OuterEvaluation {
        rate_min: conditional_mutual_information(&j, &[V], &[X], &[B])?,
        db_min: receiver_distortion(spec, &j, phi)?,
        dw_cap: eavesdropper_cap(spec)?,
    })
}

/// Search settings for [`optimize_inner`] and [`lossless_inner`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub card_u: usize,
    pub card_v: usize,
    /// Lattice entries are multiples of `1 / grid_resolution`.
    pub grid_resolution: usize,
    /// Maximum refinement sweeps.
    pub refine_iters: usize,
    pub seed: u64,
    pub margin: f64,
    /// Lattices larger than this are subsampled (seeded).
    pub max_lattice_points: usize,
    /// Optional receiver distortion constraint on every candidate.
    pub db_max: Option<f64>,
}

impl OptimizeOptions {
    /// Defaults `|U| = |X| + 1`, `|V| = |X| + 2`.
    pub fn for_spec(spec: &SystemSpec) -> Self {
        Self {
            card_u: spec.x_size() + 1,
            card_v: spec.x_size() + 2,
            grid_resolution: 8,
            refine_iters: 200,
            seed: 0,
            margin: DEFAULT_MARGIN,
            max_lattice_points: 20_000,
            db_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub rate: f64,
    pub db: f64,
    pub dw: f64,
    pub slack: f64,
    pub scheme_id: usize,
}

#[derive(Clone, Debug)]
pub struct InnerOptimum {
    /// Scheme with the largest eavesdropper distortion (ties: smaller `D_b`,
    /// then smaller rate).
    pub best: Option<(AuxScheme, InnerEvaluation)>,
    /// Pareto-optimal points: low rate, low `D_b`, high `D_w`.
    pub frontier: Vec<FrontierPoint>,
    /// Schemes referenced by `frontier[i].scheme_id`.
    pub schemes: Vec<(usize, AuxScheme)>,
    pub lattice_points: usize,
    pub feasible_points: usize,
    pub diagnostic: Option<String>,
}

impl InnerOptimum {
    pub fn scheme(&self, id: usize) -> Option<&AuxScheme> {
        self.schemes.iter().find(|(i, _)| *i == id).map(|(_, s)| s)
    }
}

/// All compositions of `total` into `parts` nonnegative parts.
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

fn random_composition<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    // stars and bars: choose parts-1 bar positions among total+parts-1 slots
    let slots = total + parts - 1;
    let mut bars: Vec<usize> = Vec::with_capacity(parts - 1);
    while bars.len() < parts - 1 {
        let b = rng.random_range(0..slots);
        if !bars.contains(&b) {
            bars.push(b);
        }
    }
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev: isize = -1;
    for &b in &bars {
        out.push((b as isize - prev - 1) as usize);
        prev = b as isize;
    }
    out.push((slots as isize - prev - 1) as usize);
    out
}

/// Rows of `P(v|x)` (unless fixed) followed by rows of `P(u|v)`.
#[derive(Clone, Debug, PartialEq)]
struct SchemePoint {
    rows: Vec<Vec<f64>>,
}

struct SchemeSpace<'a> {
    spec: &'a SystemSpec,
    fixed_v: Option<Channel>,
    card_v: usize,
    card_u: usize,
    margin: f64,
    db_max: Option<f64>,
    /// (row, i, j) for each move direction.
    moves: Vec<(usize, usize, usize)>,
}

impl<'a> SchemeSpace<'a> {
    fn new(
        spec: &'a SystemSpec,
        fixed_v: Option<Channel>,
        card_v: usize,
        card_u: usize,
        margin: f64,
        db_max: Option<f64>,
    ) -> Self {
        let mut space = Self {
            spec,
            fixed_v,
            card_v,
            card_u,
            margin,
            db_max,
            moves: Vec::new(),
        };
        for (r, width) in space.row_widths().into_iter().enumerate() {
            for i in 0..width {
                for j in i + 1..width {
                    space.moves.push((r, i, j));
                }
            }
        }
        space
    }

    fn row_widths(&self) -> Vec<usize> {
        let mut widths = Vec::new();
        if self.fixed_v.is_none() {
            widths.extend(std::iter::repeat_n(self.card_v, self.spec.x_size()));
        }
        widths.extend(std::iter::repeat_n(self.card_u, self.card_v));
        widths
    }

    fn scheme(&self, point: &SchemePoint) -> Result<AuxScheme> {
        let (v, u_rows) = match &self.fixed_v {
            Some(v) => (v.clone(), &point.rows[..]),
            None => {
                let xs = self.spec.x_size();
                (Channel::new(point.rows[..xs].to_vec())?, &point.rows[xs..])
            }
        };
        let u = Channel::new(u_rows.to_vec())?;
        let phi = optimal_phi(self.spec, &v)?;
        Ok(AuxScheme::new(v, u, phi))
    }

    fn evaluate(&self, point: &SchemePoint) -> Option<(InnerEvaluation, Score)> {
        let scheme = self.scheme(point).ok()?;
        let e = evaluate_inner(self.spec, &scheme).ok()?;
        let mut slack = e.secrecy_slack - self.margin;
        if let Some(db_max) = self.db_max {
            slack = slack.min(db_max - e.db_min);
        }
        Some((
            e,
            Score {
                objective: e.dw_max,
                slack,
            },
        ))
    }
}

impl Landscape for SchemeSpace<'_> {
    type Point = SchemePoint;

    fn directions(&self) -> usize {
        self.moves.len()
    }

    fn step(&self, x: &SchemePoint, dir: usize, amount: f64) -> Option<SchemePoint> {
        let (r, i, j) = self.moves[dir];
        let row = &x.rows[r];
        // mass moves from j to i for positive amounts
        let a = amount.clamp(-row[i], row[j]);
        if a == 0.0 {
            return None;
        }
        let mut y = x.clone();
        y.rows[r][i] += a;
        y.rows[r][j] -= a;
        y.rows[r][j] = y.rows[r][j].max(0.0);
        y.rows[r][i] = y.rows[r][i].max(0.0);
        Some(y)
    }

    fn score(&self, x: &SchemePoint) -> Option<Score> {
        self.evaluate(x).map(|(_, s)| s)
    }
}

fn better(a: &InnerEvaluation, b: &InnerEvaluation) -> bool {
    (a.dw_max, -a.db_min, -a.rate_min) > (b.dw_max, -b.db_min, -b.rate_min)
}

/// Tolerance for comparing frontier coordinates, so evaluation round-off
/// does not keep dominated points.
const FRONTIER_TOLERANCE: f64 = 1e-12;

fn pareto(points: &[FrontierPoint]) -> Vec<FrontierPoint> {
    let t = FRONTIER_TOLERANCE;
    let no_worse = |a: &FrontierPoint, b: &FrontierPoint| {
        a.rate <= b.rate + t && a.db <= b.db + t && a.dw >= b.dw - t
    };
    let dominates = |a: &FrontierPoint, b: &FrontierPoint| {
        no_worse(a, b) && (a.rate < b.rate - t || a.db < b.db - t || a.dw > b.dw + t)
    };
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.rate
            .total_cmp(&b.rate)
            .then(a.db.total_cmp(&b.db))
            .then(b.dw.total_cmp(&a.dw))
            .then(a.scheme_id.cmp(&b.scheme_id))
    });
    let mut front: Vec<FrontierPoint> = Vec::new();
    for p in sorted {
        if front.iter().any(|f| no_worse(f, &p)) {
            continue;
        }
        front.retain(|f| !dominates(&p, f));
        front.push(p);
    }
    front
}

fn run_search(space: &SchemeSpace<'_>, options: &OptimizeOptions) -> Result<InnerOptimum> {
    if options.grid_resolution < 2 {
        return Err(invalid("grid_resolution must be at least 2"));
    }
    let r = options.grid_resolution;
    let widths = space.row_widths();
    let lattices: Vec<Vec<Vec<usize>>> = widths.iter().map(|&w| compositions(r, w)).collect();
    let full: u128 = lattices.iter().map(|l| l.len() as u128).product();
    let sampled = full > options.max_lattice_points as u128;
    let count = if sampled {
        options.max_lattice_points
    } else {
        full as usize
    };

    let point_at = |index: usize| -> SchemePoint {
        let to_row = |c: &[usize]| c.iter().map(|&k| k as f64 / r as f64).collect::<Vec<f64>>();
        if sampled {
            let mut rng = stream_rng(options.seed, Stream::Lattice, index as u64);
            SchemePoint {
                rows: widths
                    .iter()
                    .map(|&w| to_row(&random_composition(&mut rng, r, w)))
                    .collect(),
            }
        } else {
            let mut rem = index;
            let mut rows = vec![Vec::new(); lattices.len()];
            for (k, lat) in lattices.iter().enumerate().rev() {
                rows[k] = to_row(&lat[rem % lat.len()]);
                rem /= lat.len();
            }
            SchemePoint { rows }
        }
    };

    let evaluated: Vec<Option<(InnerEvaluation, Score)>> = (0..count)
        .into_par_iter()
        .map(|i| space.evaluate(&point_at(i)))
        .collect();

    let frontier_point = |e: &InnerEvaluation, id: usize| FrontierPoint {
        rate: e.rate_min,
        db: e.db_min,
        dw: e.dw_max,
        slack: e.secrecy_slack,
        scheme_id: id,
    };
    let mut candidates = Vec::new();
    let mut by_dw = Vec::new();
    let mut by_slack = Vec::new();
    for (i, e) in evaluated.iter().enumerate() {
        let Some((eval, score)) = e else { continue };
        by_slack.push((score.slack, i));
        if score.feasible() {
            candidates.push(frontier_point(eval, i));
            by_dw.push((*eval, score.slack, i));
        }
    }
    let feasible_points = candidates.len();
    by_dw.sort_by(|a, b| {
        if better(&a.0, &b.0) {
            std::cmp::Ordering::Less
        } else if better(&b.0, &a.0) {
            std::cmp::Ordering::Greater
        } else {
            b.1.total_cmp(&a.1).then(a.2.cmp(&b.2))
        }
    });
    by_slack.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut seeds: Vec<usize> = by_dw.iter().take(SEEDS_BY_DW).map(|c| c.2).collect();
    for &(_, i) in by_slack.iter().take(SEEDS_BY_SLACK) {
        if !seeds.contains(&i) {
            seeds.push(i);
        }
    }

    let refine_options = RefineOptions {
        initial_step: 1.0 / r as f64,
        min_step: 1e-6,
        max_sweeps: options.refine_iters,
    };
    let refined: Vec<Option<(SchemePoint, InnerEvaluation)>> = seeds
        .par_iter()
        .map(|&i| {
            let mut x = point_at(i);
            let mut score = evaluated[i]?.1;
            if !score.feasible() {
                // infeasible seeds first climb the secrecy slack
                let phase1 = SlackOnly(space);
                let start = phase1.score(&x)?;
                x = refine(&phase1, x, start, refine_options).0;
                score = space.score(&x)?;
                if !score.feasible() {
                    return None;
                }
            }
            let (x, _) = refine(space, x, score, refine_options);
            let (eval, score) = space.evaluate(&x)?;
            score.feasible().then_some((x, eval))
        })
        .collect();
    let refined: Vec<(SchemePoint, InnerEvaluation)> = refined.into_iter().flatten().collect();

    let mut best: Option<(usize, InnerEvaluation)> = None;
    for (i, e) in by_dw.first().map(|c| (c.2, c.0)).into_iter().chain(
        refined
            .iter()
            .enumerate()
            .map(|(j, (_, e))| (count + j, *e)),
    ) {
        if best.as_ref().is_none_or(|(_, b)| better(&e, b)) {
            best = Some((i, e));
        }
    }
    for (j, (_, e)) in refined.iter().enumerate() {
        candidates.push(frontier_point(e, count + j));
    }

    let Some((best_id, best_eval)) = best else {
        return Ok(InnerOptimum {
            best: None,
            frontier: Vec::new(),
            schemes: Vec::new(),
            lattice_points: count,
            feasible_points: 0,
            diagnostic: Some(format!(
                "infeasible: none of {count} lattice schemes (or their slack-climbing refinements) satisfies I(V;B|U) - I(V;W|U) > {:e}{}",
                options.margin,
                options.db_max.map_or(String::new(), |d| format!(" with D_b <= {d}"))
            )),
        });
    };

    let frontier = pareto(&candidates);
    let scheme_for = |id: usize| -> Result<AuxScheme> {
        if id >= count {
            space.scheme(&refined[id - count].0)
        } else {
            space.scheme(&point_at(id))
        }
    };
    let mut schemes = Vec::with_capacity(frontier.len() + 1);
    for f in &frontier {
        schemes.push((f.scheme_id, scheme_for(f.scheme_id)?));
    }
    if !schemes.iter().any(|(i, _)| *i == best_id) {
        schemes.push((best_id, scheme_for(best_id)?));
    }
    Ok(InnerOptimum {
        best: Some((scheme_for(best_id)?, best_eval)),
        frontier,
        schemes,
        lattice_points: count,
        feasible_points,
        diagnostic: sampled.then(|| format!("lattice of {full} points subsampled to {count}")),
    })
}

/// Searches auxiliary schemes for the inner bound: a lattice over the rows of
/// `P(v|x)` and `P(u|v)` (subsampled with `seed` when too large), the best
/// receiver map for each, then local refinement of the scheme with the
/// largest eavesdropper distortion.
pub fn optimize_inner(spec: &SystemSpec, options: &OptimizeOptions) -> Result<InnerOptimum> {
    if options.card_u == 0 || options.card_v == 0 {
        return Err(invalid("cardinalities must be at least 1"));
    }
    let space = SchemeSpace::new(
        spec,
        None,
        options.card_v,
        options.card_u,
        options.margin,
        options.db_max,
    );
    run_search(&space, options)
}

/// Outcome of [`lossless_inner`].
#[derive(Clone, Debug, PartialEq)]
pub struct LosslessOptimum {
    /// `H(X | B)`.
    pub rate_min: f64,
    /// Best `min_{z(u,w)} E[d_w(X, z(U, W))]`, `None` if infeasible.
    pub dw_max: Option<f64>,
    pub best_u: Option<Channel>,
    /// `I(X;B|U) - I(X;W|U)` of `best_u`.
    pub slack: Option<f64>,
    pub diagnostic: Option<String>,
}

/// The lossless special case: `V = X`, so only `P(u|x)` is searched.
pub fn lossless_inner(
    spec: &SystemSpec,
    card_u: usize,
    grid_resolution: usize,
    seed: u64,
) -> Result<LosslessOptimum> {
    let options = OptimizeOptions {
        card_u,
        card_v: spec.x_size(),
        grid_resolution,
        seed,
        max_lattice_points: 100_000,
        ..OptimizeOptions::for_spec(spec)
    };
    lossless_inner_with(spec, &options)
}

pub fn lossless_inner_with(
    spec: &SystemSpec,
    options: &OptimizeOptions,
) -> Result<LosslessOptimum> {
    let xs = spec.x_size();
    if spec.y_size() != xs || *spec.d_b() != DistortionMeasure::hamming(xs)? {
        return Err(invalid("lossless_inner requires Hamming d_b with Y = X"));
    }
    if options.card_u == 0 {
        return Err(invalid("card_u must be at least 1"));
    }
    let rate_min = conditional_entropy(spec.joint(), &[X], &[B])?;
    let space = SchemeSpace::new(
        spec,
        Some(Channel::identity(xs)?),
        xs,
        options.card_u,
        options.margin,
        None,
    );
    let found = run_search(&space, options)?;
    Ok(match found.best {
        Some((scheme, eval)) => LosslessOptimum {
            rate_min,
            dw_max: Some(eval.dw_max),
            best_u: Some(scheme.u_given_v),
            slack: Some(eval.secrecy_slack),
            diagnostic: found.diagnostic,
        },
        None => LosslessOptimum {
            rate_min,
            dw_max: None,
            best_u: None,
            slack: None,
            diagnostic: found.diagnostic,
        },
    })
}

/// Writes a frontier as CSV rows `R_bits,Db,Dw,slack,scheme_id` (no header).
pub fn write_frontier_rows<Wr: std::io::Write>(
    out: &mut Wr,
    frontier: &[FrontierPoint],
) -> std::io::Result<()> {
    for f in frontier {
        writeln!(
            out,
            "{},{},{},{},{}",
            f.rate, f.db, f.dw, f.slack, f.scheme_id
        )?;
    }
    Ok(())
}

pub const FRONTIER_HEADER: &str = "R_bits,Db,Dw,slack,scheme_id";
