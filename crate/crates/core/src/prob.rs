//! Dense finite-alphabet probability: pmfs, joint pmfs, channels, distortion
//! measures and total variation distance.
//!
//! Every value is immutable after construction. Constructors accept inputs
//! whose mass is within [`SUM_TOLERANCE`] of one and renormalize them; inputs
//! further off are rejected, as are negative or non-finite entries.
//!
//! Joint pmfs are stored row-major: the last coordinate varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{advance, compensated_sum};

/// Largest deviation of the total mass from one that constructors repair.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Negative entries down to this magnitude are treated as float noise and
/// clamped to zero.
const NEGATIVE_NOISE: f64 = 1e-12;

/// Default cap on the number of dense entries an enumeration may create.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 26;

/// A finite alphabet `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("alphabet size must be at least 1"));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn symbols(self) -> std::ops::Range<usize> {
        0..self.0
    }
}

fn validated(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(invalid("a pmf needs at least one entry"));
    }
    for (index, p) in probs.iter_mut().enumerate() {
        if !p.is_finite() || *p < -NEGATIVE_NOISE {
            return Err(Error::InvalidProbability { index, value: *p });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum = compensated_sum(&probs);
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotNormalized {
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}

/// A probability mass function over one finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Ok(Self {
            probs: validated(probs)?,
        })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        Alphabet::new(size)?;
        if symbol >= size {
            return Err(invalid(format!(
                "symbol {symbol} outside alphabet of size {size}"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    /// Bernoulli pmf with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn to_joint(&self) -> JointPmf {
        JointPmf {
            dims: vec![self.probs.len()],
            probs: self.probs.clone(),
        }
    }

    /// Samples a symbol from a uniform draw `u ∈ [0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        sample_index(&self.probs, u)
    }
}

pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A pmf over the product of several finite alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

fn product_len(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        if d == 0 {
            return Err(invalid("alphabet size must be at least 1"));
        }
        acc.checked_mul(d)
            .ok_or_else(|| invalid("product alphabet overflows usize"))
    })
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(invalid("a joint pmf needs at least one coordinate"));
        }
        let len = product_len(&dims)?;
        if len != probs.len() {
            return Err(invalid(format!(
                "dims {dims:?} need {len} entries, got {}",
                probs.len()
            )));
        }
        Ok(Self {
            dims,
            probs: validated(probs)?,
        })
    }

    /// Product pmf `p ⊗ q` with the coordinates of `p` first.
    pub fn product(&self, other: &JointPmf) -> JointPmf {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for &a in &self.probs {
            for &b in &other.probs {
                probs.push(a * b);
            }
        }
        JointPmf { dims, probs }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn alphabets(&self) -> Vec<Alphabet> {
        self.dims.iter().map(|&d| Alphabet(d)).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn prob(&self, index: &[usize]) -> f64 {
        self.probs[self.offset(index)]
    }

    fn check_coords(&self, coords: &[usize], what: &str) -> Result<()> {
        if coords.is_empty() {
            return Err(invalid(format!("{what}: coordinate set is empty")));
        }
        for (i, &c) in coords.iter().enumerate() {
            if c >= self.dims.len() {
                return Err(invalid(format!(
                    "{what}: coordinate {c} out of range for rank {}",
                    self.dims.len()
                )));
            }
            if coords[..i].contains(&c) {
                return Err(invalid(format!("{what}: coordinate {c} repeated")));
            }
        }
        Ok(())
    }

    /// Sums out every coordinate not in `keep`. The result's coordinates are
    /// ordered as listed in `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointPmf> {
        self.check_coords(keep, "marginal")?;
        let out_dims: Vec<usize> = keep.iter().map(|&c| self.dims[c]).collect();
        let out_strides = strides(&out_dims);
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut index = vec![0; self.dims.len()];
        for &p in &self.probs {
            let slot: usize = keep
                .iter()
                .zip(&out_strides)
                .map(|(&c, &s)| index[c] * s)
                .sum();
            out[slot] += p;
            advance(&mut index, &self.dims);
        }
        Ok(JointPmf {
            dims: out_dims,
            probs: out,
        })
    }

    /// Marginal over `keep`, flattened row-major into a single-alphabet pmf.
    pub fn marginal_pmf(&self, keep: &[usize]) -> Result<Pmf> {
        Ok(Pmf {
            probs: self.marginal(keep)?.probs,
        })
    }

    /// Conditional distribution of the remaining coordinates given `given`.
    ///
    /// Inputs and outputs are flattened row-major in coordinate order. Rows
    /// whose conditioning probability is zero are left undefined.
    pub fn condition(&self, given: &[usize]) -> Result<ConditionalPmf> {
        self.check_coords(given, "condition")?;
        let rest: Vec<usize> = (0..self.rank()).filter(|c| !given.contains(c)).collect();
        if rest.is_empty() {
            return Err(invalid("condition: nothing left to condition"));
        }
        let mut order = given.to_vec();
        order.extend_from_slice(&rest);
        let arranged = self.marginal(&order)?;
        let input: usize = given.iter().map(|&c| self.dims[c]).product();
        let output: usize = rest.iter().map(|&c| self.dims[c]).product();
        let rows = arranged
            .probs
            .chunks(output)
            .map(|row| {
                let mass = compensated_sum(row);
                (mass > 0.0).then(|| row.iter().map(|p| p / mass).collect())
            })
            .collect();
        Ok(ConditionalPmf {
            input_dims: given.iter().map(|&c| self.dims[c]).collect(),
            output_dims: rest.iter().map(|&c| self.dims[c]).collect(),
            input,
            output,
            rows,
        })
    }

    /// Appends a coordinate drawn from `channel` whose input is the flattened
    /// value of `from` (row-major over those coordinates).
    pub fn attach(&self, from: &[usize], channel: &Channel) -> Result<JointPmf> {
        self.check_coords(from, "attach")?;
        let input: usize = from.iter().map(|&c| self.dims[c]).product();
        if input != channel.input {
            return Err(invalid(format!(
                "attach: channel input size {} does not match {input}",
                channel.input
            )));
        }
        let from_strides = strides(&from.iter().map(|&c| self.dims[c]).collect::<Vec<_>>());
        let mut probs = Vec::with_capacity(self.probs.len() * channel.output);
        let mut index = vec![0; self.dims.len()];
        for &p in &self.probs {
            let x: usize = from
                .iter()
                .zip(&from_strides)
                .map(|(&c, &s)| index[c] * s)
                .sum();
            probs.extend(channel.row(x).iter().map(|q| p * q));
            advance(&mut index, &self.dims);
        }
        let mut dims = self.dims.clone();
        dims.push(channel.output);
        Ok(JointPmf { dims, probs })
    }

    /// Applies a deterministic map to `from` and appends its value as a new
    /// coordinate of size `output`.
    pub fn attach_function(
        &self,
        from: &[usize],
        output: usize,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<JointPmf> {
        self.check_coords(from, "attach_function")?;
        let mut probs = vec![0.0; self.probs.len() * output];
        let mut index = vec![0; self.dims.len()];
        let mut args = vec![0; from.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            for (a, &c) in args.iter_mut().zip(from) {
                *a = index[c];
            }
            let y = f(&args);
            if y >= output {
                return Err(invalid(format!("attach_function: value {y} >= {output}")));
            }
            probs[flat * output + y] = p;
            advance(&mut index, &self.dims);
        }
        let mut dims = self.dims.clone();
        dims.push(output);
        Ok(JointPmf { dims, probs })
    }

    pub fn total_variation(&self, other: &JointPmf) -> Result<f64> {
        total_variation(self, other)
    }
}

/// A row-stochastic kernel from an input alphabet to an output alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    input: usize,
    output: usize,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input = rows.len();
        if input == 0 {
            return Err(invalid("a channel needs at least one input symbol"));
        }
        let output = rows[0].len();
        let mut flat = Vec::with_capacity(input * output);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output {
                return Err(invalid(format!(
                    "channel row {x} has {} entries, expected {output}",
                    row.len()
                )));
            }
            flat.extend(validated(row)?);
        }
        Ok(Self {
            input,
            output,
            rows: flat,
        })
    }

    pub fn from_flat(input: usize, output: usize, data: Vec<f64>) -> Result<Self> {
        if input == 0 || output == 0 || data.len() != input * output {
            return Err(invalid(format!(
                "channel {input}x{output} cannot hold {} entries",
                data.len()
            )));
        }
        Self::new(data.chunks(output).map(<[f64]>::to_vec).collect())
    }

    pub fn identity(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Ok(Self {
            input: size,
            output: size,
            rows,
        })
    }

    /// Every input maps to the same output pmf.
    pub fn constant(input: usize, pmf: &Pmf) -> Result<Self> {
        Alphabet::new(input)?;
        Ok(Self {
            input,
            output: pmf.len(),
            rows: pmf.probs().repeat(input),
        })
    }

    /// Binary symmetric channel with crossover `beta`.
    pub fn bsc(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid(format!("crossover {beta} outside [0, 1]")));
        }
        Self::new(vec![vec![1.0 - beta, beta], vec![beta, 1.0 - beta]])
    }

    /// Binary erasure channel; output symbol 2 is the erasure.
    pub fn bec(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!(
                "erasure probability {alpha} outside [0, 1]"
            )));
        }
        Self::new(vec![
            vec![1.0 - alpha, 0.0, alpha],
            vec![0.0, 1.0 - alpha, alpha],
        ])
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn output_size(&self) -> usize {
        self.output
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.output..(x + 1) * self.output]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.output + y]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.output)
    }

    /// The cascade `self` followed by `next`.
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.output != next.input {
            return Err(invalid(format!(
                "compose: output size {} does not feed input size {}",
                self.output, next.input
            )));
        }
        let mut rows = vec![0.0; self.input * next.output];
        for x in 0..self.input {
            for (y, &p) in self.row(x).iter().enumerate() {
                for (z, &q) in next.row(y).iter().enumerate() {
                    rows[x * next.output + z] += p * q;
                }
            }
        }
        Ok(Channel {
            input: self.input,
            output: next.output,
            rows,
        })
    }

    /// Output pmf when the input is distributed as `p`.
    pub fn output_pmf(&self, p: &Pmf) -> Result<Pmf> {
        push_through(p, self)?.marginal_pmf(&[1])
    }
}

/// Result of [`JointPmf::condition`]: a channel whose rows may be undefined
/// where the conditioning event has probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPmf {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    input: usize,
    output: usize,
    rows: Vec<Option<Vec<f64>>>,
}

impl ConditionalPmf {
    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn output_size(&self) -> usize {
        self.output
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    /// `None` when the conditioning symbol has zero probability.
    pub fn row(&self, x: usize) -> Option<&[f64]> {
        self.rows[x].as_deref()
    }

    pub fn is_defined(&self, x: usize) -> bool {
        self.rows[x].is_some()
    }

    /// Converts to a [`Channel`], failing if any row is undefined.
    pub fn into_channel(self) -> Result<Channel> {
        let output = self.output;
        let mut flat = Vec::with_capacity(self.input * output);
        for (x, row) in self.rows.into_iter().enumerate() {
            match row {
                Some(r) => flat.extend(r),
                None => {
                    return Err(invalid(format!(
                        "conditional row {x} is undefined (zero-probability condition)"
                    )))
                }
            }
        }
        Ok(Channel {
            input: self.input,
            output,
            rows: flat,
        })
    }

    /// Converts to a [`Channel`], substituting `fill` for undefined rows.
    pub fn into_channel_or(self, fill: &Pmf) -> Result<Channel> {
        if fill.len() != self.output {
            return Err(invalid("fill pmf does not match the output alphabet"));
        }
        let output = self.output;
        let input = self.input;
        let rows = self
            .rows
            .into_iter()
            .flat_map(|r| r.unwrap_or_else(|| fill.probs().to_vec()))
            .collect();
        Ok(Channel {
            input,
            output,
            rows,
        })
    }
}

/// A nonnegative per-letter distortion matrix `d(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionMeasure {
    source: usize,
    reconstruction: usize,
    values: Vec<f64>,
    d_max: f64,
}

impl DistortionMeasure {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let source = rows.len();
        if source == 0 || rows[0].is_empty() {
            return Err(invalid("distortion matrix must be nonempty"));
        }
        let reconstruction = rows[0].len();
        let mut values = Vec::with_capacity(source * reconstruction);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != reconstruction {
                return Err(invalid(format!("distortion row {x} has the wrong length")));
            }
            for (y, v) in row.into_iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!(
                        "distortion d({x},{y}) = {v} is not a finite nonnegative value"
                    )));
                }
                values.push(v);
            }
        }
        let d_max = values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            source,
            reconstruction,
            values,
            d_max,
        })
    }

    pub fn hamming(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        Self::new(
            (0..size)
                .map(|x| (0..size).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
                .collect(),
        )
    }

    pub fn source_size(&self) -> usize {
        self.source
    }

    pub fn reconstruction_size(&self) -> usize {
        self.reconstruction
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.reconstruction + y]
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.reconstruction)
    }
}

/// Joint pmf of `(input, output)` with entries `p(x) · c(y|x)`.
pub fn push_through(p: &Pmf, c: &Channel) -> Result<JointPmf> {
    if p.len() != c.input {
        return Err(invalid(format!(
            "push_through: pmf over {} symbols, channel input {}",
            p.len(),
            c.input
        )));
    }
    p.to_joint().attach(&[0], c)
}

/// The product pmf of `n` independent copies of `p`.
pub fn iid_extend(p: &Pmf, n: usize) -> Result<JointPmf> {
    iid_extend_with_budget(p, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn iid_extend_with_budget(p: &Pmf, n: usize, budget: u128) -> Result<JointPmf> {
    if n == 0 {
        return Err(invalid("blocklength must be at least 1"));
    }
    let requested = (p.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if requested > budget {
        return Err(Error::ResourceLimit {
            what: format!("i.i.d. extension of a {}-symbol pmf to n = {n}", p.len()),
            requested,
            budget,
        });
    }
    let single = p.to_joint();
    let mut joint = single.clone();
    for _ in 1..n {
        joint = joint.product(&single);
    }
    Ok(joint)
}

/// Total variation distance, computed as half the L1 distance.
pub fn total_variation(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.dims != q.dims {
        return Err(invalid(format!(
            "total_variation: alphabets {:?} and {:?} differ",
            p.dims, q.dims
        )));
    }
    Ok(tv_slices(&p.probs, &q.probs))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    let diffs: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect();
    (0.5 * compensated_sum(&diffs)).clamp(0.0, 1.0)
}

/// Nested numeric arrays, the text form of pmfs, joints and channels.
///
/// A joint over dims `[2, 3]` is written `[[a, b, c], [d, e, f]]`; the last
/// coordinate is innermost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NestedArray {
    Leaf(f64),
    List(Vec<NestedArray>),
}

impl NestedArray {
    /// Shape and row-major values; fails on ragged or empty nesting.
    pub fn shape_and_values(&self) -> Result<(Vec<usize>, Vec<f64>)> {
        match self {
            NestedArray::Leaf(v) => Ok((Vec::new(), vec![*v])),
            NestedArray::List(items) => {
                if items.is_empty() {
                    return Err(invalid("empty array"));
                }
                let mut shape = None;
                let mut values = Vec::new();
                for item in items {
                    let (s, v) = item.shape_and_values()?;
                    match &shape {
                        None => shape = Some(s),
                        Some(prev) if *prev != s => return Err(invalid("ragged nested array")),
                        _ => {}
                    }
                    values.extend(v);
                }
                let mut dims = vec![items.len()];
                dims.extend(shape.unwrap_or_default());
                Ok((dims, values))
            }
        }
    }

    pub fn from_shape(dims: &[usize], values: &[f64]) -> NestedArray {
        match dims.split_first() {
            None => NestedArray::Leaf(values[0]),
            Some((&first, rest)) => {
                let chunk = values.len() / first.max(1);
                NestedArray::List(
                    values
                        .chunks(chunk.max(1))
                        .map(|c| NestedArray::from_shape(rest, c))
                        .collect(),
                )
            }
        }
    }
}

impl Serialize for Pmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.probs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Pmf::new(Vec::<f64>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for JointPmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NestedArray::from_shape(&self.dims, &self.probs).serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointPmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let nested = NestedArray::deserialize(d)?;
        let (dims, values) = nested
            .shape_and_values()
            .map_err(serde::de::Error::custom)?;
        if dims.is_empty() {
            return Err(serde::de::Error::custom("a joint pmf must be an array"));
        }
        JointPmf::new(dims, values).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.rows().collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Channel::new(Vec::<Vec<f64>>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DistortionMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.rows().collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistortionMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DistortionMeasure::new(Vec::<Vec<f64>>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// `Σ j(x, y) d(x, y)` for a joint over source × reconstruction.
pub fn expected_distortion(j: &JointPmf, d: &DistortionMeasure) -> Result<f64> {
    if j.dims != [d.source, d.reconstruction] {
        return Err(invalid(format!(
            "expected_distortion: joint {:?} vs distortion {}x{}",
            j.dims, d.source, d.reconstruction
        )));
    }
    let terms: Vec<f64> = j.probs.iter().zip(&d.values).map(|(p, v)| p * v).collect();
    Ok(compensated_sum(&terms))
}
