//! Finite-blocklength simulation of the superposition scheme.
//!
//! Cloud centres `u^n(m_p, m_p')` carry the public layer and satellites
//! `v^n(m_p, m_p', m_s, m_s')` the secret layer. Only `(m_p, m_s)` is sent;
//! the primed indices are recovered by the receiver from its side
//! information. The encoder picks all four indices with probability
//! proportional to `P(x^n | v^n(m))`.
//!
//! The eavesdropper here is exact: its posterior over `x^n` is enumerated,
//! so the distortion it reports is that of the best possible estimator.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::info::{conditional_mutual_information, mutual_information};
use crate::numeric::{advance, argmin, CompensatedSum};
use crate::prob::{
    sample_index, tv_slices, Channel, DistortionMeasure, JointPmf, Pmf, DEFAULT_ENUMERATION_BUDGET,
};
use crate::region::{evaluate_inner, AuxScheme, DecisionMap, SystemSpec};
use crate::rng::{stream_rng, Stream};

/// Log-likelihoods closer than this count as ties in the ML decoder.
const TIE_TOLERANCE: f64 = 1e-9;

/// Normal-approximation 95% quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Per-letter rates in bits: public `rp`, virtual public `rpp`, secret `rs`,
/// virtual secret `rsp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeRates {
    pub rp: f64,
    pub rpp: f64,
    pub rs: f64,
    pub rsp: f64,
    pub n: usize,
}

/// Codebook index ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CodebookSizes {
    pub np: usize,
    pub npp: usize,
    pub ns: usize,
    pub nsp: usize,
}

impl CodebookSizes {
    pub fn clouds(&self) -> usize {
        self.np * self.npp
    }

    pub fn satellites(&self) -> usize {
        self.ns * self.nsp
    }

    pub fn messages(&self) -> usize {
        self.clouds() * self.satellites()
    }
}

fn size_for(n: usize, rate: f64) -> usize {
    let s = 2f64.powf(n as f64 * rate).round();
    if s.is_finite() && s < usize::MAX as f64 {
        (s as usize).max(1)
    } else {
        usize::MAX
    }
}

impl SchemeRates {
    pub fn new(rp: f64, rpp: f64, rs: f64, rsp: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("blocklength must be at least 1"));
        }
        for (name, r) in [("rp", rp), ("rpp", rpp), ("rs", rs), ("rsp", rsp)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid(format!(
                    "rate {name} = {r} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self {
            rp,
            rpp,
            rs,
            rsp,
            n,
        })
    }

    /// Rates placed inside the scheme's constraints. Two-sided intervals use
    /// `lo + margin·(hi - lo)`; one-sided lower bounds get `+ margin` bits.
    pub fn with_margin(info: &SchemeInformation, n: usize, margin: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&margin) {
            return Err(invalid("margin must lie in [0, 1)"));
        }
        let rsp = info.i_vw_given_u + margin * (info.i_vb_given_u - info.i_vw_given_u).max(0.0);
        let rpp = margin * info.i_ub;
        let rp = (info.i_ux - rpp).max(0.0) + margin;
        let rs = (info.i_xv_given_u - rsp).max(0.0) + margin;
        Self::new(rp, rpp, rs, rsp, n)
    }

    /// `round(2^{n·rate})`, at least 1.
    pub fn sizes(&self) -> CodebookSizes {
        CodebookSizes {
            np: size_for(self.n, self.rp),
            npp: size_for(self.n, self.rpp),
            ns: size_for(self.n, self.rs),
            nsp: size_for(self.n, self.rsp),
        }
    }

    /// `log2(size) / n` for each rate after rounding.
    pub fn realized(&self) -> SchemeRates {
        let s = self.sizes();
        let r = |k: usize| (k as f64).log2() / self.n as f64;
        SchemeRates {
            rp: r(s.np),
            rpp: r(s.npp),
            rs: r(s.ns),
            rsp: r(s.nsp),
            n: self.n,
        }
    }

    /// Constraints the realized rates break, as readable strings.
    pub fn violations(&self, info: &SchemeInformation) -> Vec<String> {
        let r = self.realized();
        let mut out = Vec::new();
        if r.rp + r.rpp <= info.i_ux {
            out.push(format!(
                "Rp + Rp' = {:.4} <= I(U;X) = {:.4}",
                r.rp + r.rpp,
                info.i_ux
            ));
        }
        if r.rpp > 0.0 && r.rpp >= info.i_ub {
            out.push(format!("Rp' = {:.4} >= I(U;B) = {:.4}", r.rpp, info.i_ub));
        }
        if r.rs + r.rsp <= info.i_xv_given_u {
            out.push(format!(
                "Rs + Rs' = {:.4} <= I(X;V|U) = {:.4}",
                r.rs + r.rsp,
                info.i_xv_given_u
            ));
        }
        if r.rsp <= info.i_vw_given_u {
            out.push(format!(
                "Rs' = {:.4} <= I(V;W|U) = {:.4}",
                r.rsp, info.i_vw_given_u
            ));
        }
        if r.rsp >= info.i_vb_given_u {
            out.push(format!(
                "Rs' = {:.4} >= I(V;B|U) = {:.4}",
                r.rsp, info.i_vb_given_u
            ));
        }
        out
    }
}

/// Single-letter quantities that bound the four rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeInformation {
    pub i_ux: f64,
    pub i_ub: f64,
    pub i_xv_given_u: f64,
    pub i_vw_given_u: f64,
    pub i_vb_given_u: f64,
}

impl SchemeInformation {
    pub fn of(spec: &SystemSpec, aux: &AuxScheme) -> Result<Self> {
        let j = aux.joint(spec)?; // (X, B, W, V, U)
        Ok(Self {
            i_ux: mutual_information(&j, &[4], &[0])?,
            i_ub: mutual_information(&j, &[4], &[1])?,
            i_xv_given_u: conditional_mutual_information(&j, &[0], &[3], &[4])?,
            i_vw_given_u: conditional_mutual_information(&j, &[3], &[2], &[4])?,
            i_vb_given_u: conditional_mutual_information(&j, &[3], &[1], &[4])?,
        })
    }
}

/// Indices of one encoded message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MessageTuple {
    pub mp: usize,
    pub mpp: usize,
    pub ms: usize,
    pub msp: usize,
}

/// Two-layer random codebook; symbols stored as `u8`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpositionCodebook {
    n: usize,
    sizes: CodebookSizes,
    u_card: usize,
    v_card: usize,
    u_words: Vec<u8>,
    v_words: Vec<u8>,
    seed: u64,
}

impl SuperpositionCodebook {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> CodebookSizes {
        self.sizes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn u_card(&self) -> usize {
        self.u_card
    }

    pub fn v_card(&self) -> usize {
        self.v_card
    }

    pub fn u_word(&self, mp: usize, mpp: usize) -> &[u8] {
        let i = mp * self.sizes.npp + mpp;
        &self.u_words[i * self.n..(i + 1) * self.n]
    }

    pub fn v_word(&self, m: MessageTuple) -> &[u8] {
        self.v_word_flat(self.flat_index(m))
    }

    /// `((mp·Np' + mp')·Ns + ms)·Ns' + ms'`.
    pub fn flat_index(&self, m: MessageTuple) -> usize {
        let s = self.sizes;
        ((m.mp * s.npp + m.mpp) * s.ns + m.ms) * s.nsp + m.msp
    }

    pub fn message(&self, flat: usize) -> MessageTuple {
        let s = self.sizes;
        let msp = flat % s.nsp;
        let rest = flat / s.nsp;
        let ms = rest % s.ns;
        let rest = rest / s.ns;
        MessageTuple {
            mp: rest / s.npp,
            mpp: rest % s.npp,
            ms,
            msp,
        }
    }

    fn v_word_flat(&self, flat: usize) -> &[u8] {
        &self.v_words[flat * self.n..(flat + 1) * self.n]
    }
}

/// Draws `u^n` words i.i.d. from `p_u` and, per cloud, satellites from
/// `P(v|u)` letter by letter. Deterministic in `seed`.
pub fn generate_codebook(
    p_u: &Pmf,
    v_given_u: &Channel,
    rates: &SchemeRates,
    seed: u64,
) -> Result<SuperpositionCodebook> {
    if v_given_u.input_size() != p_u.len() {
        return Err(invalid("P(v|u) input alphabet must match P(u)"));
    }
    if p_u.len() > 256 || v_given_u.output_size() > 256 {
        return Err(invalid("codebook alphabets are limited to 256 symbols"));
    }
    let sizes = rates.sizes();
    let n = rates.n;
    let symbols = (sizes.np as u128)
        .saturating_mul(sizes.npp as u128)
        .saturating_mul(sizes.satellites() as u128 + 1)
        .saturating_mul(n as u128);
    if symbols > DEFAULT_ENUMERATION_BUDGET {
        return Err(Error::ResourceLimit {
            what: "codebook symbols".into(),
            requested: symbols,
            budget: DEFAULT_ENUMERATION_BUDGET,
        });
    }
    let mut rng = stream_rng(seed, Stream::Codebook, 0);
    let clouds = sizes.clouds();
    let mut u_words = Vec::with_capacity(clouds * n);
    for _ in 0..clouds * n {
        u_words.push(sample_index(p_u.probs(), rng.random()) as u8);
    }
    let mut v_words = Vec::with_capacity(sizes.messages() * n);
    for c in 0..clouds {
        let u = &u_words[c * n..(c + 1) * n];
        for _ in 0..sizes.satellites() {
            for &ut in u {
                v_words.push(sample_index(v_given_u.row(ut as usize), rng.random()) as u8);
            }
        }
    }
    Ok(SuperpositionCodebook {
        n,
        sizes,
        u_card: p_u.len(),
        v_card: v_given_u.output_size(),
        u_words,
        v_words,
        seed,
    })
}

fn ln_table(ch: &Channel) -> Vec<Vec<f64>> {
    ch.rows()
        .map(|r| r.iter().map(|p| p.ln()).collect())
        .collect()
}

fn check_sequence(seq: &[usize], n: usize, card: usize, what: &str) -> Result<()> {
    if seq.len() != n {
        return Err(invalid(format!(
            "{what} has length {}, expected {n}",
            seq.len()
        )));
    }
    if let Some(&s) = seq.iter().find(|&&s| s >= card) {
        return Err(invalid(format!(
            "{what} symbol {s} outside alphabet of size {card}"
        )));
    }
    Ok(())
}

/// `P_E(m | x^n)` over all flat message indices, normalized in the log
/// domain.
pub fn encoder_distribution(
    cb: &SuperpositionCodebook,
    x: &[usize],
    x_given_v: &Channel,
) -> Result<Vec<f64>> {
    if x_given_v.input_size() != cb.v_card {
        return Err(invalid("P(x|v) input alphabet must match the codebook"));
    }
    check_sequence(x, cb.n, x_given_v.output_size(), "source sequence")?;
    let ln = ln_table(x_given_v);
    encoder_weights(cb, x, &ln).ok_or(Error::EncodingFailure)
}

fn encoder_weights(cb: &SuperpositionCodebook, x: &[usize], ln: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = cb.sizes.messages();
    let mut logs = Vec::with_capacity(m);
    let mut max = f64::NEG_INFINITY;
    for i in 0..m {
        let v = cb.v_word_flat(i);
        let l: f64 = v.iter().zip(x).map(|(&vt, &xt)| ln[vt as usize][xt]).sum();
        max = max.max(l);
        logs.push(l);
    }
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut total = CompensatedSum::new();
    for l in logs.iter_mut() {
        *l = (*l - max).exp();
        total.add(*l);
    }
    let total = total.value();
    for l in logs.iter_mut() {
        *l /= total;
    }
    Some(logs)
}

/// Samples `m` with probability proportional to `∏_t P(x_t | v_t(m))`.
pub fn likelihood_encode<R: Rng>(
    cb: &SuperpositionCodebook,
    x: &[usize],
    x_given_v: &Channel,
    rng: &mut R,
) -> Result<MessageTuple> {
    let probs = encoder_distribution(cb, x, x_given_v)?;
    Ok(cb.message(sample_index(&probs, rng.random())))
}

/// Likelihood model of the legitimate decoder.
#[derive(Clone, Debug, PartialEq)]
pub enum DecoderModel {
    /// `P(b | v)`.
    Marginal(Channel),
    /// `P(b | u, v)` with input index `u·|V| + v`.
    Joint(Channel),
}

/// Maximum-likelihood estimate of `(m_p', m_s')` within the sub-codebook
/// fixed by `(m_p, m_s)`; ties (log-likelihoods within a relative 1e-9) go
/// to the lexicographically lowest pair.
pub fn decode_legit(
    cb: &SuperpositionCodebook,
    mp: usize,
    ms: usize,
    b: &[usize],
    model: &DecoderModel,
) -> Result<(usize, usize)> {
    let (ch, joint) = match model {
        DecoderModel::Marginal(c) => (c, false),
        DecoderModel::Joint(c) => (c, true),
    };
    let table: Vec<Vec<f64>> = ch.rows().map(<[f64]>::to_vec).collect();
    decode_ml(cb, mp, ms, b, &table, joint)
}

/// [`decode_legit`] with an arbitrary nonnegative likelihood table
/// `lik[input][b]`, where the input is `v`, or `u·|V| + v` when `joint`.
/// Rows need not be normalized.
pub fn decode_ml(
    cb: &SuperpositionCodebook,
    mp: usize,
    ms: usize,
    b: &[usize],
    lik: &[Vec<f64>],
    joint: bool,
) -> Result<(usize, usize)> {
    let s = cb.sizes;
    if mp >= s.np || ms >= s.ns {
        return Err(invalid("message index out of range"));
    }
    let inputs = if joint {
        cb.u_card * cb.v_card
    } else {
        cb.v_card
    };
    if lik.len() != inputs {
        return Err(invalid(format!(
            "likelihood table needs {inputs} rows, got {}",
            lik.len()
        )));
    }
    let cols = lik.first().map_or(0, Vec::len);
    if lik.iter().flatten().any(|p| !(p.is_finite() && *p >= 0.0))
        || lik.iter().any(|r| r.len() != cols)
    {
        return Err(invalid(
            "likelihoods must be finite, nonnegative and rectangular",
        ));
    }
    check_sequence(b, cb.n, cols, "side information")?;
    let ln: Vec<Vec<f64>> = lik
        .iter()
        .map(|r| r.iter().map(|p| p.ln()).collect())
        .collect();
    let mut best = (0, 0);
    let mut best_score = f64::NEG_INFINITY;
    for ap in 0..s.npp {
        let u = cb.u_word(mp, ap);
        for asp in 0..s.nsp {
            let v = cb.v_word(MessageTuple {
                mp,
                mpp: ap,
                ms,
                msp: asp,
            });
            let score: f64 = (0..cb.n)
                .map(|t| {
                    let input = if joint {
                        u[t] as usize * cb.v_card + v[t] as usize
                    } else {
                        v[t] as usize
                    };
                    ln[input][b[t]]
                })
                .sum();
            let better = if best_score == f64::NEG_INFINITY {
                score > best_score
            } else {
                score - best_score > TIE_TOLERANCE * (1.0 + best_score.abs())
            };
            if better {
                best_score = score;
                best = (ap, asp);
            }
        }
    }
    Ok(best)
}

/// `y_t = φ(v_t, b_t)` along the decoded satellite.
pub fn reconstruct(
    cb: &SuperpositionCodebook,
    m: MessageTuple,
    b: &[usize],
    phi: &DecisionMap,
) -> Result<Vec<usize>> {
    let s = cb.sizes;
    if m.mp >= s.np || m.mpp >= s.npp || m.ms >= s.ns || m.msp >= s.nsp {
        return Err(invalid("message index out of range"));
    }
    if phi.rows() != cb.v_card {
        return Err(invalid("φ rows must match the V alphabet"));
    }
    check_sequence(b, cb.n, phi.cols(), "side information")?;
    Ok(cb
        .v_word(m)
        .iter()
        .zip(b)
        .map(|(&v, &bt)| phi.get(v as usize, bt))
        .collect())
}

/// All single-letter pieces the simulation needs, derived from one
/// `(spec, aux)` pair.
#[derive(Clone, Debug)]
pub struct SchemeModel {
    pub p_x: Pmf,
    pub p_u: Pmf,
    pub v_given_u: Channel,
    pub x_given_v: Channel,
    pub b_given_v: Channel,
    pub b_given_uv: Channel,
    /// `P(b, w | x)` with output index `b·|W| + w`.
    pub bw_given_x: Channel,
    pub w_given_x: Channel,
    pub d_b: DistortionMeasure,
    pub d_w: DistortionMeasure,
    pub phi: DecisionMap,
    pub info: SchemeInformation,
    /// Single-letter `E[d_b(X, φ(V, B))]`.
    pub expected_db: f64,
    /// Single-letter `min_{z(u,w)} E[d_w(X, z(U, W))]`.
    pub dw_inner: f64,
    /// Single-letter `min_{z(w)} E[d_w(X, z(W))]`.
    pub dw_perfect_secrecy: f64,
}

impl SchemeModel {
    pub fn new(spec: &SystemSpec, aux: &AuxScheme) -> Result<Self> {
        let j = aux.joint(spec)?; // (X, B, W, V, U)
        let e = evaluate_inner(spec, aux)?;
        let uniform = |k: usize| Pmf::uniform(k);
        let (bs, ws, vs) = (spec.b_size(), spec.w_size(), aux.v_size());
        let xbw = spec.joint();
        Ok(Self {
            p_x: spec.source(),
            p_u: j.marginal_pmf(&[4])?,
            v_given_u: j
                .marginal(&[4, 3])?
                .condition(&[0])?
                .into_channel_or(&uniform(vs)?)?,
            x_given_v: j
                .marginal(&[3, 0])?
                .condition(&[0])?
                .into_channel_or(&uniform(spec.x_size())?)?,
            b_given_v: j
                .marginal(&[3, 1])?
                .condition(&[0])?
                .into_channel_or(&uniform(bs)?)?,
            b_given_uv: j
                .marginal(&[4, 3, 1])?
                .condition(&[0, 1])?
                .into_channel_or(&uniform(bs)?)?,
            bw_given_x: xbw.condition(&[0])?.into_channel_or(&uniform(bs * ws)?)?,
            w_given_x: xbw
                .marginal(&[0, 2])?
                .condition(&[0])?
                .into_channel_or(&uniform(ws)?)?,
            d_b: spec.d_b().clone(),
            d_w: spec.d_w().clone(),
            phi: aux.phi.clone(),
            info: SchemeInformation::of(spec, aux)?,
            expected_db: e.db_min,
            dw_inner: e.dw_max,
            dw_perfect_secrecy: crate::region::eavesdropper_cap(spec)?,
        })
    }

    pub fn decoder(&self, joint: bool) -> DecoderModel {
        if joint {
            DecoderModel::Joint(self.b_given_uv.clone())
        } else {
            DecoderModel::Marginal(self.b_given_v.clone())
        }
    }
}

/// What the eavesdropper conditions on besides `w^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EavesdropperView {
    /// The transmitted `(m_p, m_s)`.
    Transmitted,
    /// `(m_p, m_p', m_s)`: a stronger eavesdropper that also knows the
    /// virtual public index.
    WithVirtualPublic,
}

/// Exact eavesdropper for a fixed codebook: tabulates `P(key | x^n)` for
/// every source sequence, where the key is the observed message part.
pub struct EavesdropperOracle {
    n: usize,
    x_card: usize,
    keys: usize,
    view: EavesdropperView,
    sizes: CodebookSizes,
    prior: Vec<f64>,
    table: Vec<f64>,
    w_given_x: Channel,
    d_w: DistortionMeasure,
}

/// Optimal per-letter estimate and its posterior expected distortion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EavesdropperEstimate {
    pub z: Vec<usize>,
    /// `(1/n) Σ_t min_z E[d_w(X_t, z) | observation]`.
    pub expected_distortion: f64,
    /// `P(observation)`; zero for impossible observations.
    pub evidence: f64,
}

impl EavesdropperOracle {
    pub fn new(
        cb: &SuperpositionCodebook,
        model: &SchemeModel,
        view: EavesdropperView,
    ) -> Result<Self> {
        let n = cb.n;
        let x_card = model.p_x.len();
        let seqs = (x_card as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        let work = seqs.saturating_mul(cb.sizes.messages() as u128);
        if work > DEFAULT_ENUMERATION_BUDGET {
            return Err(Error::ResourceLimit {
                what: "eavesdropper enumeration |X|^n·|M|".into(),
                requested: work,
                budget: DEFAULT_ENUMERATION_BUDGET,
            });
        }
        let seqs = seqs as usize;
        let s = cb.sizes;
        let keys = match view {
            EavesdropperView::Transmitted => s.np * s.ns,
            EavesdropperView::WithVirtualPublic => s.np * s.npp * s.ns,
        };
        let ln = ln_table(&model.x_given_v);
        let rows: Vec<(f64, Vec<f64>)> = (0..seqs)
            .into_par_iter()
            .map(|xi| {
                let x = unrank(xi, x_card, n);
                let prior: f64 = x.iter().map(|&a| model.p_x.prob(a)).product();
                let mut row = vec![0.0; keys];
                if prior > 0.0 {
                    let pe = encoder_weights(cb, &x, &ln).unwrap_or_default();
                    for (flat, p) in pe.into_iter().enumerate() {
                        let m = cb.message(flat);
                        let key = match view {
                            EavesdropperView::Transmitted => m.mp * s.ns + m.ms,
                            EavesdropperView::WithVirtualPublic => {
                                (m.mp * s.npp + m.mpp) * s.ns + m.ms
                            }
                        };
                        row[key] += p;
                    }
                }
                (prior, row)
            })
            .collect();
        let mut prior = Vec::with_capacity(seqs);
        let mut table = Vec::with_capacity(seqs * keys);
        for (p, row) in rows {
            prior.push(p);
            table.extend(row);
        }
        Ok(Self {
            n,
            x_card,
            keys,
            view,
            sizes: s,
            prior,
            table,
            w_given_x: model.w_given_x.clone(),
            d_w: model.d_w.clone(),
        })
    }

    pub fn view(&self) -> EavesdropperView {
        self.view
    }

    fn key(&self, m: MessageTuple) -> usize {
        match self.view {
            EavesdropperView::Transmitted => m.mp * self.sizes.ns + m.ms,
            EavesdropperView::WithVirtualPublic => {
                (m.mp * self.sizes.npp + m.mpp) * self.sizes.ns + m.ms
            }
        }
    }

    /// Per-letter joint `P(x_t = a, key, w^n)` as `[t][a]`.
    fn letter_joint(&self, key: usize, w: &[usize]) -> Vec<Vec<f64>> {
        let mut acc = vec![vec![CompensatedSum::new(); self.x_card]; self.n];
        let mut x = vec![0usize; self.n];
        let dims = vec![self.x_card; self.n];
        let mut xi = 0;
        loop {
            let pk = self.table[xi * self.keys + key];
            if pk > 0.0 {
                let pw: f64 = x
                    .iter()
                    .zip(w)
                    .map(|(&a, &wt)| self.w_given_x.prob(a, wt))
                    .product();
                let mass = self.prior[xi] * pk * pw;
                if mass > 0.0 {
                    for (t, &a) in x.iter().enumerate() {
                        acc[t][a].add(mass);
                    }
                }
            }
            xi += 1;
            if !advance(&mut x, &dims) {
                break;
            }
        }
        acc.into_iter()
            .map(|row| row.into_iter().map(|c| c.value()).collect())
            .collect()
    }

    fn best_letters(&self, joint: &[Vec<f64>]) -> (Vec<usize>, f64) {
        let mut z = Vec::with_capacity(self.n);
        let mut total = 0.0;
        for row in joint {
            let (zt, d) = argmin((0..self.d_w.reconstruction_size()).map(|c| {
                row.iter()
                    .enumerate()
                    .map(|(a, p)| p * self.d_w.get(a, c))
                    .sum()
            }));
            z.push(zt);
            total += d;
        }
        (z, total)
    }

    /// Best estimate from the observed part of `m` and `w^n`.
    pub fn estimate(&self, m: MessageTuple, w: &[usize]) -> Result<EavesdropperEstimate> {
        check_sequence(
            w,
            self.n,
            self.w_given_x.output_size(),
            "eavesdropper side information",
        )?;
        let joint = self.letter_joint(self.key(m), w);
        let evidence: f64 = joint.first().map_or(0.0, |r| r.iter().sum());
        let (z, unnormalized) = self.best_letters(&joint);
        Ok(EavesdropperEstimate {
            z,
            expected_distortion: if evidence > 0.0 {
                unnormalized / (evidence * self.n as f64)
            } else {
                0.0
            },
            evidence,
        })
    }

    /// Exact `min E[d_w(X^n, Z^n)] / n` over all estimators, by summing
    /// over every key and `w^n`.
    pub fn expected_distortion(&self) -> Result<f64> {
        let w_card = self.w_given_x.output_size();
        let ws = (w_card as u128)
            .checked_pow(self.n as u32)
            .unwrap_or(u128::MAX);
        let work = ws
            .saturating_mul(self.keys as u128)
            .saturating_mul(self.prior.len() as u128);
        if work > DEFAULT_ENUMERATION_BUDGET * 16 {
            return Err(Error::ResourceLimit {
                what: "exact eavesdropper expectation".into(),
                requested: work,
                budget: DEFAULT_ENUMERATION_BUDGET * 16,
            });
        }
        let parts: Vec<f64> = (0..ws as usize)
            .into_par_iter()
            .map(|wi| {
                let w = unrank(wi, w_card, self.n);
                (0..self.keys)
                    .map(|key| self.best_letters(&self.letter_joint(key, &w)).1)
                    .sum::<f64>()
            })
            .collect();
        let total: CompensatedSum = parts.into_iter().collect();
        Ok(total.value() / self.n as f64)
    }
}

/// Symbols of sequence `index` in base `card`, first letter most significant.
fn unrank(mut index: usize, card: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % card;
        index /= card;
    }
    out
}

/// One simulated block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub x: Vec<usize>,
    pub b: Vec<usize>,
    pub w: Vec<usize>,
    pub sent: MessageTuple,
    pub decoded: (usize, usize),
    pub y: Vec<usize>,
    pub d_b: Vec<f64>,
    pub z: Vec<usize>,
    pub d_w: Vec<f64>,
    /// Posterior expected per-letter distortion of the optimal eavesdropper.
    pub d_w_exact: f64,
}

/// Options for [`run_trials`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOptions {
    pub trials: usize,
    pub seed: u64,
    /// Decode with `P(b|u,v)` instead of `P(b|v)`.
    pub joint_decoder: bool,
    /// Skip the eavesdropper (its enumeration dominates at larger `n`).
    pub eavesdropper: bool,
}

impl TrialOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            joint_decoder: false,
            eavesdropper: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean_db: f64,
    pub mean_dw_exact: f64,
    pub mean_dw_realized: f64,
    pub dec_err: f64,
    /// 95% half-widths.
    pub ci_db: f64,
    pub ci_dw: f64,
    pub ci_dec_err: f64,
    pub expected_db: f64,
    pub db_max: f64,
    pub dw_inner: f64,
    pub dw_perfect_secrecy: f64,
    pub rates: SchemeRates,
    pub realized_rates: SchemeRates,
    pub sizes: CodebookSizes,
    pub info: SchemeInformation,
    pub rate_warnings: Vec<String>,
}

pub const SUMMARY_HEADER: &str = "n,trials,mean_db,mean_dw_exact,dec_err,ci_db,ci_dw,seed";

impl TrialSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.trials,
            self.mean_db,
            self.mean_dw_exact,
            self.dec_err,
            self.ci_db,
            self.ci_dw,
            self.seed
        )
    }

    /// Fidelity bound checkable from the run itself:
    /// `E[d_b] + d_b_max · (error rate) + 3 half-widths`.
    pub fn db_bound(&self) -> f64 {
        self.expected_db + self.db_max * self.dec_err + 3.0 * self.ci_db
    }
}

fn mean_and_half_width(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs
        .iter()
        .map(|x| (x - mean).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Full scheme, `trials` independent blocks over one codebook drawn from
/// `seed`. Trial `i` uses its own source and encoder streams.
pub fn run_trials(
    spec: &SystemSpec,
    aux: &AuxScheme,
    rates: &SchemeRates,
    options: &TrialOptions,
) -> Result<(TrialSummary, Vec<TrialRecord>)> {
    if options.trials == 0 {
        return Err(Error::EmptySummary);
    }
    let model = SchemeModel::new(spec, aux)?;
    let cb = generate_codebook(&model.p_u, &model.v_given_u, rates, options.seed)?;
    let oracle = if options.eavesdropper {
        Some(EavesdropperOracle::new(
            &cb,
            &model,
            EavesdropperView::Transmitted,
        )?)
    } else {
        None
    };
    let decoder = model.decoder(options.joint_decoder);
    let n = rates.n;
    let ws = spec.w_size();

    let records: Vec<Result<TrialRecord>> = (0..options.trials)
        .into_par_iter()
        .map(|trial| {
            let mut src = stream_rng(options.seed, Stream::Source, trial as u64);
            let mut x = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            let mut w = Vec::with_capacity(n);
            for _ in 0..n {
                let xt = sample_index(model.p_x.probs(), src.random());
                let bw = sample_index(model.bw_given_x.row(xt), src.random());
                x.push(xt);
                b.push(bw / ws);
                w.push(bw % ws);
            }
            let mut enc = stream_rng(options.seed, Stream::Encoder, trial as u64);
            let sent = likelihood_encode(&cb, &x, &model.x_given_v, &mut enc)?;
            let decoded = decode_legit(&cb, sent.mp, sent.ms, &b, &decoder)?;
            let y = reconstruct(
                &cb,
                MessageTuple {
                    mpp: decoded.0,
                    msp: decoded.1,
                    ..sent
                },
                &b,
                &model.phi,
            )?;
            let d_b = x
                .iter()
                .zip(&y)
                .map(|(&a, &c)| model.d_b.get(a, c))
                .collect();
            let (z, d_w, d_w_exact) = match &oracle {
                Some(o) => {
                    let est = o.estimate(sent, &w)?;
                    let d_w = x
                        .iter()
                        .zip(&est.z)
                        .map(|(&a, &c)| model.d_w.get(a, c))
                        .collect();
                    (est.z, d_w, est.expected_distortion)
                }
                None => (Vec::new(), Vec::new(), f64::NAN),
            };
            Ok(TrialRecord {
                trial,
                x,
                b,
                w,
                sent,
                decoded,
                y,
                d_b,
                z,
                d_w,
                d_w_exact,
            })
        })
        .collect();
    let records: Vec<TrialRecord> = records.into_iter().collect::<Result<_>>()?;

    let per_block = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let db: Vec<f64> = records.iter().map(|r| per_block(&r.d_b)).collect();
    let dw: Vec<f64> = records.iter().map(|r| r.d_w_exact).collect();
    let dw_real: Vec<f64> = records.iter().map(|r| per_block(&r.d_w)).collect();
    let err: Vec<f64> = records
        .iter()
        .map(|r| f64::from(u8::from(r.decoded != (r.sent.mpp, r.sent.msp))))
        .collect();
    let (mean_db, ci_db) = mean_and_half_width(&db);
    let (mean_dw_exact, ci_dw) = mean_and_half_width(&dw);
    let (mean_dw_realized, _) = mean_and_half_width(&dw_real);
    let (dec_err, ci_dec_err) = mean_and_half_width(&err);
    let summary = TrialSummary {
        n,
        trials: options.trials,
        seed: options.seed,
        mean_db,
        mean_dw_exact,
        mean_dw_realized,
        dec_err,
        ci_db,
        ci_dw,
        ci_dec_err,
        expected_db: model.expected_db,
        db_max: model.d_b.d_max(),
        dw_inner: model.dw_inner,
        dw_perfect_secrecy: model.dw_perfect_secrecy,
        rates: *rates,
        realized_rates: rates.realized(),
        sizes: cb.sizes,
        info: model.info,
        rate_warnings: rates.violations(&model.info),
    };
    Ok((summary, records))
}

/// Exact total variation per sampled codebook.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoftCoverResult {
    pub n: usize,
    pub rate: f64,
    pub codebook_size: usize,
    pub tvs: Vec<f64>,
    pub mean_tv: f64,
    pub std_err: f64,
}

impl SoftCoverResult {
    fn from_tvs(n: usize, rate: f64, codebook_size: usize, tvs: Vec<f64>) -> Self {
        let k = tvs.len() as f64;
        let mean = tvs.iter().sum::<f64>() / k;
        let std_err = if tvs.len() > 1 {
            (tvs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            rate,
            codebook_size,
            tvs,
            mean_tv: mean,
            std_err,
        }
    }
}

fn product_pmf(p: &Pmf, n: usize) -> Vec<f64> {
    let card = p.len();
    let total = card.pow(n as u32);
    (0..total)
        .map(|i| unrank(i, card, n).iter().map(|&a| p.prob(a)).product())
        .collect()
}

fn enumeration_check(what: &str, work: u128) -> Result<()> {
    if work > DEFAULT_ENUMERATION_BUDGET {
        Err(Error::ResourceLimit {
            what: what.into(),
            requested: work,
            budget: DEFAULT_ENUMERATION_BUDGET,
        })
    } else {
        Ok(())
    }
}

/// Output distribution of `words` (each weighted by `weights`) through
/// `x_given_v`, over all of `X^n`.
fn induced(words: &[Vec<usize>], weights: &[f64], x_given_v: &Channel, n: usize) -> Vec<f64> {
    let card = x_given_v.output_size();
    let total = card.pow(n as u32);
    (0..total)
        .into_par_iter()
        .map(|xi| {
            let x = unrank(xi, card, n);
            let mut acc = CompensatedSum::new();
            for (v, &wt) in words.iter().zip(weights) {
                acc.add(
                    wt * v
                        .iter()
                        .zip(&x)
                        .map(|(&vt, &xt)| x_given_v.prob(vt, xt))
                        .product::<f64>(),
                );
            }
            acc.value()
        })
        .collect()
}

/// Random codebooks of `round(2^{nR})` words i.i.d. from `p_v`, each
/// selected uniformly and sent through `x_given_v`; exact TV of the induced
/// `P(x^n)` to `target^n`.
pub fn softcover_tv(
    target: &Pmf,
    x_given_v: &Channel,
    p_v: &Pmf,
    rate: f64,
    n: usize,
    codebooks: usize,
    seed: u64,
) -> Result<SoftCoverResult> {
    if x_given_v.input_size() != p_v.len() || x_given_v.output_size() != target.len() {
        return Err(invalid("channel shape must match P(v) and the target"));
    }
    if n == 0 || codebooks == 0 || rate.is_nan() || rate < 0.0 {
        return Err(invalid(
            "need n >= 1, codebooks >= 1 and a nonnegative rate",
        ));
    }
    let size = size_for(n, rate);
    let seqs = (target.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    enumeration_check(
        "soft-covering |X|^n·codebook",
        seqs.saturating_mul(size as u128),
    )?;
    let q = product_pmf(target, n);
    let weights = vec![1.0 / size as f64; size];
    let tvs: Vec<f64> = (0..codebooks)
        .map(|c| {
            let mut rng = stream_rng(seed, Stream::Codebook, c as u64);
            let words: Vec<Vec<usize>> = (0..size)
                .map(|_| {
                    (0..n)
                        .map(|_| sample_index(p_v.probs(), rng.random()))
                        .collect()
                })
                .collect();
            tv_slices(&induced(&words, &weights, x_given_v, n), &q)
        })
        .collect();
    Ok(SoftCoverResult::from_tvs(n, rate, size, tvs))
}

/// The same TV with the codebook replaced by every sequence in `V^n`
/// weighted by `p_v^n`. Zero whenever `target` is the output of `p_v`.
pub fn softcover_tv_exhaustive(
    target: &Pmf,
    x_given_v: &Channel,
    p_v: &Pmf,
    n: usize,
) -> Result<f64> {
    if x_given_v.input_size() != p_v.len() || x_given_v.output_size() != target.len() {
        return Err(invalid("channel shape must match P(v) and the target"));
    }
    let vs = (p_v.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    let xs = (target.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    enumeration_check(
        "exhaustive soft-covering |V|^n·|X|^n",
        vs.saturating_mul(xs),
    )?;
    let words: Vec<Vec<usize>> = (0..vs as usize).map(|i| unrank(i, p_v.len(), n)).collect();
    let weights = product_pmf(p_v, n);
    Ok(tv_slices(
        &induced(&words, &weights, x_given_v, n),
        &product_pmf(target, n),
    ))
}

/// Two-layer source `P(u) P(v|u) P(x|u,v) P(z|x,u,v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredSource {
    pub p_u: Pmf,
    pub v_given_u: Channel,
    /// Input index `u·|V| + v`.
    pub x_given_uv: Channel,
    /// Input index `(x·|U| + u)·|V| + v`.
    pub z_given_xuv: Channel,
}

impl LayeredSource {
    pub fn new(
        p_u: Pmf,
        v_given_u: Channel,
        x_given_uv: Channel,
        z_given_xuv: Channel,
    ) -> Result<Self> {
        let (u, v) = (p_u.len(), v_given_u.output_size());
        if v_given_u.input_size() != u
            || x_given_uv.input_size() != u * v
            || z_given_xuv.input_size() != x_given_uv.output_size() * u * v
        {
            return Err(invalid("layered source channel shapes are inconsistent"));
        }
        Ok(Self {
            p_u,
            v_given_u,
            x_given_uv,
            z_given_xuv,
        })
    }

    /// Joint over `(U, V, X, Z)`.
    pub fn joint(&self) -> Result<JointPmf> {
        let j = self.p_u.to_joint().attach(&[0], &self.v_given_u)?;
        let j = j.attach(&[0, 1], &self.x_given_uv)?;
        j.marginal(&[2, 0, 1])?
            .attach(&[0, 1, 2], &self.z_given_xuv)?
            .marginal(&[1, 2, 0, 3])
    }

    /// `I(X; V | U)`.
    pub fn i_xv_given_u(&self) -> Result<f64> {
        conditional_mutual_information(&self.joint()?, &[2], &[1], &[0])
    }

    fn x_given_u(&self) -> Result<Channel> {
        let fill = Pmf::uniform(self.x_given_uv.output_size())?;
        self.joint()?
            .marginal(&[0, 2])?
            .condition(&[0])?
            .into_channel_or(&fill)
    }

    /// Input index `x·|U| + u`.
    fn z_given_xu(&self) -> Result<Channel> {
        let fill = Pmf::uniform(self.z_given_xuv.output_size())?;
        self.joint()?
            .marginal(&[2, 0, 3])?
            .condition(&[0, 1])?
            .into_channel_or(&fill)
    }
}

/// Exact TV between the induced `P(m_1, x^n, z^k)` of a sampled two-layer
/// codebook and its idealization `Q(m_1, x^n, z^k)` driven by the cloud
/// centres alone; `z` is observed on the first `k` letters.
pub fn superposition_softcover_tv(
    src: &LayeredSource,
    r1: f64,
    r2: f64,
    n: usize,
    k: usize,
    codebooks: usize,
    seed: u64,
) -> Result<SoftCoverResult> {
    if k > n || n == 0 || codebooks == 0 || !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(invalid(
            "need 0 <= k <= n, n >= 1, codebooks >= 1, nonnegative rates",
        ));
    }
    let (uc, vc) = (src.p_u.len(), src.v_given_u.output_size());
    let xc = src.x_given_uv.output_size();
    let zc = src.z_given_xuv.output_size();
    let (n1, n2) = (size_for(n, r1), size_for(n, r2));
    let cells = (xc as u128).pow(n as u32) * (zc as u128).pow(k as u32);
    enumeration_check(
        "superposition soft-covering N1·N2·|X|^n·|Z|^k",
        cells.saturating_mul(n1 as u128).saturating_mul(n2 as u128),
    )?;
    let cells = cells as usize;
    let x_given_u = src.x_given_u()?;
    let z_given_xu = src.z_given_xu()?;

    let tvs: Vec<f64> = (0..codebooks)
        .map(|c| {
            let mut rng = stream_rng(seed, Stream::Codebook, c as u64);
            let u_words: Vec<Vec<usize>> = (0..n1)
                .map(|_| {
                    (0..n)
                        .map(|_| sample_index(src.p_u.probs(), rng.random()))
                        .collect()
                })
                .collect();
            let v_words: Vec<Vec<Vec<usize>>> = u_words
                .iter()
                .map(|u| {
                    (0..n2)
                        .map(|_| {
                            u.iter()
                                .map(|&ut| sample_index(src.v_given_u.row(ut), rng.random()))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let per_cloud: Vec<f64> = (0..n1)
                .into_par_iter()
                .map(|m1| {
                    let u = &u_words[m1];
                    let mut p = vec![0.0; cells];
                    let mut q = vec![0.0; cells];
                    for (cell, (pc, qc)) in p.iter_mut().zip(q.iter_mut()).enumerate() {
                        let (x, z) = split_cell(cell, xc, n, zc, k);
                        let mut qv = 1.0;
                        for t in 0..n {
                            qv *= x_given_u.prob(u[t], x[t]);
                            if t < k {
                                qv *= z_given_xu.prob(x[t] * uc + u[t], z[t]);
                            }
                        }
                        *qc = qv / n1 as f64;
                        let mut acc = CompensatedSum::new();
                        for v in &v_words[m1] {
                            let mut pv = 1.0;
                            for t in 0..n {
                                pv *= src.x_given_uv.prob(u[t] * vc + v[t], x[t]);
                                if t < k {
                                    pv *=
                                        src.z_given_xuv.prob((x[t] * uc + u[t]) * vc + v[t], z[t]);
                                }
                            }
                            acc.add(pv);
                        }
                        *pc = acc.value() / (n1 * n2) as f64;
                    }
                    p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()
                })
                .collect();
            (0.5 * per_cloud.into_iter().collect::<CompensatedSum>().value()).clamp(0.0, 1.0)
        })
        .collect();
    Ok(SoftCoverResult::from_tvs(n, r2, n2, tvs))
}

/// Cell index to `(x^n, z^k)`, `x` most significant.
fn split_cell(cell: usize, xc: usize, n: usize, zc: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    let zs = zc.pow(k as u32);
    (unrank(cell / zs, xc, n), unrank(cell % zs, zc, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::optimal_phi;

    fn bec_bsc_aux(spec: &SystemSpec, v: Channel, u: Channel) -> AuxScheme {
        let phi = optimal_phi(spec, &v).unwrap();
        AuxScheme::new(v, u, phi)
    }

    fn trivial_u(v: usize) -> Channel {
        Channel::constant(v, &Pmf::point_mass(1, 0).unwrap()).unwrap()
    }

    #[test]
    fn sizes_round_and_floor_at_one() {
        let r = SchemeRates::new(0.0, 0.1, 0.5, 0.26, 8).unwrap();
        let s = r.sizes();
        assert_eq!((s.np, s.npp, s.ns, s.nsp), (1, 2, 16, 4));
        assert!((r.realized().rs - 0.5).abs() < 1e-12);
        assert!(SchemeRates::new(-0.1, 0.0, 0.0, 0.0, 4).is_err());
    }

    #[test]
    fn single_u_symbol_gives_identical_clouds() {
        let r = SchemeRates::new(0.5, 0.25, 0.25, 0.25, 4).unwrap();
        let cb = generate_codebook(
            &Pmf::point_mass(1, 0).unwrap(),
            &Channel::from_flat(1, 2, vec![0.5, 0.5]).unwrap(),
            &r,
            3,
        )
        .unwrap();
        let first = cb.u_word(0, 0).to_vec();
        for mp in 0..cb.sizes().np {
            for mpp in 0..cb.sizes().npp {
                assert_eq!(cb.u_word(mp, mpp), &first[..]);
            }
        }
    }

    #[test]
    fn zero_rates_single_pair() {
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 5).unwrap();
        let cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            1,
        )
        .unwrap();
        assert_eq!(cb.sizes().messages(), 1);
        assert_eq!(cb.u_word(0, 0), cb.v_word(cb.message(0)));
    }

    #[test]
    fn codebook_frequencies_concentrate() {
        let r = SchemeRates::new(1.0, 0.0, 0.0, 0.0, 8).unwrap();
        let cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            11,
        )
        .unwrap();
        let total = 256 * 8;
        let ones: usize = (0..256)
            .map(|m| cb.u_word(m, 0).iter().filter(|&&s| s == 1).count())
            .sum();
        let sigma = (total as f64 * 0.25).sqrt();
        assert!((ones as f64 - total as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn codebook_is_reproducible() {
        let r = SchemeRates::new(0.5, 0.25, 0.5, 0.25, 6).unwrap();
        let pu = Pmf::new(vec![0.3, 0.7]).unwrap();
        let vu = Channel::bsc(0.2).unwrap();
        assert_eq!(
            generate_codebook(&pu, &vu, &r, 5).unwrap(),
            generate_codebook(&pu, &vu, &r, 5).unwrap()
        );
        assert_ne!(
            generate_codebook(&pu, &vu, &r, 5).unwrap(),
            generate_codebook(&pu, &vu, &r, 6).unwrap()
        );
    }

    #[test]
    fn codebook_budget() {
        let r = SchemeRates::new(3.0, 0.0, 3.0, 0.0, 8).unwrap();
        let err = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn encoder_single_and_zero_likelihood() {
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 3).unwrap();
        let cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            2,
        )
        .unwrap();
        let x: Vec<usize> = cb
            .v_word(cb.message(0))
            .iter()
            .map(|&s| s as usize)
            .collect();
        let mut rng = stream_rng(0, Stream::Encoder, 0);
        assert_eq!(
            likelihood_encode(&cb, &x, &Channel::bsc(0.1).unwrap(), &mut rng).unwrap(),
            cb.message(0)
        );
        let other: Vec<usize> = x.iter().map(|&s| 1 - s).collect();
        assert_eq!(
            likelihood_encode(&cb, &other, &Channel::identity(2).unwrap(), &mut rng).unwrap_err(),
            Error::EncodingFailure
        );
    }

    #[test]
    fn encoder_skips_impossible_codeword() {
        // two satellites in one cloud; identity channel makes one impossible
        let r = SchemeRates::new(0.0, 0.0, 0.0, 1.0, 1).unwrap();
        let mut cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            0,
        )
        .unwrap();
        cb.v_words = vec![0, 1];
        let p = encoder_distribution(&cb, &[1], &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn encoder_ratio_four_to_one() {
        // P(x|v): x = v w.p. 0.8, ratio per letter 4; n = 2 words "00" vs "01" for x = "00"
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.5, 2).unwrap();
        let mut cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            0,
        )
        .unwrap();
        cb.v_words = vec![0, 0, 0, 1];
        let ch = Channel::bsc(0.2).unwrap();
        let p = encoder_distribution(&cb, &[0, 0], &ch).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-12);
        let mut rng = stream_rng(9, Stream::Encoder, 0);
        let draws = 10_000;
        let hits = (0..draws)
            .filter(|_| likelihood_encode(&cb, &[0, 0], &ch, &mut rng).unwrap().msp == 0)
            .count();
        let sigma = (draws as f64 * 0.8 * 0.2).sqrt();
        assert!((hits as f64 - 8000.0).abs() < 3.0 * sigma, "{hits}");
    }

    #[test]
    fn decoder_examples() {
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.25, 4).unwrap();
        let mut cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            0,
        )
        .unwrap();
        cb.v_words = vec![0, 1, 0, 1, 1, 1, 0, 0];
        let id = DecoderModel::Marginal(Channel::identity(2).unwrap());
        assert_eq!(decode_legit(&cb, 0, 0, &[1, 1, 0, 0], &id).unwrap(), (0, 1));
        assert_eq!(decode_legit(&cb, 0, 0, &[0, 1, 0, 1], &id).unwrap(), (0, 0));
        // all-erased BEC output ties: lowest index
        let bec = DecoderModel::Marginal(Channel::bec(0.5).unwrap());
        assert_eq!(
            decode_legit(&cb, 0, 0, &[2, 2, 2, 2], &bec).unwrap(),
            (0, 0)
        );

        let r1 = SchemeRates::new(1.0, 0.0, 1.0, 0.0, 4).unwrap();
        let cb1 = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r1,
            0,
        )
        .unwrap();
        assert_eq!(
            decode_legit(&cb1, 3, 2, &[1, 0, 1, 0], &id).unwrap(),
            (0, 0)
        );
    }

    #[test]
    fn reconstruct_examples() {
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 4).unwrap();
        let mut cb = generate_codebook(
            &Pmf::uniform(2).unwrap(),
            &Channel::identity(2).unwrap(),
            &r,
            0,
        )
        .unwrap();
        cb.v_words = vec![0, 1, 1, 0];
        let m = cb.message(0);
        let take_v = DecisionMap::from_fn(2, 3, 2, |v, _| v).unwrap();
        assert_eq!(
            reconstruct(&cb, m, &[2, 2, 0, 1], &take_v).unwrap(),
            vec![0, 1, 1, 0]
        );
        let take_b = DecisionMap::from_fn(2, 2, 2, |_, b| b).unwrap();
        assert_eq!(
            reconstruct(&cb, m, &[1, 1, 0, 0], &take_b).unwrap(),
            vec![1, 1, 0, 0]
        );
        let spec = SystemSpec::bec_bsc(0.5, 0.4, 0.1).unwrap();
        let wz = optimal_phi(&spec, &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(
            reconstruct(&cb, m, &[0, 2, 1, 2], &wz).unwrap(),
            vec![0, 1, 1, 0]
        );
    }

    #[test]
    fn eavesdropper_with_revealing_message() {
        // V = X, U constant, every x^n has its own codeword: message reveals x^n
        let spec = SystemSpec::bec_bsc(0.5, 0.4, 0.1).unwrap();
        let aux = bec_bsc_aux(&spec, Channel::identity(2).unwrap(), trivial_u(2));
        let model = SchemeModel::new(&spec, &aux).unwrap();
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 3).unwrap();
        let mut cb = generate_codebook(&model.p_u, &model.v_given_u, &r, 0).unwrap();
        cb.sizes = CodebookSizes {
            np: 1,
            npp: 1,
            ns: 8,
            nsp: 1,
        };
        cb.v_words = (0..8)
            .flat_map(|i| unrank(i, 2, 3))
            .map(|s| s as u8)
            .collect();
        let o = EavesdropperOracle::new(&cb, &model, EavesdropperView::Transmitted).unwrap();
        assert!(o.expected_distortion().unwrap().abs() < 1e-12);
        let est = o.estimate(cb.message(5), &[0, 0, 0]).unwrap();
        assert_eq!(est.z, vec![1, 0, 1]);
        assert!(est.expected_distortion.abs() < 1e-12);
    }

    #[test]
    fn eavesdropper_with_useless_message() {
        let spec = SystemSpec::bec_bsc(0.3, 0.4, 0.1).unwrap();
        let aux = bec_bsc_aux(&spec, Channel::identity(2).unwrap(), trivial_u(2));
        let model = SchemeModel::new(&spec, &aux).unwrap();
        let r = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 4).unwrap();
        let mut cb = generate_codebook(&model.p_u, &model.v_given_u, &r, 0).unwrap();
        cb.sizes = CodebookSizes {
            np: 1,
            npp: 1,
            ns: 2,
            nsp: 1,
        };
        cb.v_words = vec![0; 8];
        // both codewords identical, so the message carries nothing
        let model_noisy = SchemeModel {
            x_given_v: Channel::from_flat(2, 2, vec![0.7, 0.3, 0.7, 0.3]).unwrap(),
            ..model
        };
        let o = EavesdropperOracle::new(&cb, &model_noisy, EavesdropperView::Transmitted).unwrap();
        let d = o.expected_distortion().unwrap();
        assert!((d - model_noisy.dw_perfect_secrecy).abs() < 1e-12, "{d}");
    }

    #[test]
    fn eavesdropper_budget() {
        let spec = SystemSpec::bec_bsc(0.5, 0.4, 0.1).unwrap();
        let aux = bec_bsc_aux(&spec, Channel::bsc(0.05).unwrap(), trivial_u(2));
        let model = SchemeModel::new(&spec, &aux).unwrap();
        let r = SchemeRates::new(0.0, 0.0, 0.6, 0.0, 20).unwrap();
        let cb = generate_codebook(&model.p_u, &model.v_given_u, &r, 0).unwrap();
        assert!(matches!(
            EavesdropperOracle::new(&cb, &model, EavesdropperView::Transmitted),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn noiseless_trials_have_zero_distortion() {
        let id = Channel::identity(2).unwrap();
        let spec = SystemSpec::from_channels(
            &Pmf::bernoulli(0.5).unwrap(),
            &id,
            &Channel::bsc(0.2).unwrap(),
            DistortionMeasure::hamming(2).unwrap(),
            DistortionMeasure::hamming(2).unwrap(),
        )
        .unwrap();
        let blind = Channel::constant(2, &Pmf::point_mass(1, 0).unwrap()).unwrap();
        let aux = AuxScheme::new(
            blind,
            trivial_u(1),
            DecisionMap::from_fn(1, 2, 2, |_, b| b).unwrap(),
        );
        let rates = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 4).unwrap();
        let (s, _) = run_trials(&spec, &aux, &rates, &TrialOptions::new(20, 1)).unwrap();
        assert_eq!(s.mean_db, 0.0);
        assert_eq!(s.dec_err, 0.0);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let spec = SystemSpec::bec_bsc(0.5, 0.4, 0.1).unwrap();
        let aux = bec_bsc_aux(&spec, Channel::identity(2).unwrap(), trivial_u(2));
        let rates = SchemeRates::new(0.0, 0.0, 0.0, 0.0, 4).unwrap();
        assert_eq!(
            run_trials(&spec, &aux, &rates, &TrialOptions::new(0, 1)).unwrap_err(),
            Error::EmptySummary
        );
    }

    #[test]
    fn trials_reproducible() {
        let spec = SystemSpec::bec_bsc(0.5, 0.4, 0.1).unwrap();
        let aux = bec_bsc_aux(
            &spec,
            Channel::bsc(0.05).unwrap(),
            Channel::bsc(0.1).unwrap(),
        );
        let info = SchemeInformation::of(&spec, &aux).unwrap();
        let rates = SchemeRates::with_margin(&info, 5, 0.1).unwrap();
        let a = run_trials(&spec, &aux, &rates, &TrialOptions::new(30, 4)).unwrap();
        let b = run_trials(&spec, &aux, &rates, &TrialOptions::new(30, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.0.mean_dw_exact <= 0.5 + 1e-12);
    }

    #[test]
    fn softcover_extremes() {
        let ch = Channel::bsc(0.1).unwrap();
        let pv = Pmf::uniform(2).unwrap();
        let huge = softcover_tv(&pv, &ch, &pv, 3.0, 3, 3, 0).unwrap();
        let one = softcover_tv(&pv, &ch, &pv, 0.0, 3, 3, 0).unwrap();
        assert_eq!(one.codebook_size, 1);
        assert!(one.mean_tv > 0.3);
        assert!(huge.mean_tv < 0.1);
        assert!(softcover_tv_exhaustive(&pv, &ch, &pv, 4).unwrap() < 1e-12);
        let skew = Pmf::new(vec![0.3, 0.7]).unwrap();
        let target = ch.output_pmf(&skew).unwrap();
        assert!(softcover_tv_exhaustive(&target, &ch, &skew, 3).unwrap() < 1e-12);
    }

    #[test]
    fn superposition_degenerate_inner_layer() {
        let pu = Pmf::new(vec![0.4, 0.6]).unwrap();
        let src = LayeredSource::new(
            pu,
            Channel::identity(2).unwrap(),
            Channel::new(vec![
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.5, 0.5],
                vec![0.2, 0.8],
            ])
            .unwrap(),
            Channel::constant(8, &Pmf::new(vec![0.3, 0.7]).unwrap()).unwrap(),
        )
        .unwrap();
        let r = superposition_softcover_tv(&src, 0.5, 0.0, 4, 1, 3, 0).unwrap();
        assert!(r.mean_tv < 1e-12);
        assert!(src.i_xv_given_u().unwrap().abs() < 1e-12);
    }

    #[test]
    fn superposition_k0_matches_conditional_soft_cover() {
        // constant U: reduces to the single-layer check through P(x|v)
        let x_given_v = Channel::bsc(0.1).unwrap();
        let src = LayeredSource::new(
            Pmf::point_mass(1, 0).unwrap(),
            Channel::from_flat(1, 2, vec![0.5, 0.5]).unwrap(),
            x_given_v.clone(),
            Channel::constant(4, &Pmf::point_mass(1, 0).unwrap()).unwrap(),
        )
        .unwrap();
        let a = superposition_softcover_tv(&src, 0.0, 0.6, 4, 0, 4, 3).unwrap();
        let b = softcover_tv(
            &Pmf::uniform(2).unwrap(),
            &x_given_v,
            &Pmf::uniform(2).unwrap(),
            0.6,
            4,
            4,
            3,
        )
        .unwrap();
        assert_eq!(a.codebook_size, b.codebook_size);
        assert!(a.mean_tv > 0.0 && b.mean_tv > 0.0);
    }
}
