//! Property suites shared by the `properties` and `acceptance` targets.
//! Each suite runs a seeded proptest runner, so failures reproduce.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use rdsecrecy::codesim::{
    decode_legit, decode_ml, encoder_distribution, generate_codebook, likelihood_encode,
    softcover_tv_exhaustive, EavesdropperOracle, EavesdropperView, SchemeModel, SchemeRates,
};
use rdsecrecy::info::{
    binary_entropy, conditional_entropy, conditional_mutual_information, entropy,
    mutual_information,
};
use rdsecrecy::prob::{push_through, total_variation};
use rdsecrecy::region::{
    eavesdropper_best_distortion, eavesdropper_cap, evaluate_inner, optimal_phi, AuxScheme,
    DecisionMap, SystemSpec,
};
use rdsecrecy::rng::{stream_rng, Stream};
use rdsecrecy::{Channel, DistortionMeasure, JointPmf, Pmf};

pub type Suite = fn(&mut TestRunner) -> Result<(), String>;

pub fn runner(seed: u8, cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(
        config,
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

pub fn pmf(n: usize) -> impl Strategy<Value = Pmf> {
    weights(n).prop_map(|w| Pmf::new(w).unwrap())
}

pub fn channel(input: usize, output: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(weights(output), input).prop_map(|rows| Channel::new(rows).unwrap())
}

pub fn joint(dims: Vec<usize>) -> impl Strategy<Value = JointPmf> {
    let len = dims.iter().product();
    weights(len).prop_map(move |w| JointPmf::new(dims.clone(), w).unwrap())
}

fn small_dims(rank: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, rank)
}

fn run<S>(
    runner: &mut TestRunner,
    s: S,
    f: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    runner.run(&s, f).map_err(|e| e.to_string())
}

pub fn tv_triangle(r: &mut TestRunner) -> Result<(), String> {
    let s = (2usize..=5).prop_flat_map(|n| (pmf(n), pmf(n), pmf(n)));
    run(r, s, |(p, q, m)| {
        let tv = |a: &Pmf, b: &Pmf| total_variation(&a.to_joint(), &b.to_joint()).unwrap();
        let (pq, qm, pm) = (tv(&p, &q), tv(&q, &m), tv(&p, &m));
        prop_assert!(pm <= pq + qm + 1e-12);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!(tv(&p, &p) == 0.0);
        Ok(())
    })
}

pub fn tv_common_channel(r: &mut TestRunner) -> Result<(), String> {
    let s = (2usize..=4, 2usize..=4).prop_flat_map(|(a, b)| (pmf(a), pmf(a), channel(a, b)));
    run(r, s, |(p, q, c)| {
        let joint = total_variation(
            &push_through(&p, &c).unwrap(),
            &push_through(&q, &c).unwrap(),
        )
        .unwrap();
        let marginal = total_variation(&p.to_joint(), &q.to_joint()).unwrap();
        prop_assert!((joint - marginal).abs() <= 1e-12, "{joint} vs {marginal}");
        Ok(())
    })
}

pub fn tv_marginal(r: &mut TestRunner) -> Result<(), String> {
    let s = small_dims(3).prop_flat_map(|d| {
        (
            joint(d.clone()),
            joint(d),
            prop::sample::subsequence(vec![0, 1, 2], 1..3),
        )
    });
    run(r, s, |(p, q, keep)| {
        let whole = total_variation(&p, &q).unwrap();
        let part =
            total_variation(&p.marginal(&keep).unwrap(), &q.marginal(&keep).unwrap()).unwrap();
        prop_assert!(part <= whole + 1e-12);
        Ok(())
    })
}

pub fn tv_bounded_expectation(r: &mut TestRunner) -> Result<(), String> {
    let s =
        (2usize..=6).prop_flat_map(|n| (pmf(n), pmf(n), prop::collection::vec(-5.0f64..5.0, n)));
    run(r, s, |(p, q, f)| {
        let e = |m: &Pmf| m.probs().iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
        let width = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - f.iter().cloned().fold(f64::INFINITY, f64::min);
        let tv = total_variation(&p.to_joint(), &q.to_joint()).unwrap();
        prop_assert!((e(&p) - e(&q)).abs() <= tv * width + 1e-12);
        Ok(())
    })
}

pub fn push_through_round_trip(r: &mut TestRunner) -> Result<(), String> {
    let s = (2usize..=4, 2usize..=4).prop_flat_map(|(a, b)| (pmf(a), channel(a, b)));
    run(r, s, |(p, c)| {
        let j = push_through(&p, &c).unwrap();
        let back = j.marginal_pmf(&[0]).unwrap();
        for (x, y) in back.probs().iter().zip(p.probs()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        let c2 = j.condition(&[0]).unwrap().into_channel().unwrap();
        for x in 0..c.input_size() {
            for y in 0..c.output_size() {
                prop_assert!((c.prob(x, y) - c2.prob(x, y)).abs() <= 1e-12);
            }
        }
        Ok(())
    })
}

pub fn chain_rule(r: &mut TestRunner) -> Result<(), String> {
    run(r, small_dims(3).prop_flat_map(joint), |j| {
        let lhs = mutual_information(&j, &[0], &[1, 2]).unwrap();
        let rhs = mutual_information(&j, &[0], &[2]).unwrap()
            + conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
        let h = entropy(&j, &[0, 1]).unwrap();
        let split = entropy(&j, &[0]).unwrap() + conditional_entropy(&j, &[1], &[0]).unwrap();
        prop_assert!((h - split).abs() <= 1e-10);
        Ok(())
    })
}

pub fn nonnegative_and_bounded(r: &mut TestRunner) -> Result<(), String> {
    run(r, small_dims(3).prop_flat_map(joint), |j| {
        for c in 0..3 {
            let h = entropy(&j, &[c]).unwrap();
            prop_assert!(h >= 0.0 && h <= (j.dims()[c] as f64).log2() + 1e-12);
        }
        prop_assert!(mutual_information(&j, &[0], &[1]).unwrap() >= 0.0);
        prop_assert!(conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap() >= 0.0);
        prop_assert!(conditional_entropy(&j, &[0], &[1, 2]).unwrap() >= 0.0);
        Ok(())
    })
}

pub fn data_processing(r: &mut TestRunner) -> Result<(), String> {
    let s = (2usize..=3, 2usize..=3, 2usize..=3)
        .prop_flat_map(|(x, v, b)| (pmf(x), channel(x, v), channel(x, b)));
    run(r, s, |(px, v_given_x, b_given_x)| {
        // V - X - B
        let j = push_through(&px, &v_given_x)
            .unwrap()
            .attach(&[0], &b_given_x)
            .unwrap();
        let ivb = mutual_information(&j, &[1], &[2]).unwrap();
        let ixb = mutual_information(&j, &[0], &[2]).unwrap();
        prop_assert!(ivb <= ixb + 1e-12);
        Ok(())
    })
}

pub fn erasure_equivocation(r: &mut TestRunner) -> Result<(), String> {
    run(r, (0.0f64..=1.0, 0.0f64..=1.0), |(p, alpha)| {
        let j = push_through(&Pmf::bernoulli(p).unwrap(), &Channel::bec(alpha).unwrap()).unwrap();
        let h = conditional_entropy(&j, &[0], &[1]).unwrap();
        prop_assert!((h - alpha * binary_entropy(p).unwrap()).abs() <= 1e-12);
        Ok(())
    })
}

/// Family-wise significance of the goodness-of-fit suite.
const GOF_LEVEL: f64 = 0.01;

pub fn encoder_goodness_of_fit(r: &mut TestRunner) -> Result<(), String> {
    let s = (
        prop::collection::vec(0.15f64..0.85, 4),
        prop::collection::vec(0usize..2, 2),
        any::<u64>(),
    );
    let level = GOF_LEVEL / f64::from(r.config().cases.max(1));
    let chi2 = ChiSquared::new(3.0).unwrap();
    run(r, s, move |(flip, x, seed)| {
        let ch = Channel::new(vec![
            vec![flip[0], 1.0 - flip[0]],
            vec![flip[1], 1.0 - flip[1]],
        ])
        .unwrap();
        // n = 2 and Rs' = 1 gives four satellites in a single cloud
        let rates = SchemeRates::new(0.0, 0.0, 0.0, 1.0, 2).unwrap();
        let cb = generate_codebook(
            &Pmf::point_mass(1, 0).unwrap(),
            &Channel::new(vec![vec![flip[2], 1.0 - flip[2]]]).unwrap(),
            &rates,
            seed,
        )
        .unwrap();
        let probs = encoder_distribution(&cb, &x, &ch).unwrap();
        prop_assert_eq!(probs.len(), 4);
        let draws = 10_000;
        let mut counts = [0usize; 4];
        let mut rng = stream_rng(seed, Stream::Encoder, 0);
        for _ in 0..draws {
            let m = likelihood_encode(&cb, &x, &ch, &mut rng).unwrap();
            counts[cb.flat_index(m)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * draws as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p_value = chi2.sf(stat);
        prop_assert!(
            p_value > level,
            "chi-square {stat} (p = {p_value:.4}) for {probs:?}, counts {counts:?}"
        );
        Ok(())
    })
}

pub fn decoder_scale_invariance(r: &mut TestRunner) -> Result<(), String> {
    let s = (
        channel(2, 3),
        0.01f64..100.0,
        any::<u64>(),
        prop::collection::vec(0usize..3, 6),
    );
    run(r, s, |(ch, scale, seed, b)| {
        let rates = SchemeRates::new(0.0, 0.0, 0.0, 0.5, 6).unwrap();
        let cb = generate_codebook(
            &Pmf::point_mass(1, 0).unwrap(),
            &Channel::new(vec![vec![0.5, 0.5]]).unwrap(),
            &rates,
            seed,
        )
        .unwrap();
        let table: Vec<Vec<f64>> = ch
            .rows()
            .map(|r| r.iter().map(|p| p * scale).collect())
            .collect();
        let base = decode_legit(
            &cb,
            0,
            0,
            &b,
            &rdsecrecy::codesim::DecoderModel::Marginal(ch.clone()),
        )
        .unwrap();
        prop_assert_eq!(decode_ml(&cb, 0, 0, &b, &table, false).unwrap(), base);
        Ok(())
    })
}

fn bec_bsc_model(
    p: f64,
    v_given_x: Channel,
    u_given_v: Channel,
) -> (SystemSpec, AuxScheme, SchemeModel) {
    let spec = SystemSpec::bec_bsc(p, 0.4, 0.1).unwrap();
    let phi = optimal_phi(&spec, &v_given_x).unwrap();
    let aux = AuxScheme::new(v_given_x, u_given_v, phi);
    let model = SchemeModel::new(&spec, &aux).unwrap();
    (spec, aux, model)
}

pub fn eavesdropper_bounds_and_monotonicity(r: &mut TestRunner) -> Result<(), String> {
    let s = (
        0.05f64..0.95,
        channel(2, 2),
        channel(2, 2),
        any::<u64>(),
        1usize..=2,
    );
    run(r, s, |(p, v, u, seed, np)| {
        let (_, _, model) = bec_bsc_model(p, v, u);
        let n = 4;
        let rates = SchemeRates::new((np as f64).log2() / n as f64, 0.25, 0.25, 0.25, n).unwrap();
        let cb = generate_codebook(&model.p_u, &model.v_given_u, &rates, seed).unwrap();
        let sent = EavesdropperOracle::new(&cb, &model, EavesdropperView::Transmitted).unwrap();
        let more =
            EavesdropperOracle::new(&cb, &model, EavesdropperView::WithVirtualPublic).unwrap();
        let d_sent = sent.expected_distortion().unwrap();
        let d_more = more.expected_distortion().unwrap();
        prop_assert!(d_sent >= 0.0);
        prop_assert!(d_sent <= p.min(1.0 - p) + 1e-12, "{d_sent} > min(p, 1-p)");
        prop_assert!(d_more <= d_sent + 1e-12, "{d_more} > {d_sent}");
        Ok(())
    })
}

pub fn exhaustive_softcover_is_exact(r: &mut TestRunner) -> Result<(), String> {
    let s = (2usize..=3, 2usize..=3, 1usize..=4)
        .prop_flat_map(|(v, x, n)| (pmf(v), channel(v, x), Just(n)));
    run(r, s, |(pv, ch, n)| {
        let target = ch.output_pmf(&pv).unwrap();
        prop_assert!(softcover_tv_exhaustive(&target, &ch, &pv, n).unwrap() <= 1e-12);
        Ok(())
    })
}

fn all_maps(rows: usize, cols: usize, outputs: usize) -> Vec<DecisionMap> {
    let cells = rows * cols;
    (0..outputs.pow(cells as u32))
        .map(|mut k| {
            let mut flat = vec![0; cells];
            for c in flat.iter_mut() {
                *c = k % outputs;
                k /= outputs;
            }
            DecisionMap::from_fn(rows, cols, outputs, |v, b| flat[v * cols + b]).unwrap()
        })
        .collect()
}

fn random_spec(px: Pmf, b: Channel, w: Channel) -> SystemSpec {
    let n = px.len();
    SystemSpec::from_channels(
        &px,
        &b,
        &w,
        DistortionMeasure::hamming(n).unwrap(),
        DistortionMeasure::hamming(n).unwrap(),
    )
    .unwrap()
}

pub fn optimal_phi_dominates(r: &mut TestRunner) -> Result<(), String> {
    let s = (pmf(2), channel(2, 3), channel(2, 2), channel(2, 2));
    run(r, s, |(px, b, w, v)| {
        let spec = random_spec(px, b, w);
        let best = optimal_phi(&spec, &v).unwrap();
        let u = Channel::constant(2, &Pmf::point_mass(1, 0).unwrap()).unwrap();
        let db = |phi: DecisionMap| {
            evaluate_inner(&spec, &AuxScheme::new(v.clone(), u.clone(), phi))
                .unwrap()
                .db_min
        };
        let opt = db(best);
        for phi in all_maps(2, 3, 2) {
            prop_assert!(opt <= db(phi) + 1e-12);
        }
        Ok(())
    })
}

pub fn refining_u_helps_the_eavesdropper(r: &mut TestRunner) -> Result<(), String> {
    let s = (pmf(2), channel(2, 2), channel(2, 3), 0usize..3);
    run(r, s, |(px, w, u_given_x, merge)| {
        // (U, W, X) with U in three symbols, then merge one pair
        let xw = push_through(&px, &w).unwrap();
        let fine = xw
            .attach(&[0], &u_given_x)
            .unwrap()
            .marginal(&[2, 1, 0])
            .unwrap();
        // the merged pair becomes symbol 0, the remaining one symbol 1
        let coarse_map = Channel::new(
            (0..3)
                .map(|u| {
                    if u == merge || u == (merge + 1) % 3 {
                        vec![1.0, 0.0]
                    } else {
                        vec![0.0, 1.0]
                    }
                })
                .collect(),
        )
        .unwrap();
        let coarse = fine
            .attach(&[0], &coarse_map)
            .unwrap()
            .marginal(&[3, 1, 2])
            .unwrap();
        let d = DistortionMeasure::hamming(2).unwrap();
        let df = eavesdropper_best_distortion(&fine, &d).unwrap();
        let dc = eavesdropper_best_distortion(&coarse, &d).unwrap();
        prop_assert!(df <= dc + 1e-12, "fine {df} > coarse {dc}");
        Ok(())
    })
}

pub fn inner_below_outer(r: &mut TestRunner) -> Result<(), String> {
    let s = (
        pmf(2),
        channel(2, 3),
        channel(2, 2),
        channel(2, 3),
        channel(3, 2),
        any::<bool>(),
    );
    run(r, s, |(px, b, w, v, u, trivial_u)| {
        let spec = random_spec(px, b, w);
        let phi = optimal_phi(&spec, &v).unwrap();
        let u = if trivial_u {
            Channel::constant(3, &Pmf::point_mass(1, 0).unwrap()).unwrap()
        } else {
            u
        };
        let aux = AuxScheme::new(v.clone(), u, phi);
        let e = evaluate_inner(&spec, &aux).unwrap();
        prop_assert!(e.dw_max <= eavesdropper_cap(&spec).unwrap() + 1e-9);
        if trivial_u {
            let j = aux.joint(&spec).unwrap();
            let gap = mutual_information(&j, &[3], &[1]).unwrap()
                - mutual_information(&j, &[3], &[2]).unwrap();
            prop_assert!((e.secrecy_slack - gap).abs() <= 1e-10);
        }
        Ok(())
    })
}

pub fn jensen_lossless(r: &mut TestRunner) -> Result<(), String> {
    run(r, (0.0f64..=1.0, channel(2, 3)), |(p, u_given_x)| {
        let j = push_through(&Pmf::bernoulli(p).unwrap(), &u_given_x).unwrap();
        let pu = j.marginal_pmf(&[1]).unwrap();
        let mut total = 0.0;
        for u in 0..3 {
            if pu.prob(u) > 0.0 {
                let delta = j.prob(&[1, u]) / pu.prob(u);
                total += pu.prob(u) * delta.min(1.0 - delta);
            }
        }
        prop_assert!(total <= p.min(1.0 - p) + 1e-12);
        Ok(())
    })
}

pub const PROBCORE: &[(&str, Suite)] = &[
    ("tv triangle", tv_triangle),
    ("tv under a common channel", tv_common_channel),
    ("tv of marginals", tv_marginal),
    ("tv bounds expectations", tv_bounded_expectation),
];

pub const INFOMEASURES: &[(&str, Suite)] = &[
    ("chain rule", chain_rule),
    ("data processing", data_processing),
];

pub const ENCODER: &[(&str, Suite)] = &[("encoder goodness of fit", encoder_goodness_of_fit)];
