use c2a2_core::au::{PROB_EPS, RELEVANT_COUNT};
use c2a2_core::losses::{
    au_kl_loss, av_loss, batch_loss, bernoulli_kl, compose_z_label, symmetric_bernoulli_kl,
    CoordPrediction, LossSample, LossWeights, ZHat,
};
use c2a2_core::space::AVPoint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

fn random_av(rng: &mut ChaCha8Rng) -> AVPoint {
    loop {
        let (a, v) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if let Ok(p) = AVPoint::new(a, v) {
            return p;
        }
    }
}

#[test]
fn av_loss_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let label = random_av(&mut rng);
        let dim = if rng.random_bool(0.5) { 2 } else { 3 };
        let pred: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = av_loss(&CoordPrediction::from_slice(&pred).unwrap(), label);
        for i in 0..dim {
            let mut plus = pred.clone();
            let mut minus = pred.clone();
            plus[i] += H;
            minus[i] -= H;
            let f = |p: &[f64]| av_loss(&CoordPrediction::from_slice(p).unwrap(), label).value;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * H);
            assert!(
                rel_err(loss.grad[i], numeric) <= 1e-5,
                "grad {i}: {} vs {numeric}",
                loss.grad[i]
            );
        }
    }
}

#[test]
fn au_kl_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let p: Vec<f64> = (0..RELEVANT_COUNT)
            .map(|_| rng.random_range(0.01..0.99))
            .collect();
        let q: Vec<f64> = (0..RELEVANT_COUNT)
            .map(|_| rng.random_range(PROB_EPS..1.0 - PROB_EPS))
            .collect();
        let loss = au_kl_loss(&p, &q).unwrap();
        for i in 0..RELEVANT_COUNT {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[i] += H;
            minus[i] -= H;
            let numeric = (au_kl_loss(&plus, &q).unwrap().value
                - au_kl_loss(&minus, &q).unwrap().value)
                / (2.0 * H);
            let e = rel_err(loss.grad[i], numeric);
            assert!(e <= 1e-5, "p={} q={}: rel err {e}", p[i], q[i]);
        }
    }
}

#[test]
fn symmetric_kl_closed_form() {
    let expected = 1.6 * 9f64.ln();
    assert!((symmetric_bernoulli_kl(0.9, 0.1) - expected).abs() <= 1e-9);
    // Independent route: the two directed divergences summed.
    let summed = bernoulli_kl(0.9, 0.1) + bernoulli_kl(0.1, 0.9);
    assert!((summed - expected).abs() <= 1e-12);
}

#[test]
fn batch_loss_weights_the_means() {
    let t = [0.3; RELEVANT_COUNT];
    let p = [0.6; RELEVANT_COUNT];
    let label = AVPoint::new(0.1, 0.2).unwrap();
    let samples = vec![
        LossSample {
            coords: CoordPrediction::Planar([0.1, 0.2]),
            au_pred: &p,
            av_label: label,
            au_target: &t,
        },
        LossSample {
            coords: CoordPrediction::Lifted([0.4, 0.6, 0.1]),
            au_pred: &t,
            av_label: label,
            au_target: &t,
        },
    ];
    let b = batch_loss(&samples, LossWeights { av: 2.0, au: 0.5 }).unwrap();
    let au_one = 15.0 * (0.6 - 0.3) * ((0.6f64 / 0.4).ln() - (0.3f64 / 0.7).ln());
    assert!((b.av - 0.25 / 2.0).abs() < 1e-12);
    assert!((b.au - au_one / 2.0).abs() < 1e-12);
    assert!((b.total - (2.0 * b.av + 0.5 * b.au)).abs() < 1e-12);
    assert_eq!(b.n, 2);
}

proptest! {
    #[test]
    fn symmetric_kl_is_symmetric_and_non_negative(p in 0.001f64..0.999, q in 0.001f64..0.999) {
        let a = symmetric_bernoulli_kl(p, q);
        prop_assert!(a >= 0.0);
        prop_assert!((a - symmetric_bernoulli_kl(q, p)).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn composed_label_keeps_av_and_stays_in_ball(r in 0.0f64..1.0, t in -3.2f64..3.2, z in -2.0f64..2.0) {
        let av = AVPoint::new(r * t.cos(), r * t.sin()).unwrap();
        let y = compose_z_label(av, ZHat::new(z).unwrap());
        prop_assert_eq!(y.a, av.valence);
        prop_assert_eq!(y.v, av.arousal);
        prop_assert!(y.validate().is_ok());
        prop_assert!(y.z == 0.0 || y.z.signum() == z.signum());
        prop_assert!(y.z.abs() <= z.abs());
    }
}
