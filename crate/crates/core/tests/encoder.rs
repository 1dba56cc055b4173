use c2a2_core::encoder::{
    encode_emotion, encoder_backward, fuse, train_toy_regression, EmotionEmbedding, MlpParams,
    TokenSequence, TrainConfig, DEFAULT_DIMS, EMBED_DIM,
};
use c2a2_core::space::{sample_conditions, AxisFrame, C2A2Point, SamplingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_dataset(n: usize, seed: u64) -> Vec<(C2A2Point, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<[f64; 3]> = (0..EMBED_DIM)
        .map(|_| {
            [
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            ]
        })
        .collect();
    let pts = sample_conditions(
        SamplingMode::UniformBall3D,
        n,
        seed,
        &AxisFrame::reference(),
        0.0,
    )
    .unwrap();
    pts.into_iter()
        .map(|y| {
            let t = mix
                .iter()
                .map(|m| (m[0] * y.a + m[1] * y.v + m[2] * y.z).sin())
                .collect();
            (y, t)
        })
        .collect()
}

fn objective(params: &MlpParams, y: &C2A2Point, upstream: &[f64]) -> f64 {
    let e = encode_emotion(y, params).unwrap();
    e.values().iter().zip(upstream).map(|(a, b)| a * b).sum()
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

#[test]
fn output_is_768_wide_for_default_dims() {
    let params = MlpParams::init_random(&DEFAULT_DIMS, 3).unwrap();
    let e = encode_emotion(&C2A2Point::new(0.2, -0.1, 0.4).unwrap(), &params).unwrap();
    assert_eq!(e.values().len(), 768);
}

#[test]
fn zero_init_fuse_appends_a_zero_token() {
    let params = MlpParams::init(&DEFAULT_DIMS, 11).unwrap();
    let text = TokenSequence::new(&[vec![0.5; EMBED_DIM], vec![-0.25; EMBED_DIM]]).unwrap();
    let pts = sample_conditions(
        SamplingMode::UniformBall3D,
        200,
        4,
        &AxisFrame::reference(),
        0.0,
    )
    .unwrap();
    for y in pts {
        let e = encode_emotion(&y, &params).unwrap();
        assert_eq!(e, EmotionEmbedding::zeros());
        let fused = fuse(&text, &e);
        assert_eq!(fused.len(), 3);
        assert!(fused.token(2).iter().all(|&x| x == 0.0));
        assert_eq!(fused.without_last().unwrap(), text);
    }
}

#[test]
fn backward_matches_central_differences() {
    let dims = [3, 8, 16, 768];
    let mut params = MlpParams::init_random(&dims, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for case in 0..5 {
        let y = C2A2Point::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        )
        .unwrap();
        let upstream: Vec<f64> = (0..EMBED_DIM)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let g = encoder_backward(&y, &params, &upstream).unwrap();

        for l in 0..params.layer_count() {
            for _ in 0..12 {
                let (r, c) = {
                    let w = &params.weights()[l];
                    (
                        rng.random_range(0..w.nrows()),
                        rng.random_range(0..w.ncols()),
                    )
                };
                let orig = params.weights()[l][(r, c)];
                params.weights_mut()[l][(r, c)] = orig + h;
                let up = objective(&params, &y, &upstream);
                params.weights_mut()[l][(r, c)] = orig - h;
                let down = objective(&params, &y, &upstream);
                params.weights_mut()[l][(r, c)] = orig;
                let numeric = (up - down) / (2.0 * h);
                let e = rel_err(g.weights[l][(r, c)], numeric);
                assert!(e <= 1e-4, "case {case} layer {l} w[{r},{c}]: rel err {e}");

                let k = rng.random_range(0..params.biases()[l].len());
                let orig = params.biases()[l][k];
                params.biases_mut()[l][k] = orig + h;
                let up = objective(&params, &y, &upstream);
                params.biases_mut()[l][k] = orig - h;
                let down = objective(&params, &y, &upstream);
                params.biases_mut()[l][k] = orig;
                let e = rel_err(g.biases[l][k], (up - down) / (2.0 * h));
                assert!(e <= 1e-4, "case {case} layer {l} b[{k}]: rel err {e}");
            }
        }

        let coords = [y.a, y.v, y.z];
        for i in 0..3 {
            let mut plus = coords;
            let mut minus = coords;
            plus[i] += h;
            minus[i] -= h;
            let f = |c: [f64; 3]| {
                objective(
                    &params,
                    &C2A2Point {
                        a: c[0],
                        v: c[1],
                        z: c[2],
                    },
                    &upstream,
                )
            };
            let e = rel_err(g.input[i], (f(plus) - f(minus)) / (2.0 * h));
            assert!(e <= 1e-4, "case {case} input {i}: rel err {e}");
        }
    }
}

#[test]
fn toy_regression_drops_tenfold_and_is_deterministic() {
    let data = toy_dataset(8, 8);
    let cfg = TrainConfig {
        steps: 500,
        learning_rate: 3.0,
        batch_size: None,
        seed: 2,
    };
    let (_, curve) =
        train_toy_regression(&data, MlpParams::init(&DEFAULT_DIMS, 1).unwrap(), cfg).unwrap();
    let (first, last) = (curve[0], *curve.last().unwrap());
    eprintln!("loss {first} -> {last}");
    assert!(
        first / last >= 10.0,
        "loss only fell from {first} to {last}"
    );

    let (_, again) =
        train_toy_regression(&data, MlpParams::init(&DEFAULT_DIMS, 1).unwrap(), cfg).unwrap();
    assert_eq!(curve, again);
}

#[test]
fn binary_params_round_trip_through_a_file() {
    let params = MlpParams::init_random(&[3, 5, 7, 768], 9).unwrap();
    let mut file = tempfile::tempfile().unwrap();
    params.write_to(&mut file).unwrap();
    use std::io::{Seek, SeekFrom};
    file.seek(SeekFrom::Start(0)).unwrap();
    let back = MlpParams::read_from(&mut file).unwrap();
    assert_eq!(back, params);
}
