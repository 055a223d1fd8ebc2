use polydepth::bounds::asymptotic_width;
use polydepth::trainer::{
    experiment_grid, gradient_check, gradient_deviation, heatmap_svg, init_mlp, train,
    write_grid_csv, AdaDelta, GridSpec, Mlp, TrainConfig, Workspace, CSV_HEADER,
};
use polydepth::Nonlinearity;
use proptest::prelude::*;

fn config(n: usize, depth: usize, width: usize, steps: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        n,
        depth,
        width,
        steps,
        seed,
        eval_samples: 20_000,
        ..TrainConfig::default()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn parameter_shapes() {
    let mlp = init_mlp(&config(2, 1, 8, 0, 0)).unwrap();
    assert_eq!(mlp.param_count(), 8 * 2 + 8 + 8 + 1);
    let deep = init_mlp(&config(6, 3, 20, 0, 0)).unwrap();
    assert_eq!(deep.param_count(), (6 * 20 + 20) + 2 * (20 * 20 + 20) + 21);
    assert!(init_mlp(&config(2, 1, 0, 0, 0)).is_err());
    assert_eq!(init_mlp(&config(2, 1, 8, 0, 7)).unwrap(), init_mlp(&config(2, 1, 8, 0, 7)).unwrap());
    assert_ne!(init_mlp(&config(2, 1, 8, 0, 7)).unwrap(), init_mlp(&config(2, 1, 8, 0, 8)).unwrap());
}

#[test]
fn initial_weights_are_in_the_glorot_range() {
    let mlp = init_mlp(&config(6, 2, 10, 0, 3)).unwrap();
    let net = mlp.to_network().unwrap();
    for layer in net.layers() {
        let limit = (6.0 / (layer.cols() + layer.rows()) as f64).sqrt();
        assert!(layer.weights().iter().all(|w| w.abs() <= limit));
        assert!(layer.bias().iter().all(|&b| b == 0.0));
    }
}

#[test]
fn forward_matches_the_exported_network() {
    let mlp = init_mlp(&config(3, 2, 5, 0, 1)).unwrap();
    let net = mlp.to_network().unwrap();
    let mut ws = Workspace::default();
    for x in [[0.1, 1.2, 1.9], [2.0, 0.0, 0.5]] {
        assert!((mlp.forward(&x, &mut ws) - net.eval_scalar(&x).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn backprop_matches_finite_differences() {
    let tanh = gradient_check(&config(6, 2, 8, 0, 0)).unwrap();
    assert!(tanh < 1e-5, "tanh deviation {tanh}");
    let relu = gradient_check(&TrainConfig {
        activation: Nonlinearity::Relu,
        ..config(3, 2, 6, 0, 4)
    })
    .unwrap();
    assert!(relu < 1e-4, "relu deviation {relu}");
    assert!(gradient_check(&config(6, 3, 20, 0, 0)).is_err());
}

#[test]
fn zero_network_gradient_is_guarded() {
    let mlp = Mlp::zeros(2, 2, 4, Nonlinearity::Tanh).unwrap();
    let xs = vec![vec![0.5, 1.0], vec![1.5, 0.25]];
    let all: Vec<usize> = (0..mlp.param_count()).collect();
    assert_eq!(gradient_deviation(&mlp, &xs, &[0.0, 0.0], &all), 0.0);
}

#[test]
fn small_product_is_learned() {
    let r = train(&TrainConfig {
        activation: Nonlinearity::Tanh,
        ..config(2, 1, 8, 5000, 0)
    })
    .unwrap();
    // Absolute-error AdaDelta plateaus around 0.05 on this problem; seed 0
    // ends at 0.053.
    assert!(r.final_test_err < 0.06, "test error {}", r.final_test_err);
    assert_eq!(r.param_count, 33);
    assert!(r.err_history.windows(2).all(|w| w[0].step < w[1].step));
}

#[test]
fn zero_steps_reports_the_baseline() {
    let r = train(&config(2, 1, 8, 0, 0)).unwrap();
    assert!(r.final_test_err.is_finite() && r.final_test_err > 0.0);
}

#[test]
fn training_is_deterministic() {
    let c = config(4, 2, 6, 300, 11);
    assert_eq!(train(&c).unwrap().final_test_err.to_bits(), train(&c).unwrap().final_test_err.to_bits());
    let (mut a, mut b) = (train(&c).unwrap(), train(&c).unwrap());
    a.wallclock_s = 0.0;
    b.wallclock_s = 0.0;
    assert_eq!(a, b);
}

/// Written out directly from the update rule.
fn adadelta_reference(p: &mut [f64], grads: &[Vec<f64>], rho: f64, eps: f64) {
    let mut eg = vec![0.0; p.len()];
    let mut ex = vec![0.0; p.len()];
    for g in grads {
        for i in 0..p.len() {
            eg[i] = rho * eg[i] + (1.0 - rho) * g[i].powi(2);
            let rms_dx = (ex[i] + eps).sqrt();
            let rms_g = (eg[i] + eps).sqrt();
            let dx = -rms_dx / rms_g * g[i];
            ex[i] = rho * ex[i] + (1.0 - rho) * dx.powi(2);
            p[i] += dx;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adadelta_state_stays_non_negative(
        grads in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..40),
    ) {
        let mut opt = AdaDelta::new(4, 0.95, 1e-6, 1.0);
        let mut p = vec![0.5, -0.5, 1.0, 0.0];
        let mut q = p.clone();
        for g in &grads {
            let before = p.clone();
            opt.step(&mut p, g);
            prop_assert!(opt.mean_sq_grad().iter().all(|&v| v >= 0.0));
            prop_assert!(opt.mean_sq_update().iter().all(|&v| v >= 0.0));
            prop_assert!(p.iter().zip(&before).all(|(a, b)| (a - b).is_finite()));
        }
        adadelta_reference(&mut q, &grads, 0.95, 1e-6);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn grid_rows_and_outputs() {
    let spec = GridSpec {
        base: config(3, 1, 4, 50, 0),
        depths: vec![1, 2],
        widths: vec![4, 6],
        seeds: vec![0, 1],
    };
    let mut seen = 0;
    let rows = experiment_grid(&spec, 2, |_| seen += 1).unwrap();
    assert_eq!((rows.len(), seen), (8, 8));
    let order: Vec<_> = rows.iter().map(|r| (r.depth, r.width, r.seed)).collect();
    assert_eq!(order, spec.configs().iter().map(|c| (c.depth, c.width, c.seed)).collect::<Vec<_>>());
    for r in &rows {
        assert_eq!(r.theory_width, asymptotic_width(3, r.depth as u32));
        assert!(r.error.is_none());
    }
    // Thread count does not change results.
    let single = experiment_grid(&spec, 1, |_| {}).unwrap();
    for (a, b) in rows.iter().zip(&single) {
        assert_eq!(a.test_err.to_bits(), b.test_err.to_bits());
    }

    let mut buf = Vec::new();
    write_grid_csv(&rows, &mut buf, false).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.clone().count(), 8);
    assert!(lines.all(|l| l.ends_with(",0.000")));

    let svg = heatmap_svg(&rows);
    assert_eq!(svg.matches("<title>").count(), 4);

    let one = GridSpec { depths: vec![1], widths: vec![4], seeds: vec![0], ..spec };
    assert_eq!(experiment_grid(&one, 1, |_| {}).unwrap().len(), 1);
}

#[test]
fn theory_overlay_for_twenty_inputs() {
    let spec = GridSpec {
        base: config(20, 1, 1, 0, 0),
        depths: (1..=6).collect(),
        widths: vec![1],
        seeds: vec![0],
    };
    let rows = experiment_grid(&spec, 1, |_| {}).unwrap();
    assert_eq!(rows[0].theory_width, 1048576.0);
    assert!((rows[1].theory_width - 99.3).abs() < 0.05);
}

#[test]
fn wider_is_not_worse() {
    let mut narrow = Vec::new();
    let mut wide = Vec::new();
    for seed in 0..3 {
        narrow.push(train(&config(6, 2, 5, 4000, seed)).unwrap().final_test_err);
        wide.push(train(&config(6, 2, 40, 4000, seed)).unwrap().final_test_err);
    }
    let (n, w) = (median(narrow), median(wide));
    assert!(w <= 1.1 * n, "width 40: {w}, width 5: {n}");
}
