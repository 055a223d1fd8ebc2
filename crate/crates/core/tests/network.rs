use polydepth::network::{sum_networks, sum_networks_with};
use polydepth::{AffineLayer, Carry, FeedforwardNetwork, GateTag, Nonlinearity};
use proptest::prelude::*;

fn arb_layer(rows: usize, cols: usize) -> impl Strategy<Value = AffineLayer> {
    (
        prop::collection::vec(-1.5f64..1.5, rows * cols),
        prop::collection::vec(-0.5f64..0.5, rows),
    )
        .prop_map(move |(w, b)| AffineLayer::new(rows, cols, w, b).unwrap())
}

/// Random scalar networks on `n` inputs with hidden widths drawn from 1..=4.
fn arb_net(n: usize, max_depth: usize) -> impl Strategy<Value = FeedforwardNetwork> {
    (prop::collection::vec(1usize..=4, 1..=max_depth), 0usize..4).prop_flat_map(move |(widths, s)| {
        let sigma = [Nonlinearity::Exp, Nonlinearity::Tanh, Nonlinearity::Sigmoid, Nonlinearity::Softplus][s];
        let mut dims = vec![n];
        dims.extend(&widths);
        dims.push(1);
        let layers: Vec<_> = dims.windows(2).map(|w| arb_layer(w[1], w[0]).boxed()).collect();
        layers.prop_map(move |layers| FeedforwardNetwork::new(n, sigma, layers, vec![]).unwrap())
    })
}

/// Direct forward pass written out on the test side.
fn forward(net: &FeedforwardNetwork, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    let k = net.depth();
    for (l, layer) in net.layers().iter().enumerate() {
        let mut next = vec![0.0; layer.rows()];
        for (r, v) in next.iter_mut().enumerate() {
            *v = layer.bias()[r] + (0..layer.cols()).map(|c| layer.weight(r, c) * h[c]).sum::<f64>();
            if l < k {
                *v = net.activation().eval(*v);
            }
        }
        h = next;
    }
    h[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eval_matches_reference_forward(net in arb_net(3, 3), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let got = net.eval_scalar(&x).unwrap();
        prop_assert!((got - forward(&net, &x)).abs() <= 1e-12 * (1.0 + got.abs()));
    }

    #[test]
    fn expansion_agrees_with_eval_near_origin(net in arb_net(2, 2)) {
        // The degree-8 remainder at |x| ≤ 1e-2 is far below the tolerance.
        let s = net.taylor_expand(8).unwrap();
        for x in [[1e-2, -5e-3], [-8e-3, 7e-3], [0.0, 1e-2]] {
            let v = net.eval_scalar(&x).unwrap();
            prop_assert!((s.eval(&x) - v).abs() < 1e-9 * (1.0 + v.abs()), "{} vs {}", s.eval(&x), v);
        }
    }

    #[test]
    fn rescale_is_the_rescaled_function(
        net in arb_net(2, 3),
        d in 1u32..4,
        delta in 0.05f64..1.0,
        x in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let r = net.rescale(d, delta).unwrap();
        prop_assert_eq!(r.hidden_widths(), net.hidden_widths());
        let dx: Vec<f64> = x.iter().map(|v| v * delta).collect();
        let expect = net.eval_scalar(&dx).unwrap() / delta.powi(d as i32);
        let got = r.eval_scalar(&x).unwrap();
        prop_assert!((got - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
    }

    #[test]
    fn rescale_preserves_the_degree_d_slice(net in arb_net(2, 2), d in 1u32..4, delta in 0.1f64..1.0) {
        let a = net.taylor_expand(d).unwrap().homogeneous_part(d);
        let b = net.rescale(d, delta).unwrap().taylor_expand(d).unwrap().homogeneous_part(d);
        prop_assert!(a.approx_eq(&b, 1e-9));
    }

    #[test]
    fn sums_of_equal_depth_are_linear(
        a in arb_net(2, 1),
        b in arb_net(2, 1),
        x in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let b = FeedforwardNetwork::new(2, a.activation(), b.layers().to_vec(), vec![]).unwrap();
        let s = sum_networks(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(s.neuron_count(), a.neuron_count() + b.neuron_count());
        prop_assert_eq!(s.padding_count(), 0);
        let expect = a.eval_scalar(&x).unwrap() + b.eval_scalar(&x).unwrap();
        prop_assert!((s.eval_scalar(&x).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn json_round_trip_is_lossless(net in arb_net(3, 3)) {
        let back = FeedforwardNetwork::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(back, net);
    }
}

#[test]
fn self_sum_doubles() {
    let l0 = AffineLayer::new(2, 1, vec![0.5, -1.0], vec![0.1, 0.0]).unwrap();
    let l1 = AffineLayer::new(1, 2, vec![1.0, 2.0], vec![0.3]).unwrap();
    let net = FeedforwardNetwork::new(1, Nonlinearity::Tanh, vec![l0, l1], vec![]).unwrap();
    let s = sum_networks(&[net.clone(), net.clone()]).unwrap();
    assert_eq!(s.neuron_count(), 4);
    for x in [-0.7, 0.0, 0.4] {
        let v = net.eval_scalar(&[x]).unwrap();
        assert!((s.eval_scalar(&[x]).unwrap() - 2.0 * v).abs() < 1e-14);
    }
}

#[test]
fn padding_is_reported_separately() {
    let shallow = FeedforwardNetwork::new(
        1,
        Nonlinearity::Exp,
        vec![
            AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            AffineLayer::new(1, 1, vec![1.0], vec![-1.0]).unwrap(),
        ],
        vec![],
    )
    .unwrap();
    let deep = FeedforwardNetwork::new(
        1,
        Nonlinearity::Exp,
        vec![
            AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
        ],
        vec![],
    )
    .unwrap();
    let s = sum_networks(&[shallow.clone(), deep.clone()]).unwrap();
    assert_eq!(s.depth(), 2);
    assert_eq!(s.padding_count(), 1);
    assert_eq!(s.count_tagged(GateTag::Carry), 1);
    assert_eq!(s.neuron_count(), 1 + 2 + 1);

    // Exact carries keep the shallow summand's expansion through the cap.
    let e = sum_networks_with(&[shallow.clone(), deep.clone()], Carry::Exact { cap: 4 }).unwrap();
    let want = shallow
        .taylor_expand(4)
        .unwrap()
        .add(&deep.taylor_expand(4).unwrap())
        .unwrap();
    assert!(e.taylor_expand(4).unwrap().approx_eq(&want, 1e-9));
}

#[test]
fn mismatched_activations_are_rejected() {
    let a = FeedforwardNetwork::new(1, Nonlinearity::Exp, vec![AffineLayer::zeros(1, 1), AffineLayer::zeros(1, 1)], vec![]).unwrap();
    let b = FeedforwardNetwork::new(1, Nonlinearity::Tanh, vec![AffineLayer::zeros(1, 1), AffineLayer::zeros(1, 1)], vec![]).unwrap();
    assert!(sum_networks(&[a, b]).is_err());
}

#[test]
fn relu_networks_have_no_expansion() {
    let net = FeedforwardNetwork::new(1, Nonlinearity::Relu, vec![AffineLayer::zeros(1, 1), AffineLayer::zeros(1, 1)], vec![]).unwrap();
    assert!(net.taylor_expand(2).is_err());
    assert_eq!(net.eval_scalar(&[0.3]).unwrap(), 0.0);
}

#[test]
fn malformed_documents_are_rejected() {
    assert!(FeedforwardNetwork::from_json("{").is_err());
    assert!(FeedforwardNetwork::from_json("{\"n\": 2}").is_err());
}
