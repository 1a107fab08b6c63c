use csmri_nn::gradcheck::{check_gradient, random_tensor};
use csmri_nn::persist::{load_state, save_state, StateDict};
use csmri_nn::{mse_loss, BnMode, Parameters, Tensor};
use csmri_unet::{build_network, layer_plan, stage_plan, LayerKind, Network, NetworkSpec, SkipMode, Upsampling};

fn tiny() -> NetworkSpec {
    NetworkSpec { n_scales: 2, layers_per_stage: 2, base_channels: 2, input_size: (8, 8), ..NetworkSpec::desk() }
}

fn flat_params(net: &mut Network<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    net.visit_params(&mut |s| out.extend_from_slice(s.value));
    out
}

fn flat_grads(net: &mut Network<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    net.visit_params(&mut |s| out.extend_from_slice(s.grad));
    out
}

fn set_params(net: &mut Network<f64>, values: &[f64]) {
    let mut at = 0;
    net.visit_params(&mut |s| {
        let n = s.value.len();
        s.value.copy_from_slice(&values[at..at + n]);
        at += n;
    });
}

fn end_to_end(spec: &NetworkSpec, seed: u64) -> (f64, f64) {
    let x = random_tensor([2, 1, 8, 8], seed);
    let target = random_tensor([2, 1, 8, 8], seed + 100);
    let mut net = build_network::<f64>(spec, seed).unwrap();
    let template = net.clone();
    let loss_at = |net: &mut Network<f64>, x: &Tensor<f64>| {
        let y = net.forward(x, BnMode::Train).unwrap();
        mse_loss(&y, &target).unwrap().0
    };

    net.zero_grads();
    let y = net.forward(&x, BnMode::Train).unwrap();
    let (_, g) = mse_loss(&y, &target).unwrap();
    let gx = net.backward(&g).unwrap();
    let theta = flat_params(&mut net);
    let analytic = flat_grads(&mut net);

    let r_params = check_gradient(&theta, &analytic, |v| {
        let mut n = template.clone();
        set_params(&mut n, v);
        loss_at(&mut n, &x)
    });
    let r_input = check_gradient(x.data(), gx.data(), |v| {
        let mut n = template.clone();
        loss_at(&mut n, &Tensor::new(x.shape(), v.to_vec()).unwrap())
    });
    (r_params, r_input)
}

#[test]
fn tiny_network_end_to_end_gradient() {
    for seed in 0..3 {
        let (rp, rx) = end_to_end(&tiny(), seed);
        assert!(rp < 1e-4, "seed {seed}: params rel err {rp}");
        assert!(rx < 1e-4, "seed {seed}: input rel err {rx}");
    }
}

#[test]
fn variant_wiring_end_to_end_gradient() {
    let nearest = NetworkSpec { upsampling: Upsampling::Nearest, ..tiny() };
    let additive = NetworkSpec { skip: SkipMode::Additive, ..tiny() };
    let single = NetworkSpec { single_scale_layers: 3, single_scale_channels: 3, input_size: (8, 8), ..NetworkSpec::single_scale((8, 8)) };
    for spec in [nearest, additive, single] {
        let (rp, rx) = end_to_end(&spec, 11);
        assert!(rp < 1e-4 && rx < 1e-4, "{spec:?}: {rp} {rx}");
    }
}

#[test]
fn shape_audit() {
    // channel widths do not affect spatial wiring; small bases keep the
    // 256x256 audit quick
    let specs = [
        NetworkSpec { base_channels: 2, ..NetworkSpec::full_scale() },
        NetworkSpec::desk(),
        NetworkSpec { n_scales: 2, input_size: (16, 16), base_channels: 4, ..NetworkSpec::desk() },
    ];
    for spec in specs {
        let net = build_network::<f32>(&spec, 0).unwrap();
        let (h, w) = spec.input_size;
        let x = Tensor::<f32>::filled([1, 1, h, w], 0.5);
        let (y, trace) = net.infer_traced(&x).unwrap();
        assert_eq!(y.shape(), x.shape());
        let plan = layer_plan(&spec).unwrap();
        assert_eq!(plan.len(), trace.len());
        for (p, t) in plan.iter().zip(&trace) {
            assert_eq!(p.name, t.name);
            assert_eq!([1, p.output.0, p.output.1, p.output.2], t.shape, "{}", p.name);
        }
        let bottom = plan.iter().find(|l| l.name == "bottom.0").unwrap();
        assert_eq!((bottom.output.1, bottom.output.2), (h >> (spec.n_scales - 1), w >> (spec.n_scales - 1)));
    }
}

#[test]
fn pool_and_upsample_counts_match() {
    let plan = layer_plan(&NetworkSpec::full_scale()).unwrap();
    let pools = plan.iter().filter(|l| l.kind == LayerKind::Pool).count();
    let ups = plan.iter().filter(|l| l.kind == LayerKind::Upsample).count();
    assert_eq!((pools, ups), (4, 4));
}

/// Parameters of the built full-scale graph, counted independently of the
/// network code: every block has a 3x3 kernel, a bias and BN scale/shift.
fn full_scale_param_formula() -> usize {
    let w = |s: u32| 64usize << s;
    let block = |a: usize, b: usize| 9 * a * b + b + 2 * b;
    let mut total = 0;
    // encoder scales 0..3
    for s in 0..4 {
        let n_in = if s == 0 { 1 } else { w(s - 1) };
        total += block(n_in, w(s)) + 3 * block(w(s), w(s));
    }
    // bottom: 512 -> 1024 -> 1024 -> 1024 -> 512
    total += block(w(3), w(4)) + 2 * block(w(4), w(4)) + block(w(4), w(3));
    // decoder scales 3..1: concat doubles the input, last block narrows
    for s in 1..4 {
        total += block(2 * w(s), w(s)) + 2 * block(w(s), w(s)) + block(w(s), w(s - 1));
    }
    // terminal stage at scale 0 and the 1x1 head
    total += block(2 * w(0), w(0)) + block(w(0), w(0));
    total + w(0) + 1
}

#[test]
fn full_scale_parameter_count_is_frozen() {
    let spec = NetworkSpec::full_scale();
    let mut net = build_network::<f32>(&spec, 0).unwrap();
    let counted = net.param_count();
    assert_eq!(counted, full_scale_param_formula());
    assert_eq!(counted, 53_338_049);
    let from_plan: usize = stage_plan(&spec)
        .iter()
        .flat_map(|s| s.blocks.iter())
        .map(|&(a, b)| 9 * a * b + 3 * b)
        .sum();
    assert_eq!(counted, from_plan + 65);
}

#[test]
fn state_survives_disk_roundtrip() {
    let spec = tiny();
    let mut net = build_network::<f64>(&spec, 3).unwrap();
    let x = random_tensor([3, 1, 8, 8], 1);
    net.forward(&x, BnMode::Train).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_state(dir.path(), &net.export_state()).unwrap();
    let mut other = build_network::<f64>(&spec, 4).unwrap();
    other.import_state(&load_state(dir.path()).unwrap()).unwrap();
    let (a, b) = (net.infer(&x, BnMode::Infer).unwrap(), other.infer(&x, BnMode::Infer).unwrap());
    for (p, q) in a.data().iter().zip(b.data()) {
        // parameters are stored as f32
        assert!((p - q).abs() < 1e-4);
    }
    let wrong = build_network::<f64>(&NetworkSpec { base_channels: 3, ..spec }, 0).unwrap();
    assert!(other.import_state(&wrong.export_state()).is_err());
}
