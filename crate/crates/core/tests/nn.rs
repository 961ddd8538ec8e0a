use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sac_core::field::PrimeField;
use sac_core::nn::*;
use sac_core::{Goldilocks, Toy257};

fn dense(rows: usize, cols: usize, weights: Vec<i64>, bias: Vec<i64>) -> DenseLayer {
    DenseLayer { rows, cols, weights, bias }
}

fn schema(parties: &[usize]) -> Vec<FeatureSpec> {
    parties
        .iter()
        .enumerate()
        .map(|(i, &party)| FeatureSpec { name: format!("f{i}"), party })
        .collect()
}

fn model(layers: Vec<DenseLayer>, f: u32, parties: &[usize]) -> QuantModel {
    QuantModel {
        layers,
        scale_f: f,
        feature_schema: schema(parties),
        metadata: ModelMetadata::default(),
        input_bits: 8,
        weight_bits: 8,
    }
}

fn random_model(r: &mut ChaCha20Rng, sizes: &[usize], parties: &[usize], f: u32, wmax: i64) -> QuantModel {
    let layers = sizes
        .windows(2)
        .map(|s| {
            let (cols, rows) = (s[0], s[1]);
            dense(
                rows,
                cols,
                (0..rows * cols).map(|_| r.gen_range(-wmax..=wmax)).collect(),
                (0..rows).map(|_| r.gen_range(-wmax..=wmax)).collect(),
            )
        })
        .collect();
    let mut m = model(layers, f, parties);
    m.input_bits = 4;
    m
}

fn run_compiled(c: &CompiledModel, row: &[i64]) -> InferenceResult {
    let [p0, p1] = c.model.split_features(row).unwrap();
    let x = c.party_inputs::<Goldilocks>(0, &p0).unwrap();
    let y = c.party_inputs::<Goldilocks>(1, &p1).unwrap();
    c.decode(&c.circuit.eval_plain(&x, &y).unwrap())
}

#[test]
fn one_in_one_out_toy_model() {
    let m = model(vec![dense(1, 1, vec![1], vec![0]), dense(1, 1, vec![5], vec![0])], 0, &[1]);
    let c = compile_to_circuit::<Goldilocks>(&m, 2).unwrap();
    for x in [-3i64, 0, 2, 7] {
        let want = 5 * x * x;
        assert_eq!(infer_clear(&m, &[x]).unwrap().logits, vec![want]);
        assert_eq!(run_compiled(&c, &[x]).logits, vec![want]);
    }
}

#[test]
fn quadratic_activation_alone() {
    let m = model(vec![dense(1, 1, vec![1], vec![0]), dense(1, 1, vec![1], vec![0])], 0, &[0]);
    assert_eq!(infer_clear(&m, &[3]).unwrap().logits, vec![9]);
}

#[test]
fn zero_model_gives_zero_logits() {
    let mut r = ChaCha20Rng::seed_from_u64(1);
    let mut m = random_model(&mut r, &[4, 3, 3, 2], &[0, 1, 0, 1], 2, 5);
    for l in &mut m.layers {
        l.weights.iter_mut().for_each(|v| *v = 0);
        l.bias.iter_mut().for_each(|v| *v = 0);
    }
    assert_eq!(infer_clear(&m, &[9, -3, 4, 1]).unwrap().logits, vec![0, 0]);
    let c = compile_to_circuit::<Goldilocks>(&m, 2).unwrap();
    assert_eq!(run_compiled(&c, &[9, -3, 4, 1]).logits, vec![0, 0]);
    assert_eq!(infer_clear(&m, &[0; 4]).unwrap().class, 0);
}

#[test]
fn compiled_circuit_matches_clear_inference() {
    let mut r = ChaCha20Rng::seed_from_u64(2);
    let parties = [0, 0, 1, 0, 1, 1, 0];
    let m = random_model(&mut r, &[7, 5, 4, 2], &parties, 1, 7);
    for w in [1, 2, 3, 8] {
        let c = compile_to_circuit::<Goldilocks>(&m, w).unwrap();
        for _ in 0..100 {
            let x: Vec<i64> = (0..7).map(|_| r.gen_range(-15..=15)).collect();
            assert_eq!(run_compiled(&c, &x), infer_clear(&m, &x).unwrap(), "w = {w}");
        }
    }
}

#[test]
fn scales_and_lifted_biases() {
    let m = model(
        vec![dense(1, 1, vec![4], vec![4]), dense(1, 1, vec![4], vec![4]), dense(1, 1, vec![4], vec![-4])],
        2,
        &[0],
    );
    assert_eq!(m.layer_scales(), vec![4, 10, 22]);
    assert_eq!(m.scaled_biases().unwrap(), vec![vec![4 << 2], vec![4 << 8], vec![-(4 << 20)]]);
    // every weight and bias is 1.0 in real units; x = 1.0 at scale 4: z1 = 2.0, a1 = 4.0, z2 = 5.0, a2 = 25.0, z3 = 24.0
    let out = infer_clear(&m, &[4]).unwrap();
    assert_eq!(out.scale, 22);
    assert_eq!(out.logits, vec![24 << 22]);
}

#[test]
fn argmax_prefers_lower_index_on_ties() {
    assert_eq!(argmax(&[3, 7, 7, 1]), 1);
    assert_eq!(argmax(&[-2, -2]), 0);
}

#[test]
fn overflow_is_refused_with_the_bound() {
    let mut r = ChaCha20Rng::seed_from_u64(3);
    let mut m = random_model(&mut r, &[3, 4, 4, 2], &[0, 1, 1], 1, 100);
    m.input_bits = 8;
    match compile_to_circuit::<Goldilocks>(&m, 2) {
        Err(NnError::Overflow { bound, limit }) => assert!(bound > limit),
        other => panic!("expected overflow, got {other:?}"),
    }
    let small = random_model(&mut r, &[2, 2, 2], &[0, 1], 0, 1);
    assert!(matches!(compile_to_circuit::<Toy257>(&small, 2), Err(NnError::Overflow { .. })));
}

#[test]
fn clear_inference_reports_wide_intermediates() {
    let m = model(
        vec![dense(1, 1, vec![255], vec![0]), dense(1, 1, vec![255], vec![0]), dense(1, 1, vec![255], vec![0])],
        0,
        &[0],
    );
    assert!(matches!(infer_clear(&m, &[255]), Err(NnError::IntermediateOverflow { layer: 1 })));
}

#[test]
fn validation_errors() {
    let ok = model(vec![dense(1, 2, vec![1, 1], vec![0])], 0, &[0, 1]);
    ok.validate().unwrap();
    let mut m = ok.clone();
    m.layers[0].cols = 3;
    assert!(matches!(m.validate(), Err(NnError::Schema(_))));
    let mut m = ok.clone();
    m.feature_schema[1].party = 2;
    assert!(matches!(m.validate(), Err(NnError::Schema(_))));
    let mut m = ok.clone();
    m.feature_schema[1].name = "f0".into();
    assert!(matches!(m.validate(), Err(NnError::Schema(_))));
    let mut m = ok;
    m.layers[0].weights[0] = 256;
    assert!(matches!(m.validate(), Err(NnError::Schema(_))));
}

#[test]
fn model_file_roundtrip() {
    let mut r = ChaCha20Rng::seed_from_u64(4);
    let mut m = random_model(&mut r, &[3, 2, 2], &[1, 0, 1], 3, 9);
    m.metadata = ModelMetadata { float_acc: 0.75, quant_acc: 0.5 };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&m, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), m);
}

#[test]
fn features_csv_roundtrip_and_missing_column() {
    let m = model(vec![dense(1, 3, vec![1, 1, 1], vec![0])], 0, &[0, 1, 0]);
    let csv = "f2,label,f0,extra\n5,1,-7,x\n0,0,3,y\n";
    let t = read_features(csv.as_bytes(), &m, 0).unwrap();
    assert_eq!(t.names, vec!["f0", "f2"]);
    assert_eq!(t.rows, vec![vec![-7, 5], vec![3, 0]]);
    assert_eq!(t.labels, Some(vec![1, 0]));
    let mut buf = Vec::new();
    write_features(&mut buf, &t).unwrap();
    assert_eq!(read_features(buf.as_slice(), &m, 0).unwrap(), t);
    match read_features(csv.as_bytes(), &m, 1) {
        Err(NnError::MissingColumn(name)) => assert_eq!(name, "f1"),
        other => panic!("expected missing column, got {other:?}"),
    }
    assert!(matches!(
        read_features("f0,f2\n1,z\n".as_bytes(), &m, 0),
        Err(NnError::BadValue { row: 1, .. })
    ));
}

#[test]
fn split_and_merge_are_inverse() {
    let m = model(vec![dense(1, 5, vec![0; 5], vec![0])], 0, &[1, 0, 0, 1, 0]);
    let row = vec![10, 20, 30, 40, 50];
    let [a, b] = m.split_features(&row).unwrap();
    assert_eq!(a, vec![20, 30, 50]);
    assert_eq!(b, vec![10, 40]);
    assert_eq!(m.merge_features(&a, &b).unwrap(), row);
    assert!(m.merge_features(&b, &a).is_err());
    assert!(Goldilocks::from_i64(-5).to_signed() == -5 && !Goldilocks::from_i64(-5).is_zero());
}
