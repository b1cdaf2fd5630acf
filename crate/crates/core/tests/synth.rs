use tailfair::distribution::Group;
use tailfair::rng_from_seed;
use tailfair::synth::{generate_continuous, nearest_vertex_discretize, SynthParams, PAD};

fn reference_params() -> SynthParams {
    SynthParams::new(0.2, 64.0, 10_000, 0.1)
}

#[test]
fn shape_of_the_reference_configuration() {
    let params = reference_params();
    let data = generate_continuous(&params, &mut rng_from_seed(1)).unwrap();
    assert_eq!((data.d_min, data.d_maj), (10, 6));
    assert_eq!(data.spec.n_minority(), 1000);
    assert_eq!(data.rows.len(), 10_000);
    assert_eq!(data.width(), 16);
    assert!(data.rows.iter().all(|r| r.features.len() == 16));
    let names = data.column_names();
    assert_eq!(names.first().unwrap(), "f0");
    assert_eq!(&names[16..], ["label", "group", "cluster"]);
}

#[test]
fn recovery_at_default_sigma() {
    let params = reference_params();
    let data = generate_continuous(&params, &mut rng_from_seed(2)).unwrap();
    let disc = nearest_vertex_discretize(&data).unwrap();
    assert_eq!(disc.m(), data.rows.len());
    let hits = data
        .rows
        .iter()
        .zip(disc.draws())
        .filter(|(r, &x)| r.cluster == x)
        .count();
    let rate = hits as f64 / data.rows.len() as f64;
    assert!(rate >= 0.99, "{rate}");
    for (r, &y) in data.rows.iter().zip(disc.labels()) {
        assert_eq!(r.label, y);
    }
}

#[test]
fn zero_sigma_is_exact() {
    let params = SynthParams {
        sigma: 0.0,
        n_labels: 3,
        ..SynthParams::new(0.3, 20.0, 2_000, 0.2)
    };
    let data = generate_continuous(&params, &mut rng_from_seed(3)).unwrap();
    for r in &data.rows {
        let block = &r.features[data.block(r.group)];
        let vertex = data.vertices[r.cluster];
        for (i, &v) in block.iter().enumerate() {
            assert_eq!(v, (vertex >> i & 1) as f64);
        }
    }
    let disc = nearest_vertex_discretize(&data).unwrap();
    for (r, (&x, &y)) in data.rows.iter().zip(disc.draws().iter().zip(disc.labels())) {
        assert_eq!((x, y), (r.cluster, r.label));
    }
}

#[test]
fn pad_columns_identify_the_group() {
    let data = generate_continuous(&reference_params(), &mut rng_from_seed(4)).unwrap();
    for r in &data.rows {
        let other = match r.group {
            Group::Minority => Group::Majority,
            Group::Majority => Group::Minority,
        };
        assert!(r.features[data.block(other)].iter().all(|&v| v == PAD));
        // the own block is never the constant pad (with probability one)
        assert!(r.features[data.block(r.group)].iter().any(|&v| v != PAD));
        let min_range = data.spec.group_range(Group::Minority);
        assert_eq!(min_range.contains(&r.cluster), r.group == Group::Minority);
    }
}

#[test]
fn minority_fraction_across_generations() {
    let params = reference_params();
    let mut total = 0.0;
    for seed in 0..20 {
        let data = generate_continuous(&params, &mut rng_from_seed(100 + seed)).unwrap();
        total += data.minority_rows() as f64 / 1e4;
    }
    let mean = total / 20.0;
    assert!((mean - 0.2).abs() <= 0.006, "{mean}");
}

#[test]
fn cluster_labels_are_balanced() {
    let params = SynthParams {
        n_labels: 3,
        ..SynthParams::new(0.2, 64.0, 1_000, 0.1)
    };
    let mut counts = [0usize; 3];
    let mut clusters = 0;
    for seed in 0..100 {
        let data = generate_continuous(&params, &mut rng_from_seed(200 + seed)).unwrap();
        clusters += data.cluster_labels.len();
        for &y in &data.cluster_labels {
            counts[y as usize] += 1;
        }
    }
    let n = clusters as f64;
    let sd = (n * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for c in counts {
        assert!((c as f64 - n / 3.0).abs() <= 5.0 * sd, "{counts:?}");
    }
}

#[test]
fn same_seed_same_csv() {
    let params = SynthParams::new(0.2, 10.0, 300, 0.5);
    let csv = |seed| {
        let data = generate_continuous(&params, &mut rng_from_seed(seed)).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = csv(5);
    assert_eq!(a, csv(5));
    assert_ne!(a, csv(6));
    assert_eq!(a.lines().count(), 301);
    assert!(a.ends_with('\n'));
}

#[test]
fn rejects_impossible_params() {
    let mut rng = rng_from_seed(0);
    assert!(generate_continuous(&SynthParams::new(0.2, 10.0, 100, 0.0), &mut rng).is_err());
    let bad_sigma = SynthParams {
        sigma: -1.0,
        ..SynthParams::new(0.2, 10.0, 100, 0.5)
    };
    assert!(generate_continuous(&bad_sigma, &mut rng).is_err());
}
