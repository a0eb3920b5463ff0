use convolve_core::bundle::{generate_bundle, read_sidecar, write_sidecar, NoiseModel, PathBundle};
use convolve_core::estimator::{estimate_e, ExperimentConfig, ProfileChoice};
use convolve_core::forcing::ForcingSpec;
use convolve_core::simulate::{error_sup, reference_run, scheme_run, ErrorSweep};
use convolve_core::{ModeGrid, Multiplier, SchemeRegistry, SobolevWeight};

fn small_config(model: &str, scheme: &str) -> ExperimentConfig {
    ExperimentConfig {
        model: model.into(),
        scheme: scheme.into(),
        lambda: 0.0,
        beta: 1.0,
        p: 2.0,
        n_list: vec![4, 8, 16, 32],
        n_ref: 128,
        cutoff: 8,
        dimension: 1,
        horizon: 1.0,
        samples: 100,
        seed: 9,
        decay: None,
        profile: ProfileChoice::Auto,
        bootstrap_resamples: 100,
        slope_tolerance: None,
        custom_symbols: None,
        custom_order: None,
        custom_scheme: None,
    }
}

#[test]
fn sidecar_file_roundtrip() {
    let grid = ModeGrid::one_dim(3).unwrap();
    let mult = Multiplier::transport(&grid).unwrap();
    let forcing = ForcingSpec::decaying(&grid, 1.0).unwrap();
    let bundle = generate_bundle(17, &grid, &mult, &forcing, 32, 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.bin");
    write_sidecar(&bundle, std::fs::File::create(&path).unwrap()).unwrap();
    let (header, payload) = read_sidecar(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(header.seed, 17);
    assert_eq!(header.n_ref, 32);
    assert_eq!(header.modes as usize, grid.len());
    let expected: Vec<[f64; 3]> = (0..grid.len())
        .flat_map(|k| bundle.mode(k).to_vec())
        .collect();
    assert_eq!(payload, expected);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] ^= 0xff;
    assert!(read_sidecar(bytes.as_slice()).is_err());
}

/// The fused sweep must agree with separate reference and scheme runs.
#[test]
fn sweep_matches_separate_runs_and_is_coherent() {
    let grid = ModeGrid::one_dim(6).unwrap();
    let weight = SobolevWeight::new(-1.0);
    for (model, mult) in [
        ("heat", Multiplier::heat(&grid).unwrap()),
        ("schroedinger", Multiplier::schroedinger(&grid).unwrap()),
    ] {
        let forcing = ForcingSpec::decaying(&grid, 1.0).unwrap();
        for name in ["splitting", "implicit_euler", "crank_nicolson"] {
            let scheme = SchemeRegistry::default().get(name).unwrap();
            let noise = || NoiseModel::new(&grid, &mult, &forcing, 64, 1.0).unwrap();
            let sweep =
                ErrorSweep::new(noise(), &grid, &mult, scheme.as_ref(), &[4, 8, 16], weight)
                    .unwrap();
            let alone =
                ErrorSweep::new(noise(), &grid, &mult, scheme.as_ref(), &[8], weight).unwrap();
            let model_ref = noise();
            for m in 0..3u64 {
                let fused = sweep.sample(5, m);
                assert_eq!(alone.sample(5, m)[0], fused[1], "{model} {name}");
                let bundle = PathBundle::from_model(&model_ref, 5, m);
                let reference = reference_run(&bundle, &mult).unwrap();
                for (i, n) in [4, 8, 16].into_iter().enumerate() {
                    let run = scheme_run(&bundle, &mult, scheme.as_ref(), n).unwrap();
                    let direct = error_sup(&reference, &run, &grid, weight).unwrap();
                    assert!(
                        (direct - fused[i]).abs() <= 1e-12 * direct.max(1e-300),
                        "{model} {name} n={n}: {direct} vs {}",
                        fused[i]
                    );
                }
            }
        }
    }
}

#[test]
fn zero_generator_is_reproduced_exactly() {
    let mut c = small_config("custom", "implicit_euler");
    c.custom_symbols = Some(vec![[0.0, 0.0]; 17]);
    for scheme in ["splitting", "implicit_euler", "crank_nicolson"] {
        c.scheme = scheme.into();
        let t = estimate_e(&c, 2).unwrap();
        assert!(
            t.rows.iter().all(|r| r.e_hat <= 1e-12),
            "{scheme}: {:?}",
            t.rows
        );
    }
}

#[test]
fn estimates_are_worker_independent_and_bracketed() {
    let c = small_config("transport", "crank_nicolson");
    let a = estimate_e(&c, 1).unwrap();
    let b = estimate_e(&c, 4).unwrap();
    assert_eq!(a.rows, b.rows);
    for r in &a.rows {
        assert!(r.e_hat >= 0.0 && r.ci.lo <= r.e_hat && r.e_hat <= r.ci.hi);
    }
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(estimate_e(&other, 1).unwrap().rows, a.rows);
}
