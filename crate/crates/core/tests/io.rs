use std::fs;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlcm_core::io::*;
use rlcm_core::model::{Dataset, ModelSpec};
use rlcm_core::sampler::{run_chain, ChainConfig, COLUMN_CONVENTION};
use rlcm_core::{Error, RngStream};

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (yp, xp) = (dir.path().join("y.csv"), dir.path().join("x.csv"));
    let data = Dataset::new(2, 1, vec![3, 2], 1, vec![2, 0, 1, 1], vec![0.25, -1.5]).unwrap();
    save_dataset(&data, &yp, Some(&xp)).unwrap();
    let back = load_dataset(&yp, Some(&xp), &[3, 2]).unwrap();
    assert_eq!(back, data);
    assert_eq!(fs::read_to_string(&yp).unwrap(), "n,t,y_1,y_2\n1,1,2,0\n2,1,1,1\n");

    let masked = data.with_mask(&[false, true]).unwrap();
    save_dataset(&masked, &yp, Some(&xp)).unwrap();
    assert!(fs::read_to_string(&yp).unwrap().contains("2,1,NA,NA"));
    assert_eq!(load_dataset(&yp, Some(&xp), &[3, 2]).unwrap(), masked);
}

#[test]
fn out_of_range_category_names_location() {
    let dir = tempfile::tempdir().unwrap();
    let yp = dir.path().join("y.csv");
    fs::write(&yp, "n,t,y_1,y_2\n1,1,0,1\n2,1,1,2\n").unwrap();
    let err = load_dataset(&yp, None, &[2, 2]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("item 2"), "{msg}");
    assert!(msg.contains('3'), "{msg}");

    fs::write(&yp, "n,t,y_1,y_2\n1,1,0,1\n2,1,1\n").unwrap();
    assert!(matches!(load_dataset(&yp, None, &[2, 2]), Err(Error::Parse { .. })));
    fs::write(&yp, "n,t,y_1,y_2\n1,1,0,NA\n").unwrap();
    assert!(load_dataset(&yp, None, &[2, 2]).is_err());
    fs::write(&yp, "n,t,y_1\n1,1,0\n1,1,1\n").unwrap();
    assert!(load_dataset(&yp, None, &[2]).is_err());
}

#[test]
fn na_rows_set_the_mask() {
    let dir = tempfile::tempdir().unwrap();
    let yp = dir.path().join("y.csv");
    fs::write(&yp, "n,t,y_1,y_2\n1,1,0,1\n1,2,NA,NA\n2,1,NA,NA\n2,2,1,0\n").unwrap();
    let data = load_dataset(&yp, None, &[2, 2]).unwrap();
    assert_eq!(data.mask(), &[false, true, true, false]);
    assert_eq!(data.y(1, 1, 0), Some(1));
    assert_eq!(data.y(0, 1, 0), None);
}

fn fitted_chain() -> rlcm_core::sampler::Chain {
    let spec = ModelSpec::new(2, 2, vec![3; 4], 2, 1, 1).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(41);
    let y: Vec<u16> = (0..12 * 2 * 4).map(|_| r.random_range(0..3)).collect();
    let x: Vec<f64> = (0..24).map(|_| r.random_range(-1.0..1.0)).collect();
    let data = Dataset::new(12, 2, vec![3; 4], 1, y, x).unwrap();
    let config = ChainConfig {
        burn_in: 5,
        post_burn_in: 12,
        thin: 2,
        ..ChainConfig::default()
    };
    run_chain(&data, &spec, &config, &mut RngStream::new(41, 0)).unwrap()
}

#[test]
fn chain_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    let chain = fitted_chain();
    save_chain(&chain, &a).unwrap();
    let loaded = load_chain(&a).unwrap();
    assert_eq!(loaded.draws, chain.draws);
    assert_eq!(loaded.meta.spec, chain.meta.spec);
    assert_eq!(loaded.meta.config, chain.meta.config);
    save_chain(&loaded, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.contains(COLUMN_CONVENTION));
    assert!(text.starts_with(&format!("{CHAIN_FORMAT}\n")));
}

#[test]
fn damaged_chain_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let chain = fitted_chain();
    save_chain(&chain, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();

    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 3].join("\n") + "\n";
    fs::write(&path, cut).unwrap();
    assert!(matches!(load_chain(&path), Err(Error::Corrupt(_))));

    fs::write(&path, text.replacen(CHAIN_FORMAT, "rlcm-chain 99", 1)).unwrap();
    let err = load_chain(&path).unwrap_err();
    assert!(matches!(err, Error::VersionMismatch { .. }), "{err}");
}
