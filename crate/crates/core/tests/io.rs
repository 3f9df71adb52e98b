mod common;

use common::*;
use kgfock::dynamics::{solve, NonlinearitySpec, Scheme, SolverConfig};
use kgfock::fockspace::{ModeBasis, PolyFunctional};
use kgfock::io::{
    field_from_bytes, field_from_json, field_to_bytes, field_to_json, kernels_to_json, read_field_file, read_path,
    write_field, write_path,
};
use kgfock::selftest::{golden_functional, golden_kernels};
use kgfock::Error;
use proptest::prelude::*;

#[test]
fn binary_layout() {
    let f = field(grid1(8), 1);
    let bytes = field_to_bytes(&f);
    assert_eq!(&bytes[..4], b"KGSF");
    assert_eq!(bytes.len(), 4 + 4 + 8 + 24 + 8 + 16 * f.coeffs.len());
    assert!(matches!(field_from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(field_from_bytes(&bad), Err(Error::Format(_))));
    let mut long = bytes.clone();
    long.push(0);
    assert!(field_from_bytes(&long).is_err());
}

#[test]
fn file_and_path_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = field(grid2(4), 2);
    let p = dir.path().join("f.bin");
    write_field(&p, &f).unwrap();
    assert_eq!(read_field_file(&p).unwrap(), f);

    let d0 = pair(grid1(8), 3, 0.3);
    let cfg = SolverConfig { dt: 0.1, scheme: Scheme::Strang, ..Default::default() };
    let path = solve(&d0, &NonlinearitySpec::power(0.1, 2), 0.5, &cfg).unwrap();
    let index = write_path(dir.path(), "run", &path).unwrap();
    assert_eq!(index.times, path.times);
    let back = read_path(dir.path(), "run").unwrap();
    assert_eq!(back.times, path.times);
    assert_eq!(back.states, path.states);
}

#[test]
fn kernel_export_shape() {
    let b = ModeBasis::new(grid1(4));
    let f = PolyFunctional::vacuum(&b, 2).unwrap();
    let k = kernels_to_json(&f);
    assert_eq!(k.basis.elements.len(), b.dim());
    assert_eq!(k.kernels.len(), 3);
    assert_eq!(k.kernels[2].data.len(), b.dim() * b.dim());
    assert_eq!(k.kernels[0].data, vec![1.0]);
}

#[test]
fn golden_kernel_is_reproduced() {
    let now = kernels_to_json(&golden_functional().unwrap());
    let pinned = golden_kernels().unwrap();
    assert_eq!(now.kernels.len(), pinned.kernels.len());
    for (a, b) in now.kernels.iter().zip(&pinned.kernels) {
        assert_eq!(a.shape, b.shape);
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() <= 1e-12);
        }
        let dim = a.shape.first().copied().unwrap_or(1);
        if a.degree == 2 {
            for i in 0..dim {
                for j in 0..dim {
                    assert_eq!(a.data[i * dim + j], a.data[j * dim + i]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bytes_and_json_round_trip(seed in any::<u64>(), two_d in any::<bool>()) {
        let f = if two_d { field(grid2(4), seed) } else { field(grid1(16), seed) };
        prop_assert_eq!(&field_from_bytes(&field_to_bytes(&f)).unwrap(), &f);
        prop_assert_eq!(&field_from_json(&field_to_json(&f).unwrap()).unwrap(), &f);
    }
}
