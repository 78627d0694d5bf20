use adct::blur::{parse_kernel, BlurKernel};
use adct::container::{read_record, write_record, Persist, Record};
use adct::features::PatchGrid;
use adct::image::GrayImage;
use adct::sparse::{rescale_code_blur_to_sharp, rescale_code_sharp_to_blur, CodeMatrix, Dictionary, SparseCode};
use adct::spm::spm_pool;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::path::Path;

fn sparse_code(k: usize) -> impl Strategy<Value = SparseCode> {
    proptest::collection::vec(prop_oneof![Just(0.0), -1e3..1e3f64], k).prop_map(|v| SparseCode::from_dense(&v))
}

fn through_bytes<T: Persist>(value: &T) -> T {
    let mut bytes = Vec::new();
    for r in value.to_records() {
        write_record(&mut bytes, &r).unwrap();
    }
    let mut cursor = bytes.as_slice();
    let mut records = Vec::new();
    while let Some(r) = read_record(&mut cursor).unwrap() {
        records.push(r);
    }
    T::from_records(&mut records.into_iter()).unwrap()
}

proptest! {
    #[test]
    fn rescaling_round_trips(
        (code, norms) in (1usize..24).prop_flat_map(|k| (sparse_code(k), proptest::collection::vec(1e-3..1e3f64, k)))
    ) {
        let lifted = rescale_code_sharp_to_blur(&code, &norms).unwrap();
        prop_assert_eq!(lifted.support(), code.support());
        let back = rescale_code_blur_to_sharp(&lifted, &norms).unwrap();
        for (a, b) in back.values().iter().zip(code.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matrix_records_are_lossless(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
        let m = DMatrix::from_fn(rows, cols, |r, c| f64::from_bits(seed.rotate_left((r * 7 + c) as u32) >> 2));
        let mut bytes = Vec::new();
        write_record(&mut bytes, &Record::matrix(m.clone())).unwrap();
        prop_assert_eq!(bytes.len(), 17 + 8 * rows * cols);
        let back = read_record(&mut bytes.as_slice()).unwrap().unwrap().into_plain().unwrap();
        prop_assert_eq!(back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn dictionaries_and_codes_round_trip(
        (atoms, codes) in (1usize..6, 1usize..8).prop_flat_map(|(d, k)| (
            proptest::collection::vec(-10.0..10.0f64, d * k).prop_map(move |v| DMatrix::from_vec(d, k, v)),
            proptest::collection::vec(sparse_code(k), 0..10),
        ))
    ) {
        let k = atoms.ncols();
        if atoms.column_iter().all(|c| c.norm() > 1e-6) {
            let unit = Dictionary::unit_from(atoms.clone()).unwrap();
            prop_assert_eq!(&through_bytes(&unit), &unit);
        }
        let plain = Dictionary::new(atoms).unwrap();
        prop_assert_eq!(&through_bytes(&plain), &plain);
        let codes = CodeMatrix::new(k, codes).unwrap();
        prop_assert_eq!(&through_bytes(&codes), &codes);
    }

    #[test]
    fn images_round_trip(h in 1usize..8, w in 1usize..8, v in proptest::collection::vec(0.0..1.0f64, 64)) {
        let img = GrayImage::new(h, w, v[..h * w].to_vec()).unwrap();
        prop_assert_eq!(through_bytes(&img), img);
    }

    #[test]
    fn kernel_text_round_trips(half_h in 0usize..4, half_w in 0usize..4, v in proptest::collection::vec(0.0..1.0f64, 49)) {
        let (h, w) = (2 * half_h + 1, 2 * half_w + 1);
        let mut data = v[..h * w].to_vec();
        data[0] += 0.5;
        let k = BlurKernel::from_weights(h, w, data).unwrap();
        prop_assert_eq!(parse_kernel(&k.to_text(), Path::new("k")).unwrap(), k);
    }

    #[test]
    fn pooling_scales_and_ignores_patch_order(
        (codes, positions) in (1usize..6, 1usize..12).prop_flat_map(|(k, n)| (
            proptest::collection::vec(sparse_code(k), n),
            proptest::collection::vec((0usize..40, 0usize..40), n),
        )),
        scale in 0.01..100.0f64,
        rotate in 0usize..12,
    ) {
        let k = codes[0].len();
        let n = codes.len();
        let grid = |pos: Vec<(usize, usize)>| PatchGrid {
            patch_size: 8,
            stride: 1,
            image_shape: (48, 48),
            patches: vec![Vec::new(); pos.len()],
            positions: pos,
        };
        let base = spm_pool(&CodeMatrix::new(k, codes.clone()).unwrap(), &grid(positions.clone())).unwrap();

        let scaled: Vec<SparseCode> = codes
            .iter()
            .map(|c| rescale_code_sharp_to_blur(c, &vec![scale; k]).unwrap())
            .collect();
        let pooled = spm_pool(&CodeMatrix::new(k, scaled).unwrap(), &grid(positions.clone())).unwrap();
        for (a, b) in pooled.vector.iter().zip(&base.vector) {
            prop_assert!((a - scale * b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        let (mut rc, mut rp) = (codes.clone(), positions.clone());
        rc.rotate_left(rotate % n);
        rp.rotate_left(rotate % n);
        let rotated = spm_pool(&CodeMatrix::new(k, rc).unwrap(), &grid(rp)).unwrap();
        prop_assert_eq!(rotated, base);
    }
}
