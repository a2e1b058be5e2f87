use std::path::Path;

use facelight::formats::{
    catalog_csv, parse_catalog_csv, read_catalog, read_model, read_patterns, to_json_string, write_catalog, write_json,
    write_model,
};
use facelight::io::{decode_mask, decode_normals, decode_png, encode_mask, encode_normals, encode_png, load_face, save_face};
use facelight_core::facegen::{generate_face, ToneSpec};
use facelight_core::illum::{separable_blobs, train, TrainConfig};
use facelight_core::relight::pattern_grid;
use facelight_core::shade::{synthetic_catalog, Catalog};
use facelight_core::{ImageBuffer, Mask, Rgb8};

#[test]
fn png_roundtrip_is_lossless() {
    let pixels = (0..40 * 30).map(|i| Rgb8::new((i % 256) as u8, (i * 7 % 256) as u8, (i * 13 % 256) as u8)).collect();
    let img = ImageBuffer::from_pixels(40, 30, pixels).unwrap();
    let bytes = encode_png(&img);
    assert_eq!(decode_png(&bytes).unwrap(), img);
    assert_eq!(bytes, encode_png(&img));
}

#[test]
fn truncated_png_is_an_error() {
    let bytes = encode_png(&ImageBuffer::new(16, 16, Rgb8::gray(3)));
    assert!(decode_png(&bytes[..bytes.len() / 2]).is_err());
    assert!(decode_png(b"not a png").is_err());
}

#[test]
fn mask_roundtrip() {
    let mask = Mask::from_fn(33, 21, |x, y| (x * y) % 5 == 1);
    assert_eq!(decode_mask(&encode_mask(&mask)).unwrap(), mask);
}

#[test]
fn normals_roundtrip_and_truncation() {
    let normals = vec![[0.0f32, 0.0, 1.0], [0.6, 0.0, 0.8], [-0.6, 0.8, 0.0], [0.0, -1.0, 0.0]];
    let bytes = encode_normals(2, 2, &normals);
    assert_eq!(bytes.len(), 8 + 4 * 12);
    assert_eq!(&bytes[..4], &2u32.to_le_bytes());
    assert_eq!(decode_normals(&bytes), Some((2, 2, normals)));
    assert_eq!(decode_normals(&bytes[..bytes.len() - 1]), None);
}

#[test]
fn face_asset_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let face = generate_face(9, &ToneSpec::from_t(0.3).unwrap(), 72).unwrap();
    save_face(dir.path(), &face).unwrap();
    assert_eq!(load_face(dir.path()).unwrap(), face);
}

#[test]
fn catalog_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = synthetic_catalog(&[("alpha", 5), ("beta", 3)], 1);
    let path = dir.path().join("catalog.csv");
    write_catalog(&path, &catalog).unwrap();
    assert_eq!(read_catalog(&path).unwrap(), catalog);
    let text = catalog_csv(&catalog);
    assert!(text.starts_with("product_id,shade_id,name,r,g,b\n"));
}

#[test]
fn catalog_csv_rejects_bad_rows() {
    let p = Path::new("inline.csv");
    assert!(parse_catalog_csv("product_id,shade_id,name,r,g,b\na,1,x,300,2,3\n", p).is_err());
    assert!(parse_catalog_csv("product_id,shade_id,name,r,g,b\na,1,x,1,2,3\na,1,y,4,5,6\n", p).is_err());
    let ok = parse_catalog_csv("product_id,shade_id,name,r,g,b\na, 1 ,Ivory,1,2,3\n", p).unwrap();
    assert_eq!(ok.shades()[0].shade_id, "1");
    assert_eq!(parse_catalog_csv("product_id,shade_id,name,r,g,b\n", p).unwrap(), Catalog::default());
}

#[test]
fn model_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(&separable_blobs(50, 2), &TrainConfig::default()).unwrap().model;
    let path = dir.path().join("model.json");
    write_model(&path, &model).unwrap();
    assert_eq!(read_model(&path).unwrap(), model);
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(value["version"], 1);
    assert_eq!(value["weights"].as_array().unwrap().len(), 27);
}

#[test]
fn pattern_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = pattern_grid(12, 3);
    let path = dir.path().join("patterns.json");
    write_json(&path, &patterns).unwrap();
    assert_eq!(read_patterns(&path).unwrap(), patterns);
    let value: serde_json::Value = serde_json::from_str(&to_json_string(&patterns)).unwrap();
    let first = &value[0];
    assert_eq!(first["sh"].as_array().unwrap().len(), 9);
    assert_eq!(first["lights"][0]["dir"].as_array().unwrap().len(), 3);
    assert!(first["label"] == "good" || first["label"] == "bad");
}
