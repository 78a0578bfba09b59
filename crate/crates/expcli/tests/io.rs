use diffrast_cli::io::{
    linear_to_srgb, parse_obj, read_csv, srgb_to_linear, write_obj, write_png, BitDepth, IoError,
};
use diffrast_cli::{load_obj, read_png, write_csv, ConvergenceLog};
use diffrast_core::ImageGrid;

#[test]
fn obj_face_indices_are_zero_based() {
    let text = "\
v 0 0 0
v 1 0 0
v 0 1 0
v 1 1 0
v 2 1 0
v 2 2 0
vt 0 0
vt 1 0
vt 0 1
vt 1 1
vt 0.5 0.5
vt 0.2 0.2
f 1/2 3/4 5/6
";
    let m = parse_obj(text).unwrap();
    assert_eq!(m.pos_idx, vec![[0, 2, 4]]);
    assert_eq!(m.tex_idx, Some(vec![[1, 3, 5]]));
    assert_eq!(m.positions.len(), 6);
}

#[test]
fn obj_negative_indices_and_fans() {
    let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n").unwrap();
    assert_eq!(m.pos_idx, vec![[0, 1, 2], [0, 2, 3]]);
    assert!(m.tex_idx.is_none());
}

#[test]
fn malformed_face_names_its_line() {
    let err = parse_obj("v 0 0 0\nv 1 0 0\n\nf 1 2 x\n").unwrap_err();
    match err {
        IoError::ParseError { line, .. } => assert_eq!(line, 4),
        other => panic!("unexpected error {other:?}"),
    }
    let err = parse_obj("v 0 0 0\nf 1 2 3\n").unwrap_err();
    assert!(matches!(err, IoError::ParseError { line: 2, .. }), "{err:?}");
}

#[test]
fn obj_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = parse_obj("v 0 0 0\nv 1 0.5 0\nv 0 1 -0.25\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n").unwrap();
    let path = dir.path().join("m.obj");
    write_obj(&m, &path).unwrap();
    let back = load_obj(&path).unwrap();
    assert_eq!(back.pos_idx, m.pos_idx);
    assert_eq!(back.tex_idx, m.tex_idx);
    assert_eq!(back.positions, m.positions);
}

fn lattice_image(levels: u32) -> ImageGrid<f32> {
    let (w, h, c) = (7, 5, 3);
    let data = (0..w * h * c).map(|i| ((i as u32 * 37) % (levels + 1)) as f32 / levels as f32).collect();
    ImageGrid::from_data(w, h, c, data).unwrap()
}

#[test]
fn png_round_trip_on_lattice() {
    let dir = tempfile::tempdir().unwrap();
    for (depth, levels) in [(BitDepth::Eight, 255), (BitDepth::Sixteen, 65535)] {
        let img = lattice_image(levels);
        let path = dir.path().join(format!("{levels}.png"));
        write_png(&img, &path, depth, false).unwrap();
        let back = read_png(&path, false).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (7, 5, 3));
        assert_eq!(back.data(), img.data(), "{depth:?}");
    }
}

#[test]
fn srgb_png_round_trip_is_close() {
    let dir = tempfile::tempdir().unwrap();
    let img = lattice_image(255);
    let path = dir.path().join("s.png");
    write_png(&img, &path, BitDepth::Sixteen, true).unwrap();
    let back = read_png(&path, true).unwrap();
    for (a, b) in img.data().iter().zip(back.data()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn srgb_transfer_inverts() {
    for i in 0..=100 {
        let x = i as f32 / 100.0;
        assert!((srgb_to_linear(linear_to_srgb(x)) - x).abs() < 1e-5);
    }
}

#[test]
fn indexed_png_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idx.png");
    let file = std::fs::File::create(&path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 2, 1);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_palette(vec![0u8, 0, 0, 255, 255, 255]);
    enc.write_header().unwrap().write_image_data(&[0, 1]).unwrap();
    assert!(matches!(read_png(&path, false), Err(IoError::UnsupportedPngFormat(_))));
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut log = ConvergenceLog::default();
    log.push(0, 1.5, 0.25).unwrap();
    log.push(10, 0.125, 1e-7).unwrap();
    log.push(20, 3.0e-12, 0.0).unwrap();
    let path = dir.path().join("log.csv");
    write_csv(&log, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("iteration,loss,metric\n"));
    assert_eq!(read_csv(&path).unwrap().records(), log.records());
}

#[test]
fn log_rejects_non_increasing_iterations() {
    let mut log = ConvergenceLog::default();
    log.push(5, 1.0, 1.0).unwrap();
    assert!(log.push(5, 1.0, 1.0).is_err());
    assert!(log.push(3, 1.0, 1.0).is_err());
    assert_eq!(log.len(), 1);
}
