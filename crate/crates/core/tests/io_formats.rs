use std::path::PathBuf;

use approx::assert_abs_diff_eq;
use idmdgp::error::Error;
use idmdgp::io::{
    format_conformation, format_instance, parse_instance, parse_instance_str, parse_reference_str, parse_trailer,
    write_conformation,
};
use idmdgp::metrics::{init_distance_variables, lde_mde, stress};
use idmdgp::model::TorsionDomain;
use idmdgp::Instance;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn toy() -> Instance {
    parse_instance(data("toy10.inst")).unwrap()
}

#[test]
fn toy_matches_matrix_pattern() {
    let inst = toy();
    assert_eq!(inst.n_atoms(), 10);
    assert_eq!(inst.n_edges(), 27);
    let count = |span: usize| inst.edges().iter().filter(|e| e.span() == span).count();
    assert_eq!((count(1), count(2), count(3)), (9, 8, 7));
    let extras: Vec<(usize, usize)> = inst.edges().iter().filter(|e| e.span() > 3).map(|e| (e.i + 1, e.j + 1)).collect();
    assert_eq!(extras, vec![(1, 8), (2, 10), (3, 9)]);
    for e in inst.edges() {
        match e.span() {
            1 | 2 => assert!(e.is_exact()),
            _ => assert!(e.lower < e.upper, "({}, {})", e.i + 1, e.j + 1),
        }
    }
}

#[test]
fn inverted_bounds_name_the_line() {
    let text = "# header\nE 1 2 1.5 1.5 N 1 CA 1\nE 1 3 2.5 2.4 N 1 C 1\nE 2 3 1.5 1.5 CA 1 C 1\n";
    match parse_instance_str(text, "bad.inst") {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("dL"), "{message}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn error_kinds_are_distinct() {
    // Malformed line.
    assert!(matches!(parse_instance_str("E 1 2 x 1 N 1 CA 1\n", "f"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_instance_str("Q 1 2\n", "f"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_instance_str("E 2 1 1 1 N 1 CA 1\n", "f"), Err(Error::Parse { line: 1, .. })));
    // Structurally invalid: edge (1, 3) missing.
    let text = "E 1 2 1.5 1.5 N 1 CA 1\nE 2 3 1.5 1.5 CA 1 C 1\n";
    assert!(matches!(parse_instance_str(text, "f"), Err(Error::InvalidInstance(_))));
    // Inconsistent atom labels.
    let text = "E 1 2 1.5 1.5 N 1 CA 1\nE 1 3 2.5 2.5 N 1 C 1\nE 2 3 1.5 1.5 CB 1 C 1\n";
    assert!(matches!(parse_instance_str(text, "f"), Err(Error::Parse { line: 3, .. })));
    // Missing file.
    assert!(matches!(parse_instance("/nonexistent/x.inst"), Err(Error::Io { .. })));
}

#[test]
fn torsion_signs_parse() {
    let base = "E 1 2 1.5 1.5 N 1 CA 1\nE 1 3 2.5 2.5 N 1 C 1\nE 2 3 1.5 1.5 CA 1 C 1\n\
                E 2 4 2.4 2.4 CA 1 N 2\nE 3 4 1.3 1.3 C 1 N 2\nE 1 4 2.0 3.5 N 1 N 2\n";
    for (sign, expect) in [
        ("+", TorsionDomain::Single { lo: 10f64.to_radians(), hi: 20f64.to_radians() }),
        ("-", TorsionDomain::Single { lo: -20f64.to_radians(), hi: -10f64.to_radians() }),
        ("−", TorsionDomain::Single { lo: -20f64.to_radians(), hi: -10f64.to_radians() }),
        ("±", TorsionDomain::Symmetric { lo: 10f64.to_radians(), hi: 20f64.to_radians() }),
        ("+-", TorsionDomain::Symmetric { lo: 10f64.to_radians(), hi: 20f64.to_radians() }),
    ] {
        let inst = parse_instance_str(&format!("{base}T 4 10 20 {sign}\n"), "f").unwrap();
        assert_eq!(*inst.torsion_domain(3), expect, "sign {sign}");
    }
    assert!(matches!(parse_instance_str(&format!("{base}T 4 10 20 *\n"), "f"), Err(Error::Parse { line: 7, .. })));
    assert!(matches!(parse_instance_str(&format!("{base}T 3 10 20 +\n"), "f"), Err(Error::Parse { line: 7, .. })));
}

fn same_instance(a: &Instance, b: &Instance) {
    assert_eq!(a.atoms(), b.atoms());
    assert_eq!(a.edges(), b.edges());
    assert_eq!(a.annotations().keys().collect::<Vec<_>>(), b.annotations().keys().collect::<Vec<_>>());
    for k in 3..a.n_atoms() {
        let (x, y) = (a.torsion_domain(k), b.torsion_domain(k));
        assert_eq!(x.is_symmetric(), y.is_symmetric());
        assert_abs_diff_eq!(x.bounds().0, y.bounds().0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.bounds().1, y.bounds().1, epsilon = 1e-12);
    }
}

#[test]
fn write_parse_round_trip() {
    let inst = toy();
    let again = parse_instance_str(&format_instance(&inst), "rt").unwrap();
    same_instance(&inst, &again);
    // Text is a fixed point after one pass.
    let text = format_instance(&again);
    assert_eq!(format_instance(&parse_instance_str(&text, "rt").unwrap()), text);
}

#[test]
fn conformation_round_trip_and_trailer() {
    let inst = toy();
    let out = idmdgp::multistart_solve(&inst, &Default::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.conf");
    write_conformation(&out.conformation.coords, &inst, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let back = parse_reference_str(&text, &path).unwrap();
    assert_eq!(back.atoms, inst.atoms());
    for (p, q) in back.coords.iter().zip(&out.conformation.coords) {
        assert!((p - q).amax() <= 5e-7 + 1e-12);
    }
    let (lde, mde, sigma) = parse_trailer(&text).unwrap();
    let (l2, m2) = lde_mde(&back.coords, &inst);
    let s2 = stress(&back.coords, &inst, &init_distance_variables(&back.coords, &inst));
    assert_abs_diff_eq!(lde, l2, epsilon = 1e-6);
    assert_abs_diff_eq!(mde, m2, epsilon = 1e-6);
    assert_abs_diff_eq!(sigma, s2, epsilon = 1e-6);
}

#[test]
fn empty_conformation_is_refused() {
    let inst = toy();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.conf");
    assert!(format_conformation(&[], &inst).is_err());
    assert!(write_conformation(&[], &inst, &path).is_err());
    assert!(!path.exists());
}

#[test]
fn reference_needs_contiguous_indices() {
    let ok = "1 N 1 0 0 0\n2 CA 1 1.458 0 0\n";
    assert_eq!(parse_reference_str(ok, "r").unwrap().len(), 2);
    let gap = "1 N 1 0 0 0\n3 CA 1 1.458 0 0\n";
    assert!(matches!(parse_reference_str(gap, "r"), Err(Error::Parse { line: 2, .. })));
    let nan = "1 N 1 0 nan 0\n";
    assert!(matches!(parse_reference_str(nan, "r"), Err(Error::Parse { line: 1, .. })));
}
