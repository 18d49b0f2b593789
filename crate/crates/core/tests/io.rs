use fell_core::gen;
use fell_core::io::{compose_instance, emit_instance, parse_instance, Instance, InstanceDocument, Kind};
use fell_core::{Error, Status};

const GOLDEN: &str = include_str!("data/pair_scalar.json");

fn parse_path(text: &str) -> String {
    match parse_instance(text) {
        Err(Error::Parse { path, .. }) => path,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn version_only_document_is_valid() {
    let doc = parse_instance(r#"{"version": "1"}"#).unwrap();
    assert_eq!(doc, InstanceDocument::default());
    let inst = Instance::resolve(&doc).unwrap();
    assert!(inst.objects.is_empty());
}

#[test]
fn golden_pair_scalar_document_matches_generator() {
    let doc = parse_instance(GOLDEN).unwrap();
    assert_eq!(doc, gen::canonical_equivalence(&[1, 1], &[1], None).unwrap());
    let inst = Instance::resolve(&doc).unwrap();
    for (kind, name) in &inst.objects {
        let r = inst.verify(name).unwrap();
        assert_eq!(r.status, Status::Pass, "{kind:?} {name}\n{r}");
    }
    assert_eq!(inst.kind_of("Xeq"), Some(Kind::Equivalence));
}

#[test]
fn emitted_documents_round_trip() {
    let docs = [
        gen::pair_groupoid(3).unwrap(),
        gen::group(5, false).unwrap(),
        gen::transformation(4, 2).unwrap(),
        gen::full_matrix_bundle(2, 2).unwrap(),
        gen::projective_rep_bundle(2).unwrap(),
        gen::random_dims(11, 3, 3).unwrap(),
    ];
    for doc in docs {
        let text = emit_instance(&doc);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(emit_instance(&back), text);
    }
}

#[test]
fn nan_and_infinite_entries_are_rejected() {
    let nan = GOLDEN.replacen("[[[[1.0, 0.0]]]]", "[[[[NaN, 0.0]]]]", 1);
    assert!(matches!(parse_instance(&nan), Err(Error::Parse { .. })));
    let huge = GOLDEN.replacen("[[[[1.0, 0.0]]]]", "[[[[1e999, 0.0]]]]", 1);
    assert!(parse_instance(&huge).is_err());
}

#[test]
fn unknown_fields_name_their_path() {
    let text = GOLDEN.replacen(r#""name": "BB","#, r#""name": "BB", "colour": 3,"#, 1);
    let path = parse_path(&text);
    assert!(path.starts_with("fell_bundles[1]"), "{path}");
    let top = parse_path(r#"{"version": "1", "extra": []}"#);
    assert_eq!(top, "extra");
}

#[test]
fn dangling_references_and_duplicates_are_reported() {
    let text = GOLDEN.replacen(r#""base": "Xeq""#, r#""base": "Zeq""#, 1);
    let doc = parse_instance(&text).unwrap();
    match Instance::resolve(&doc) {
        Err(Error::Parse { path, msg }) => {
            assert_eq!(path, "bundle_spaces[0].base");
            assert!(msg.contains("Zeq"));
        }
        other => panic!("{other:?}"),
    }
    let text = GOLDEN.replacen(r#""name": "BB""#, r#""name": "BA""#, 1);
    let doc = parse_instance(&text).unwrap();
    assert!(matches!(Instance::resolve(&doc), Err(Error::Parse { path, .. }) if path == "fell_bundles[1].name"));
}

#[test]
fn wrong_table_shapes_are_reported_with_paths() {
    let text = GOLDEN.replacen(r#""right_act": [[0], [1]]"#, r#""right_act": [[0], [1], [0]]"#, 1);
    let doc = parse_instance(&text).unwrap();
    assert!(matches!(Instance::resolve(&doc), Err(Error::Parse { path, .. }) if path == "bispaces[0].right_act"));
}

#[test]
fn rescaled_inner_product_fails_compatibility() {
    let mut doc = gen::canonical_equivalence(&[1, 2], &[2], None).unwrap();
    doc.bundle_spaces[0].right_weight = 2.0;
    let doc = parse_instance(&emit_instance(&doc)).unwrap();
    let inst = Instance::resolve(&doc).unwrap();
    let r = inst.verify("M").unwrap();
    assert_eq!(r.status, Status::AxiomFail);
    assert_eq!(r.axiom.as_deref(), Some("FE2.e"));
    assert!(!r.witness.unwrap().tuple.is_empty());
}

#[test]
fn tolerance_override_applies_to_bundles() {
    let doc = gen::canonical_equivalence(&[1], &[2], None).unwrap();
    let inst = Instance::resolve_with_tol(&doc, Some(1e-6)).unwrap();
    assert!(inst.verify("M").unwrap().passed());
}

#[test]
fn composing_canonical_chain_emits_verifiable_realization() {
    let doc = gen::canonical_equivalence(&[1, 2], &[2, 1], Some(&[1, 1, 2])).unwrap();
    let inst = Instance::resolve(&doc).unwrap();
    let c = compose_instance(&doc, &inst, "M", "N").unwrap();
    assert_eq!(c.status, Status::Pass);
    assert_eq!(c.quotient.n_classes(), 6);
    assert_eq!(c.certificates.len(), 2);
    assert_eq!(c.certificates[1].morita.len(), 6);
    let out = parse_instance(&emit_instance(&c.document)).unwrap();
    let inst2 = Instance::resolve(&out).unwrap();
    let r = inst2.verify("M*N").unwrap();
    assert!(r.passed(), "{r}");
    let dims: Vec<usize> = out.bundle_spaces[2].fibres.iter().map(|f| f.basis.len()).collect();
    assert_eq!(dims, vec![1, 1, 2, 2, 2, 4]);
}

#[test]
fn composing_pauli_pair_gives_morita_witnesses() {
    let doc = gen::projective_rep_bundle(2).unwrap();
    let inst = Instance::resolve(&doc).unwrap();
    for name in ["M", "N"] {
        assert!(inst.verify(name).unwrap().passed());
    }
    let c = compose_instance(&doc, &inst, "M", "N").unwrap();
    assert_eq!(c.status, Status::Pass);
    for w in &c.certificates[1].morita {
        assert_eq!((w.target_left, w.target_right), (4, 1));
    }
    let out = Instance::resolve(&c.document).unwrap();
    assert!(out.verify("M*N").unwrap().passed());
}

#[test]
fn composing_mismatched_pair_is_refused() {
    let doc = gen::canonical_equivalence(&[1], &[1], Some(&[1])).unwrap();
    let inst = Instance::resolve(&doc).unwrap();
    assert!(matches!(compose_instance(&doc, &inst, "N", "M"), Err(Error::Composition(_))));
}
