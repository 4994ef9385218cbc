use proptest::prelude::*;
use qac_core::topology::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = SimpleGraph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let edges = pairs.into_iter().filter(|(a, b)| a != b);
            SimpleGraph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificates_always_validate(g in graph_strategy(11)) {
        if let Some(cert) = contains_k33_subdivision(&g) {
            prop_assert!(validate_k33(&g, &cert).is_ok());
        }
    }

    #[test]
    fn chimera_edge_count(r in 1usize..=8, c in 1usize..=8) {
        let hw = build_chimera(r, c, 4, &Default::default()).unwrap();
        prop_assert_eq!(hw.num_edges(), 16 * r * c + 4 * (r * (c - 1) + (r - 1) * c));
        hw.validate().unwrap();
    }

    #[test]
    fn defect_free_encoding_is_complete(r in 1usize..=6, c in 1usize..=6) {
        let hw = build_chimera(r, c, 4, &Default::default()).unwrap();
        let (enc, eg) = build_encoding(&hw).unwrap();
        prop_assert_eq!(enc.num_logical(), 2 * r * c);
        prop_assert!(eg.logical_qubits().iter().all(|q| q.is_complete()));
        prop_assert!(eg.logical_edges().iter().all(|e| e.couplers.len() == 3));
    }

    #[test]
    fn embeddings_are_simple_paths(
        defects in proptest::collection::btree_set(0usize..128, 0..6),
        length in 2usize..12,
        seed in any::<u64>(),
    ) {
        let hw = build_chimera(4, 4, 4, &defects).unwrap();
        let (_, eg) = build_encoding(&hw).unwrap();
        if let Ok(paths) = embed_chain(&eg, length, 4, seed) {
            for p in &paths {
                prop_assert_eq!(p.len(), length);
                for w in p.windows(2) {
                    prop_assert!(eg.edge_between(w[0], w[1]).is_some());
                }
                let distinct: std::collections::BTreeSet<_> = p.iter().collect();
                prop_assert_eq!(distinct.len(), length);
                prop_assert!(is_valid_embedding(&eg, p));
            }
        }
    }
}
