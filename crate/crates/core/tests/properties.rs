use proptest::prelude::*;

use treespan::cut::{cut_once, partition_tree, validate_partition};
use treespan::embed::{embed_rooted_tree, verify_embedding, EmbedBudget, Embedding, Violation};
use treespan::error::Error;
use treespan::expansion::{refute_expander_sampled, verify_expander_exact, witness_is_valid};
use treespan::generators::{gnp, random_regular};
use treespan::graph::{families, Graph};
use treespan::pipeline::embed_nearly_spanning;
use treespan::rng::RngStream;
use treespan::spectral::{mixing_bound_audit, second_eigenvalue, SpectralOptions};
use treespan::splitter::{split_degrees, verify_split};
use treespan::tree::random_bounded_degree_tree;
use treespan::vertex_set::VertexSet;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn partitions_validate(k in 1usize..300, d in 2usize..6, eps_idx in 0usize..3, slack in 0usize..200, seed: u64) {
        let eps = [0.1, 0.25, 0.45][eps_idx];
        let n = ((k as f64 / (1.0 - eps)).ceil() as usize).max((16.0 * d as f64 / eps).ceil() as usize + 1) + slack;
        let t = random_bounded_degree_tree(k, d, seed).unwrap();
        let p = partition_tree(&t, eps, n).unwrap();
        prop_assert!(validate_partition(&t, &p).is_ok());
        // Cross edges leave each piece towards later pieces only.
        for i in 0..p.piece_count() {
            for (x, root, j) in p.outgoing_edges(i) {
                prop_assert!(j > i);
                prop_assert_eq!(p.pieces[j].connect_edge, Some((x, root)));
                prop_assert_eq!(p.piece_of[x], i);
            }
        }
    }

    #[test]
    fn single_cut_window(k in 2usize..120, d in 2usize..6, seed: u64, frac in 0.0f64..1.0) {
        let t = random_bounded_degree_tree(k, d, seed).unwrap();
        let target = 1 + ((k - 1) as f64 * frac) as usize;
        let target = target.min(k - 1);
        let c = cut_once(&t, target).unwrap();
        prop_assert!(c.subtree_size >= target);
        prop_assert!(c.subtree_size <= (d - 1) * (target - 1) + 1);
        prop_assert!(t.parent(c.child_vertex) == Some(c.parent_vertex) || t.parent(c.parent_vertex) == Some(c.child_vertex));
    }

    #[test]
    fn trees_embed_in_complete_hosts(k in 1usize..12, extra in 0usize..4, d in 2usize..5, seed: u64, root_pick: usize) {
        let h = families::complete(k + extra);
        let t = random_bounded_degree_tree(k, d, seed).unwrap();
        let r = root_pick % (k + extra);
        let e = embed_rooted_tree(&h, &t, r, &EmbedBudget::default()).unwrap();
        prop_assert!(verify_embedding(&h, &t, &e).valid);
        prop_assert_eq!(e.map[t.root()], r);
    }

    #[test]
    fn broken_embeddings_are_caught(k in 3usize..40, seed: u64, victim: usize) {
        let g = gnp(80, 0.5, RngStream::new(seed, 1)).unwrap();
        let t = random_bounded_degree_tree(k, 3, seed).unwrap();
        let Ok(e) = embed_rooted_tree(&g, &t, 0, &EmbedBudget::default()) else { return Ok(()) };
        let v = victim % k;
        let mut dup = e.map.clone();
        dup[v] = dup[(v + 1) % k];
        let check = verify_embedding(&g, &t, &Embedding { map: dup });
        prop_assert!(!check.valid);
        let short = verify_embedding(&g, &t, &Embedding { map: e.map[..k - 1].to_vec() });
        let wrong_length = matches!(short.violation, Some(Violation::WrongLength { .. }));
        prop_assert!(wrong_length);
    }

    #[test]
    fn sampled_witnesses_are_genuine(n in 6usize..30, p in 0.05f64..0.5, seed: u64) {
        let g = gnp(n, p, RngStream::new(seed, 2)).unwrap();
        let v = refute_expander_sampled(&g, 0.25, 2.0, 40, seed).unwrap();
        prop_assert!(!v.is_certified());
        if let Some(w) = &v.witness {
            prop_assert!(witness_is_valid(&g, w, v.max_size, 2.0, false));
            if n <= 20 {
                prop_assert!(verify_expander_exact(&g, 0.25, 2.0).unwrap().is_refuted());
            }
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn splits_verify(n in 40usize..200, seed: u64) {
        let n = n & !1;
        let g = random_regular(n, 24, RngStream::new(seed, 3)).unwrap();
        let s = split_degrees(&g, 3, seed, 1000).unwrap();
        prop_assert!(verify_split(&g, 3, &s.coloring, s.threshold).is_none());
        prop_assert_eq!(s.threshold, 4);
        let total: usize = s.classes.iter().map(VertexSet::len).sum();
        prop_assert_eq!(total, n);
    }

    #[test]
    fn mixing_bound_holds(n in 20usize..120, degree in 3usize..9, seed: u64, pb in 0.0f64..1.0, pc in 0.0f64..1.0) {
        let n = if n * degree % 2 == 1 { n + 1 } else { n };
        let g = random_regular(n, degree, RngStream::new(seed, 4)).unwrap();
        let prof = second_eigenvalue(&g, &SpectralOptions::dense()).unwrap();
        let mut rng = RngStream::new(seed, 5).rng();
        use rand::Rng;
        let b = VertexSet::from_vertices(n, (0..n).filter(|_| rng.gen_bool(pb))).unwrap();
        let c = VertexSet::from_vertices(n, (0..n).filter(|_| rng.gen_bool(pc))).unwrap();
        prop_assert!(mixing_bound_audit(&g, &prof, &b, &c).unwrap().holds);
    }

    #[test]
    fn pipeline_embeddings_verify(k in 50usize..200, seed: u64) {
        let g = gnp(400, 0.08, RngStream::new(seed, 6)).unwrap();
        let t = random_bounded_degree_tree(k, 3, seed).unwrap();
        let run = embed_nearly_spanning(&g, &t, 0.4, seed, &EmbedBudget::default()).unwrap();
        if let Some(e) = &run.embedding {
            prop_assert!(verify_embedding(&g, &t, e).valid);
            prop_assert_eq!(e.used(400).unwrap().len(), k);
        }
        prop_assert_eq!(run.succeeded(), run.embedding.is_some());
    }
}

#[test]
fn unbounded_search_proves_nonexistence() {
    // A star with three leaves needs a degree-3 vertex.
    let host = families::cycle(9);
    let star = treespan::tree::RootedTree::from_parents(vec![None, Some(0), Some(0), Some(0)], 3).unwrap();
    match embed_rooted_tree(&host, &star, 0, &EmbedBudget::unbounded()) {
        Err(Error::SearchFailed { exhaustive, guest_size, .. }) => {
            assert!(exhaustive);
            assert_eq!(guest_size, 4);
        }
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn graph_text_round_trip_for_generated_hosts() {
    for seed in 0..5 {
        let g = gnp(60, 0.2, RngStream::new(seed, 7)).unwrap();
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }
}
