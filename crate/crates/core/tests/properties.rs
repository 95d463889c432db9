//! Property tests over arbitrary edge lists: ingest canonicalization, cut
//! evaluation, terminal-split accounting, and coarsening weight algebra.

use proptest::prelude::*;

use stcut::graph::WeightedGraph;
use stcut::irls::VoltageVector;
use stcut::rounding::{cluster_voltages, coarsen};

// Edge lists over a small id universe with a guaranteed spanning path, so
// ingest succeeds and the interesting merge/self-loop handling gets hit.
fn edge_lists() -> impl Strategy<Value = (Vec<(u64, u64, f64)>, u64)> {
    (3u64..10).prop_flat_map(|n| {
        let spine = (1..n)
            .map(|u| (u, u.wrapping_sub(1), 0.5f64))
            .collect::<Vec<_>>();
        let extras = proptest::collection::vec(
            (0..n, 0..n, 0.01f64..2.0),
            0..12,
        );
        (Just(spine), extras, Just(n)).prop_map(|(spine, extras, n)| {
            let mut edges = spine;
            edges.extend(extras);
            (edges, n)
        })
    })
}

proptest! {
    #[test]
    fn ingest_canonicalization_round_trips((edges, n) in edge_lists()) {
        let g = WeightedGraph::ingest(&edges, 0, n - 1).unwrap();
        // exported canonical list reproduces the graph exactly
        let exported = g.canonical_edges();
        let g2 = WeightedGraph::ingest(&exported, 0, n - 1).unwrap();
        prop_assert_eq!(exported, g2.canonical_edges());
        // total capacity equals the raw sum over non-loop input edges
        let raw: f64 = edges
            .iter()
            .filter(|&&(u, v, _)| u != v)
            .map(|&(_, _, c)| c)
            .sum();
        prop_assert!((g.total_capacity() - raw).abs() <= 1e-9 * raw.max(1.0));
    }

    #[test]
    fn split_accounts_for_every_edge((edges, n) in edge_lists()) {
        let g = WeightedGraph::ingest(&edges, 0, n - 1).unwrap();
        let split = g.split_terminals();
        prop_assert_eq!(split.classified_edges(), g.edge_count());
        // cut value of {s} equals the scan over the raw, deduplicated edges
        let mut side = vec![false; g.node_count()];
        side[g.source()] = true;
        let by_graph = g.cut_value(&side).unwrap();
        let by_scan: f64 = g
            .edges()
            .iter()
            .filter(|e| (e.u == g.source()) != (e.v == g.source()))
            .map(|e| e.capacity)
            .sum();
        prop_assert!((by_graph - by_scan).abs() <= 1e-12 * by_scan.max(1.0));
    }

    #[test]
    fn coarsening_preserves_weight_and_cut_values(
        (edges, n) in edge_lists(),
        raw_volts in proptest::collection::vec(0.0f64..1.0, 10),
    ) {
        let g = WeightedGraph::ingest(&edges, 0, n - 1).unwrap();
        let mut values = vec![0.0; g.node_count()];
        values[g.source()] = 1.0;
        for u in 0..g.node_count() {
            if u != g.source() && u != g.sink() {
                values[u] = raw_volts[u % raw_volts.len()];
            }
        }
        let x = VoltageVector::from_values(values, &g).unwrap();
        let thresholds = cluster_voltages(&x).unwrap();
        let c = coarsen(&g, &x, &thresholds);
        // contraction merges weight, never creates it
        let coarse_total: f64 = c.graph.edges().iter().map(|e| e.capacity).sum();
        prop_assert!(coarse_total <= g.total_capacity() + 1e-9);
        // every coarse labeling lifts to an identical-value cut
        let nc = c.graph.node_count();
        let middles = nc - 2;
        let trials = 1u32 << middles.min(6);
        for mask in 0..trials {
            let mut coarse_side = vec![false; nc];
            coarse_side[0] = true;
            for bit in 0..middles.min(6) {
                coarse_side[2 + bit] = mask & (1 << bit) != 0;
            }
            let coarse_value = c.graph.cut_value(&coarse_side).unwrap();
            let lifted = c.lift(&coarse_side);
            let lifted_value = g.cut_value(&lifted).unwrap();
            prop_assert!(
                (coarse_value - lifted_value).abs() <= 1e-9 * coarse_value.max(1.0)
            );
        }
    }
}
