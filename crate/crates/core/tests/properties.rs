use consensus_core::certificates::{diameter_envelope, phi_envelope, rate_linear, rate_nonlinear};
use consensus_core::experiments::oracle_reachability;
use consensus_core::graph::{connectivity_graph, globally_reachable, persistent_graph};
use consensus_core::{DirectedGraph, Piece, Schedule, Signal};
use proptest::prelude::*;

/// Periodic signal from sorted cut points in `[0, period]`.
fn signal_strategy() -> impl Strategy<Value = Signal> {
    (0.5f64..5.0, prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6), 0.0f64..1.0).prop_map(
        |(period, cuts, default)| {
            let mut points: Vec<f64> = cuts.iter().map(|c| c.0 * period).collect();
            points.push(0.0);
            points.push(period);
            points.sort_by(f64::total_cmp);
            points.dedup();
            let pieces = points
                .windows(2)
                .zip(&cuts)
                .filter(|(w, _)| w[1] > w[0])
                .map(|(w, c)| Piece::new(w[0], w[1], c.1))
                .collect();
            Signal::new(pieces, default, Some(period)).expect("valid signal")
        },
    )
}

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    (2usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::option::of(signal_strategy()), n * (n - 1)).prop_map(move |signals| {
            let mut s = Schedule::new(n).expect("n >= 2");
            let pairs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j);
            for ((i, j), sig) in pairs.zip(signals) {
                if let Some(sig) = sig {
                    s.set(i, j, sig).expect("valid entry");
                }
            }
            s
        })
    })
}

fn graph_strategy() -> impl Strategy<Value = DirectedGraph> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let edges = (0..n * n).filter(|&k| bits[k] && k / n != k % n).map(|k| (k / n, k % n));
            DirectedGraph::from_edges(n, edges.collect::<Vec<_>>()).expect("valid edges")
        })
    })
}

proptest! {
    #[test]
    fn integral_is_additive(s in signal_strategy(), a in 0.0f64..10.0, l1 in 0.0f64..7.0, l2 in 0.0f64..7.0) {
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = s.integrate(a, c).unwrap();
        let parts = s.integrate(a, b).unwrap() + s.integrate(b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn integral_is_periodic(s in signal_strategy(), a in 0.0f64..10.0, len in 0.0f64..7.0, k in 1u32..5) {
        let p = s.period().unwrap() * k as f64;
        let base = s.integrate(a, a + len).unwrap();
        let shifted = s.integrate(a + p, a + p + len).unwrap();
        prop_assert!((base - shifted).abs() <= 1e-10 * (1.0 + base.abs()));
    }

    #[test]
    fn time_rescaling_preserves_integrals(s in signal_strategy(), a in 0.0f64..5.0, len in 0.0f64..5.0, m in 1.0f64..4.0) {
        let r = s.rescale_time(m).unwrap();
        let lhs = r.integrate(m * a, m * (a + len)).unwrap();
        let rhs = s.integrate(a, a + len).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn graph_shrinks_as_threshold_grows(
        s in schedule_strategy(), t in 0.0f64..6.0, w in 0.2f64..4.0, lo in 0.01f64..1.0, hi in 0.01f64..1.0,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let strict = connectivity_graph(&s, t, w, hi).unwrap();
        let loose = connectivity_graph(&s, t, w, lo).unwrap();
        prop_assert!(strict.is_subgraph_of(&loose));
    }

    #[test]
    fn persistent_graph_is_in_every_block(s in schedule_strategy(), w in 0.2f64..4.0, mu in 0.01f64..1.0, k in 1usize..5) {
        let p = persistent_graph(&s, w, mu, k).unwrap();
        for block in 0..k {
            prop_assert!(p.is_subgraph_of(&connectivity_graph(&s, block as f64 * w, w, mu).unwrap()));
        }
    }

    #[test]
    fn reachability_matches_oracle(g in graph_strategy()) {
        let report = globally_reachable(&g);
        let (node, distances, length) = oracle_reachability(&g);
        prop_assert_eq!(report.reachable_node, node);
        prop_assert_eq!(report.distances, distances);
        prop_assert_eq!(report.length, length);
        if let Some(d) = report.length {
            prop_assert!(d <= g.n_nodes() - 1);
        }
    }

    #[test]
    fn contraction_is_in_half_open_unit_interval(n in 2usize..12, t in 0.1f64..10.0, mu in 0.001f64..1.0, d in 1usize..11) {
        let d = d.min(n - 1);
        let c = rate_linear(n, t, mu, d).unwrap();
        prop_assert!(c.contraction >= 0.5 && c.contraction <= 1.0);
        prop_assert!(c.one_minus_contraction > 0.0 || c.vacuous);
    }

    #[test]
    fn contraction_monotone_in_threshold_and_length(n in 3usize..12, t in 0.1f64..5.0, mu in 0.01f64..0.5, d in 1usize..10) {
        let d = d.min(n - 2);
        let base = rate_linear(n, t, mu, d).unwrap();
        let stronger = rate_linear(n, t, 2.0 * mu, d).unwrap();
        let longer = rate_linear(n, t, mu, d + 1).unwrap();
        // Compare gaps in log space: the gap shrinks with d and grows with mu.
        let log_gap = |c: &consensus_core::certificates::RateCertificate| c.log10_one_minus_contraction.unwrap();
        prop_assert!(log_gap(&stronger) >= log_gap(&base));
        prop_assert!(log_gap(&longer) <= log_gap(&base));
    }

    #[test]
    fn nonlinear_rate_reduces_to_linear(n in 2usize..10, t in 0.1f64..5.0, mu in 0.01f64..1.0, d in 1usize..9) {
        let d = d.min(n - 1);
        let lin = rate_linear(n, t, mu, d).unwrap();
        let non = rate_nonlinear(n, t, mu, d, 1.0, 1.0).unwrap();
        prop_assert_eq!(lin.contraction, non.contraction);
        prop_assert_eq!(lin.block_time, non.block_time);
        prop_assert_eq!(lin.envelope_lead, non.envelope_lead);
    }

    #[test]
    fn envelope_is_continuous_and_bounded(n in 2usize..6, t in 0.5f64..3.0, mu in 0.3f64..1.0, lo in 0.5f64..1.0) {
        let cert = rate_nonlinear(n, t, mu, 1, lo, 1.0).unwrap();
        let knee = cert.block_time - cert.envelope_lead;
        let eps = 1e-9 * cert.block_time;
        prop_assert!((phi_envelope(&cert, knee - eps) - phi_envelope(&cert, knee + eps)).abs() < 1e-6);
        prop_assert!((phi_envelope(&cert, cert.block_time) - cert.contraction).abs() < 1e-12);
        for k in 0..50 {
            let s = 3.0 * cert.block_time * k as f64 / 49.0;
            let e = diameter_envelope(&cert, s);
            prop_assert!(e > 0.0 && e <= 1.0);
        }
    }
}
