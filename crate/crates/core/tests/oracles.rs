mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdaccess::accessibility::{absolute_from_cube, decay_weight, DecayParams};
use tdaccess::network::{fifoize, Edge, Instant, Node, RoadNetwork, SpeedProfile, Weekday};
use tdaccess::routing::{build_cost_cube, one_to_all_td, to_center_column, SlotSchedule};

use common::*;

#[test]
fn decay_matches_series_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = DecayParams::default();
    for _ in 0..1000 {
        let c: f64 = rng.gen_range(0.0..300.0);
        let got = decay_weight(c, &params).unwrap();
        let want = taylor_exp(-0.065 * c);
        assert!(((got - want) / want).abs() < 1e-12, "c = {c}: {got} vs {want}");
    }
}

#[test]
fn decay_is_strictly_decreasing() {
    let params = DecayParams::default();
    let mut prev = decay_weight(0.0, &params).unwrap();
    assert_eq!(prev, 1.0);
    for i in 1..2000 {
        let w = decay_weight(i as f64 * 0.1, &params).unwrap();
        assert!(w < prev);
        prev = w;
    }
    assert_eq!(decay_weight(f64::INFINITY, &params).unwrap(), 0.0);
}

#[test]
fn field_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let slots = SlotSchedule::new(8).unwrap();
    let params = DecayParams::default();
    for _ in 0..40 {
        let net = random_network(&mut rng, 8, 20, slots.count());
        let opps: Vec<f64> = (0..net.node_count()).map(|_| rng.gen_range(0.0..500.0)).collect();
        let grid = zone_per_node(&net, |i| opps[i]);
        let cube = build_cost_cube(&fifoize(net.clone()), &grid, &slots).unwrap();
        let got = absolute_from_cube(&cube, &opps, &params).unwrap();
        let oracle = oracle_cube(&net, &slots);
        let n = net.node_count();
        for (row, a) in got.iter().enumerate() {
            let costs = &oracle[row * n..(row + 1) * n];
            let want: f64 = costs
                .iter()
                .zip(&opps)
                .filter(|(c, _)| c.is_finite())
                .map(|(c, d)| d * taylor_exp(-0.065 * c))
                .sum();
            assert!((a - want).abs() <= 1e-9 * want.max(1.0), "{a} vs {want}");
        }
    }
}

/// All-pairs shortest free-flow minutes by Floyd-Warshall.
fn floyd(net: &RoadNetwork) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (e, edge) in net.edges().iter().enumerate() {
        let (u, v) = (net.edge_tail(e), net.edge_head(e));
        let t = edge.length_m / 1000.0 / edge.freeflow_kmh * 60.0;
        d[u][v] = d[u][v].min(t);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

#[test]
fn flat_profiles_reduce_to_static_shortest_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let slots = SlotSchedule::new(6).unwrap();
    for _ in 0..50 {
        let net = random_network(&mut rng, 8, 20, slots.count());
        let ids: Vec<_> = net.profiles().iter().map(|p| p.id().to_owned()).collect();
        let flat = RoadNetwork::new(
            Weekday::Wed,
            net.nodes().to_vec(),
            net.edges().to_vec(),
            ids.iter().map(|id| SpeedProfile::flat(id.clone(), Weekday::Wed, 1.0).unwrap()).collect(),
        )
        .unwrap();
        let grid = zone_per_node(&flat, |_| 1.0);
        let cube = build_cost_cube(&fifoize(flat.clone()), &grid, &slots).unwrap();
        let d = floyd(&flat);
        let n = flat.node_count();
        for s in 0..slots.count() {
            for o in 0..n {
                for t in 0..n {
                    let got = cube.get(s, o, t);
                    let want = d[o][t];
                    assert!(
                        (got.is_infinite() && want.is_infinite()) || (got - want).abs() <= 1e-9,
                        "slot {s} {o}->{t}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn later_departure_never_arrives_earlier() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let net = random_network(&mut rng, 8, 20, 8);
        let fifo = fifoize(net.clone());
        let src = rng.gen_range(0..net.node_count());
        let mut prev: Option<Vec<f64>> = None;
        for step in 0..200 {
            let depart = Instant::from_minutes(step as f64 * 7.1);
            let labels = one_to_all_td(&fifo, src, depart);
            let arrival: Vec<f64> = (0..net.node_count()).map(|v| depart.minutes() + labels.elapsed(v)).collect();
            if let Some(p) = &prev {
                for (a, b) in arrival.iter().zip(p) {
                    assert!(a >= &(b - 1e-9), "arrived at {a} after leaving later, earlier run {b}");
                }
            }
            prev = Some(arrival);
        }
    }
}

#[test]
fn one_way_pair_is_asymmetric() {
    // 0 -> 1 direct; 1 -> 0 only via a detour through 2
    let nodes = (0..3)
        .map(|i| Node {
            id: i + 1,
            x: i as f64 * 1000.0,
            y: 0.0,
        })
        .collect();
    let edge = |id, from, to, len| Edge {
        id,
        from_node: from,
        to_node: to,
        length_m: len,
        frc: 3,
        freeflow_kmh: 60.0,
        profile_id: None,
    };
    let net = RoadNetwork::new(
        Weekday::Wed,
        nodes,
        vec![edge(1, 1, 2, 1000.0), edge(2, 2, 3, 3000.0), edge(3, 3, 1, 4000.0)],
        Vec::new(),
    )
    .unwrap();
    let grid = zone_per_node(&net, |_| 1.0);
    let slots = SlotSchedule::new(1).unwrap();
    let cube = build_cost_cube(&fifoize(net.clone()), &grid, &slots).unwrap();
    let center = to_center_column(&cube, 0).unwrap();
    let from_zero = one_to_all_td(&fifoize(net), 0, Instant::from_hm(0, 0));
    assert_eq!(from_zero.elapsed(1), 1.0);
    assert_eq!(cube.get(0, 0, 1), 1.0);
    assert_eq!(cube.get(0, 1, 0), 7.0);
    assert_ne!(cube.get(0, 0, 1), cube.get(0, 1, 0));
    assert_eq!(center.to_center[0][1], 7.0);
    assert_eq!(center.from_center[0][1], 1.0);
}
