use std::collections::BTreeMap;
use std::fmt;

use super::{RoadNetwork, MAX_FRC};

/// Length summary by functional road class, counting every directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub km_by_frc: BTreeMap<u8, f64>,
    pub profiled_km_by_frc: BTreeMap<u8, f64>,
    pub total_km: f64,
    pub profiled_km: f64,
    /// Share of directed-edge kilometres carrying a speed profile, in percent.
    pub profiled_pct: f64,
    pub strongly_connected: bool,
}

pub fn network_stats(network: &RoadNetwork) -> NetworkStats {
    let mut km_by_frc = BTreeMap::new();
    let mut profiled_km_by_frc = BTreeMap::new();
    for (i, e) in network.edges().iter().enumerate() {
        let km = e.length_m / 1000.0;
        *km_by_frc.entry(e.frc).or_insert(0.0) += km;
        if network.edge_profile(i).is_some() {
            *profiled_km_by_frc.entry(e.frc).or_insert(0.0) += km;
        }
    }
    let total_km: f64 = km_by_frc.values().sum();
    let profiled_km: f64 = profiled_km_by_frc.values().sum();
    let profiled_pct = if total_km > 0.0 {
        100.0 * profiled_km / total_km
    } else {
        0.0
    };
    NetworkStats {
        node_count: network.node_count(),
        edge_count: network.edge_count(),
        km_by_frc,
        profiled_km_by_frc,
        total_km,
        profiled_km,
        profiled_pct,
        strongly_connected: is_strongly_connected(network),
    }
}

fn is_strongly_connected(network: &RoadNetwork) -> bool {
    let n = network.node_count();
    if n == 0 {
        return true;
    }
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in 0..network.edge_count() {
        reverse[network.edge_head(e)].push(network.edge_tail(e));
    }
    let reach = |next: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in next(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(&|v| network.out_edges(v).map(|e| network.edge_head(e)).collect())
        && reach(&|v| reverse[v].clone())
}

impl fmt::Display for NetworkStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes\t{}", self.node_count)?;
        writeln!(f, "directed_edges\t{}", self.edge_count)?;
        writeln!(f, "frc\tkm\tprofiled_km\tprofiled_pct")?;
        for frc in 0..=MAX_FRC {
            let km = self.km_by_frc.get(&frc).copied().unwrap_or(0.0);
            let pkm = self.profiled_km_by_frc.get(&frc).copied().unwrap_or(0.0);
            let pct = if km > 0.0 { 100.0 * pkm / km } else { 0.0 };
            writeln!(f, "{frc}\t{km:.3}\t{pkm:.3}\t{pct:.2}")?;
        }
        writeln!(f, "total_km\t{:.3}", self.total_km)?;
        writeln!(f, "profiled_pct\t{:.2}", self.profiled_pct)?;
        writeln!(f, "strongly_connected\t{}", self.strongly_connected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::test_util::*;
    use crate::network::{Edge, SpeedProfile, Weekday};

    #[test]
    fn single_profiled_edge() {
        let mut e = edge(1, 1, 2, 2000.0, 50.0, Some("p"));
        e.frc = 2;
        let net = RoadNetwork::new(
            Weekday::Wed,
            vec![node(1, 0.0, 0.0), node(2, 2000.0, 0.0)],
            vec![e],
            vec![SpeedProfile::flat("p", Weekday::Wed, 1.0).unwrap()],
        )
        .unwrap();
        let s = network_stats(&net);
        assert_eq!(s.km_by_frc.get(&2), Some(&2.0));
        assert_eq!(s.profiled_pct, 100.0);
        assert!(!s.strongly_connected);
    }

    #[test]
    fn directions_count_separately() {
        let edges: Vec<Edge> = vec![
            edge(1, 1, 2, 1000.0, 50.0, Some("p")),
            edge(2, 2, 1, 1000.0, 50.0, None),
        ];
        let net = RoadNetwork::new(
            Weekday::Wed,
            vec![node(1, 0.0, 0.0), node(2, 1000.0, 0.0)],
            edges,
            vec![SpeedProfile::flat("p", Weekday::Wed, 1.0).unwrap()],
        )
        .unwrap();
        let s = network_stats(&net);
        assert_eq!(s.total_km, 2.0);
        assert_eq!(s.profiled_pct, 50.0);
        assert!(s.strongly_connected);
        assert!(s.to_string().contains("profiled_pct\t50.00"));
    }
}
