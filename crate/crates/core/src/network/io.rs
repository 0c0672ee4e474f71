use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;

use super::{Edge, Node, RoadNetwork, SpeedProfile, Weekday, BIN_COUNT, MAX_FRC};
use crate::csvio::{create, finish, open_csv};
use crate::error::{Error, Result};

/// Locations of the three network CSV files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub profiles: PathBuf,
}

impl NetworkFiles {
    pub fn in_dir(dir: &Path) -> Self {
        NetworkFiles {
            nodes: dir.join("nodes.csv"),
            edges: dir.join("edges.csv"),
            profiles: dir.join("profiles.csv"),
        }
    }
}

fn lift(path: &Path, line: u64, err: Error) -> Error {
    match err {
        Error::Invalid { what, message } => Error::parse(path, line, format!("{what}: {message}")),
        other => other,
    }
}

/// Reads and validates a network for `weekday`. Edges of functional road
/// class 7 or above are skipped with a warning.
pub fn load_network(files: &NetworkFiles, weekday: Weekday) -> Result<RoadNetwork> {
    let nodes = read_nodes(&files.nodes)?;
    let (edges, edge_lines) = read_edges(&files.edges)?;
    let profiles = read_profiles(&files.profiles)?;
    RoadNetwork::new(weekday, nodes, edges, profiles).map_err(|err| {
        // point at the offending edge row where possible
        if let Error::Invalid { what, .. } = &err {
            if let Some(id) = what.strip_prefix("edge ").and_then(|s| s.parse::<u64>().ok()) {
                if let Some((_, line)) = edge_lines.iter().find(|(eid, _)| *eid == id) {
                    return lift(&files.edges, *line, err);
                }
            }
        }
        err
    })
}

fn read_nodes(path: &Path) -> Result<Vec<Node>> {
    let mut csv = open_csv(path, &["node_id", "x_m", "y_m"])?;
    let path = csv.path().to_owned();
    let mut nodes = Vec::new();
    for row in csv.rows() {
        let row = row?;
        row.expect_len(&path, 3)?;
        nodes.push(Node {
            id: row.parse(&path, 0, "node_id")?,
            x: row.parse(&path, 1, "x_m")?,
            y: row.parse(&path, 2, "y_m")?,
        });
    }
    Ok(nodes)
}

fn read_edges(path: &Path) -> Result<(Vec<Edge>, Vec<(u64, u64)>)> {
    let mut csv = open_csv(
        path,
        &["edge_id", "from_node", "to_node", "length_m", "frc", "freeflow_kmh", "profile_id"],
    )?;
    let path = csv.path().to_owned();
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    let mut skipped = 0usize;
    for row in csv.rows() {
        let row = row?;
        row.expect_len(&path, 7)?;
        let frc: u8 = row.parse(&path, 4, "frc")?;
        if frc > MAX_FRC {
            skipped += 1;
            continue;
        }
        let profile = row.str(&path, 6, "profile_id")?;
        let edge = Edge {
            id: row.parse(&path, 0, "edge_id")?,
            from_node: row.parse(&path, 1, "from_node")?,
            to_node: row.parse(&path, 2, "to_node")?,
            length_m: row.parse(&path, 3, "length_m")?,
            frc,
            freeflow_kmh: row.parse(&path, 5, "freeflow_kmh")?,
            profile_id: (!profile.is_empty()).then(|| profile.to_owned()),
        };
        lines.push((edge.id, row.line));
        edges.push(edge);
    }
    if skipped > 0 {
        warn!("{}: skipped {skipped} edges with frc > {MAX_FRC}", path.display());
    }
    Ok((edges, lines))
}

fn read_profiles(path: &Path) -> Result<Vec<SpeedProfile>> {
    let mut csv = open_csv(path, &["profile_id", "weekday"])?;
    let path = csv.path().to_owned();
    let mut profiles = Vec::new();
    for row in csv.rows() {
        let row = row?;
        let id = row.str(&path, 0, "profile_id")?.to_owned();
        let weekday: Weekday = row
            .str(&path, 1, "weekday")?
            .parse()
            .map_err(|e| lift(&path, row.line, e))?;
        let bins = (2..row.record.len())
            .map(|c| row.parse::<f64>(&path, c, "bin"))
            .collect::<Result<Vec<_>>>()?;
        if bins.len() != BIN_COUNT {
            return Err(Error::parse(
                &path,
                row.line,
                format!("profile {id}: profile bin count ≠ {BIN_COUNT} (got {})", bins.len()),
            ));
        }
        profiles.push(SpeedProfile::new(id, weekday, bins).map_err(|e| lift(&path, row.line, e))?);
    }
    Ok(profiles)
}

/// Writes `network` in the three-file CSV layout read by [`load_network`].
pub fn write_network(network: &RoadNetwork, files: &NetworkFiles) -> Result<()> {
    write_nodes(network.nodes(), &files.nodes)?;
    write_edges(network.edges(), &files.edges)?;
    write_profiles(network.profiles(), &files.profiles)
}

pub(crate) fn write_nodes(nodes: &[Node], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "node_id,x_m,y_m").map_err(io)?;
    for n in nodes {
        writeln!(w, "{},{},{}", n.id, n.x, n.y).map_err(io)?;
    }
    finish(path, w)
}

pub(crate) fn write_edges(edges: &[Edge], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "edge_id,from_node,to_node,length_m,frc,freeflow_kmh,profile_id").map_err(io)?;
    for e in edges {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            e.id,
            e.from_node,
            e.to_node,
            e.length_m,
            e.frc,
            e.freeflow_kmh,
            e.profile_id.as_deref().unwrap_or("")
        )
        .map_err(io)?;
    }
    finish(path, w)
}

pub(crate) fn write_profiles(profiles: &[SpeedProfile], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "profile_id,weekday").map_err(io)?;
    for k in 0..BIN_COUNT {
        write!(w, ",b{k:03}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for p in profiles {
        write!(w, "{},{}", p.id(), p.weekday()).map_err(io)?;
        for b in p.bins() {
            write!(w, ",{b}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    finish(path, w)
}
