//! CSV edge lists: header `u,v,w`, 0-based vertex ids, one row per edge.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Graph, WeightAssignment};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    u: usize,
    v: usize,
    w: f64,
}

/// Writes rows in edge-id order. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_edge_list<W: Write>(out: W, g: &Graph, w: &WeightAssignment) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for e in g.edge_ids() {
        let (u, v) = g.endpoints(e);
        wtr.serialize(Row { u, v, w: w.weight(e) })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads an edge list. The vertex count is one more than the largest id seen;
/// rows keep their file order as edge ids.
pub fn read_edge_list<R: Read>(input: R, sensitivity: f64) -> Result<(Graph, WeightAssignment)> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["u", "v", "w"] {
        return Err(Error::Format(format!("expected header u,v,w, found {}", headers.as_slice())));
    }
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    let mut n = 0usize;
    for row in rdr.deserialize() {
        let row: Row = row?;
        n = n.max(row.u + 1).max(row.v + 1);
        pairs.push((row.u, row.v));
        weights.push(row.w);
    }
    if pairs.is_empty() {
        return Err(Error::Format("edge list has no rows".into()));
    }
    let g = Graph::new(n, pairs)?;
    let w = WeightAssignment::new(&g, weights, sensitivity)?;
    Ok((g, w))
}
