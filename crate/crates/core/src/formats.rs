//! Instance file formats: DIMACS max-flow, a plain triple list, partition
//! files, and cut labeling output.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::graph::{GraphError, WeightedGraph};
use crate::partition::Partition;

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    Parse { line: usize, message: String },
    Graph(GraphError),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "io error: {e}"),
            FormatError::Parse { line, message } => {
                write!(f, "parse error at line {line}: {message}")
            }
            FormatError::Graph(e) => write!(f, "invalid graph: {e}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e)
    }
}

impl From<GraphError> for FormatError {
    fn from(e: GraphError) -> Self {
        FormatError::Graph(e)
    }
}

fn perr(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Read a DIMACS max-flow file ("p max", "n .. s|t", "a u v cap"). Arcs are
/// interpreted as undirected edges; both orientations of the same pair merge
/// by capacity summation.
pub fn read_dimacs<R: BufRead>(reader: R) -> Result<WeightedGraph, FormatError> {
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    let mut source: Option<u64> = None;
    let mut sink: Option<u64> = None;
    let mut seen_problem = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        match fields[0] {
            "c" => {}
            "p" => {
                if fields.len() < 2 || fields[1] != "max" {
                    return Err(perr(lineno, "expected 'p max <nodes> <arcs>'"));
                }
                seen_problem = true;
            }
            "n" => {
                if fields.len() != 3 {
                    return Err(perr(lineno, "expected 'n <id> s|t'"));
                }
                let id: u64 = fields[1]
                    .parse()
                    .map_err(|_| perr(lineno, "bad node id"))?;
                match fields[2] {
                    "s" => source = Some(id),
                    "t" => sink = Some(id),
                    other => return Err(perr(lineno, format!("unknown terminal tag '{other}'"))),
                }
            }
            "a" => {
                if fields.len() != 4 {
                    return Err(perr(lineno, "expected 'a <u> <v> <capacity>'"));
                }
                let u: u64 = fields[1].parse().map_err(|_| perr(lineno, "bad tail id"))?;
                let v: u64 = fields[2].parse().map_err(|_| perr(lineno, "bad head id"))?;
                let cap: f64 = fields[3]
                    .parse()
                    .map_err(|_| perr(lineno, "bad capacity"))?;
                edges.push((u, v, cap));
            }
            other => return Err(perr(lineno, format!("unknown line type '{other}'"))),
        }
    }
    if !seen_problem {
        return Err(perr(0, "missing 'p max' line"));
    }
    let source = source.ok_or_else(|| perr(0, "missing source ('n <id> s')"))?;
    let sink = sink.ok_or_else(|| perr(0, "missing sink ('n <id> t')"))?;
    Ok(WeightedGraph::ingest(&edges, source, sink)?)
}

/// Write DIMACS max-flow format, one arc per undirected edge, original ids.
pub fn write_dimacs<W: Write>(graph: &WeightedGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "p max {} {}", graph.node_count(), graph.edge_count())?;
    writeln!(w, "n {} s", graph.original_id(graph.source()))?;
    writeln!(w, "n {} t", graph.original_id(graph.sink()))?;
    for e in graph.edges() {
        writeln!(
            w,
            "a {} {} {}",
            graph.original_id(e.u),
            graph.original_id(e.v),
            e.capacity
        )?;
    }
    Ok(())
}

/// Read the triple-list format: a header line "<s_id> <t_id>" followed by
/// "<u> <v> <capacity>" lines; '#' starts a comment.
pub fn read_triples<R: BufRead>(reader: R) -> Result<WeightedGraph, FormatError> {
    let mut terminals: Option<(u64, u64)> = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        match terminals {
            None => {
                if fields.len() != 2 {
                    return Err(perr(lineno, "expected header '<source_id> <sink_id>'"));
                }
                let s = fields[0].parse().map_err(|_| perr(lineno, "bad source id"))?;
                let t = fields[1].parse().map_err(|_| perr(lineno, "bad sink id"))?;
                terminals = Some((s, t));
            }
            Some(_) => {
                if fields.len() != 3 {
                    return Err(perr(lineno, "expected '<u> <v> <capacity>'"));
                }
                let u = fields[0].parse().map_err(|_| perr(lineno, "bad node id"))?;
                let v = fields[1].parse().map_err(|_| perr(lineno, "bad node id"))?;
                let cap = fields[2].parse().map_err(|_| perr(lineno, "bad capacity"))?;
                edges.push((u, v, cap));
            }
        }
    }
    let (s, t) = terminals.ok_or_else(|| perr(0, "missing header line"))?;
    Ok(WeightedGraph::ingest(&edges, s, t)?)
}

pub fn write_triples<W: Write>(graph: &WeightedGraph, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{} {}",
        graph.original_id(graph.source()),
        graph.original_id(graph.sink())
    )?;
    for e in graph.edges() {
        writeln!(
            w,
            "{} {} {}",
            graph.original_id(e.u),
            graph.original_id(e.v),
            e.capacity
        )?;
    }
    Ok(())
}

/// Load a graph from a path, sniffing the format: lines starting with
/// c/p/n/a mean DIMACS, otherwise the triple list.
pub fn read_graph(path: &Path) -> Result<WeightedGraph, FormatError> {
    let content = std::fs::read_to_string(path)?;
    let first = content
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let dimacs = matches!(
        first.split_whitespace().next(),
        Some("c") | Some("p") | Some("n") | Some("a")
    );
    let reader = BufReader::new(content.as_bytes());
    if dimacs {
        read_dimacs(reader)
    } else {
        read_triples(reader)
    }
}

/// Cut labeling output: one "node_id side" line per node in original ids,
/// side 1 on the source side.
pub fn write_cut<W: Write>(
    graph: &WeightedGraph,
    source_side: &[bool],
    mut w: W,
) -> std::io::Result<()> {
    for u in 0..graph.node_count() {
        writeln!(
            w,
            "{} {}",
            graph.original_id(u),
            if source_side[u] { 1 } else { 0 }
        )?;
    }
    Ok(())
}

/// Partition file: one block id per line, in non-terminal node order.
pub fn write_partition<W: Write>(partition: &Partition, mut w: W) -> std::io::Result<()> {
    for &b in &partition.assignment {
        writeln!(w, "{b}")?;
    }
    Ok(())
}

/// Read a partition file back into block assignments.
pub fn read_partition<R: BufRead>(reader: R) -> Result<Vec<usize>, FormatError> {
    let mut assignment = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        assignment.push(
            text.parse()
                .map_err(|_| perr(idx + 1, "bad block id"))?,
        );
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;

    #[test]
    fn dimacs_round_trip() {
        let g = crate::gen::path(4).unwrap();
        let mut buf = Vec::new();
        write_dimacs(&g, &mut buf).unwrap();
        let back = read_dimacs(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(g.canonical_edges(), back.canonical_edges());
        assert_eq!(
            back.original_id(back.source()),
            g.original_id(g.source())
        );
    }

    #[test]
    fn dimacs_merges_antiparallel_arcs() {
        let text = "c both directions listed\np max 3 4\nn 1 s\nn 3 t\na 1 2 1.5\na 2 1 0.5\na 2 3 1\na 3 2 1\n";
        let g = read_dimacs(BufReader::new(text.as_bytes())).unwrap();
        assert_eq!(g.edge_count(), 2);
        let caps: Vec<f64> = g.edges().iter().map(|e| e.capacity).collect();
        assert_eq!(caps, vec![2.0, 2.0]);
    }

    #[test]
    fn dimacs_errors_carry_line_numbers() {
        let text = "p max 2 1\nn 1 s\nn 2 t\na 1 x 1.0\n";
        match read_dimacs(BufReader::new(text.as_bytes())) {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn triples_round_trip_with_comments() {
        let text = "# tiny instance\n10 30\n10 20 2.0 # first\n20 30 1.0\n";
        let g = read_triples(BufReader::new(text.as_bytes())).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.original_id(g.source()), 10);
        let mut buf = Vec::new();
        write_triples(&g, &mut buf).unwrap();
        let back = read_triples(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(g.canonical_edges(), back.canonical_edges());
    }

    #[test]
    fn format_sniffing() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::gen::path(3).unwrap();

        let dimacs_path = dir.path().join("g.dimacs");
        let mut f = std::fs::File::create(&dimacs_path).unwrap();
        write_dimacs(&g, &mut f).unwrap();
        drop(f);
        assert_eq!(
            read_graph(&dimacs_path).unwrap().canonical_edges(),
            g.canonical_edges()
        );

        let triples_path = dir.path().join("g.txt");
        let mut f = std::fs::File::create(&triples_path).unwrap();
        write_triples(&g, &mut f).unwrap();
        drop(f);
        assert_eq!(
            read_graph(&triples_path).unwrap().canonical_edges(),
            g.canonical_edges()
        );
    }

    #[test]
    fn partition_file_round_trip() {
        let adj = crate::graph::AdjList::from_edges(6, (0..5).map(|i| (i, i + 1, 1.0)));
        let p = crate::partition::partition(&adj, 2, 0.05, 0).unwrap();
        let mut buf = Vec::new();
        write_partition(&p, &mut buf).unwrap();
        let back = read_partition(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back, p.assignment);
    }

    #[test]
    fn cut_file_uses_original_ids() {
        let g = WeightedGraph::ingest(&[(5, 9, 1.0), (9, 12, 2.0)], 5, 12).unwrap();
        let mut buf = Vec::new();
        write_cut(&g, &[true, true, false], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "5 1\n9 1\n12 0\n");
    }
}
