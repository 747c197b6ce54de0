//! Triangle-style `.node` / `.ele` / `.edge` text files.
//!
//! Each file starts with a count line followed by one record per line;
//! indices are 1-based and `#` starts a comment. Records:
//! `.node` `id x y`, `.ele` `id v1 v2 v3 subdomain`, `.edge` `id v1 v2 tag`
//! with tag one of `W`, `IN`, `OUT`, `I<k>` (interface `k`, 1-based). A
//! `# h <value>` comment in the node file records the mesh size.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{edge_key, EdgeTag, Mesh};
use crate::error::{Error, Result};
use crate::scalar::{dist, Real};

struct Table {
    h: Option<f64>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    let mut h = None;
    let mut count: Option<usize> = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("h") {
                if let Some(v) = it.next().and_then(|v| v.parse().ok()) {
                    h = Some(v);
                }
            }
            continue;
        }
        let data = trimmed.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            continue;
        }
        let fields: Vec<String> = data.split_whitespace().map(str::to_owned).collect();
        if count.is_none() {
            count = Some(
                fields[0]
                    .parse()
                    .map_err(|_| Error::parse(&ctx, format!("line {}: bad count line", lineno + 1)))?,
            );
            continue;
        }
        rows.push((lineno + 1, fields));
    }
    let count = count.ok_or_else(|| Error::parse(&ctx, "empty file"))?;
    if rows.len() != count {
        return Err(Error::parse(&ctx, format!("header announces {count} records, found {}", rows.len())));
    }
    Ok(Table { h, rows })
}

fn parse_num<V: std::str::FromStr>(ctx: &str, line: usize, s: &str) -> Result<V> {
    s.parse()
        .map_err(|_| Error::parse(ctx, format!("line {line}: cannot parse '{s}'")))
}

fn parse_tag(ctx: &str, line: usize, s: &str) -> Result<EdgeTag> {
    match s {
        "W" => Ok(EdgeTag::Wall),
        "IN" => Ok(EdgeTag::Inlet),
        "OUT" => Ok(EdgeTag::Outlet),
        _ => {
            let k: usize = s
                .strip_prefix('I')
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::parse(ctx, format!("line {line}: unknown edge tag '{s}'")))?;
            Ok(EdgeTag::Interface(k - 1))
        }
    }
}

fn tag_str(tag: EdgeTag) -> String {
    match tag {
        EdgeTag::Wall => "W".into(),
        EdgeTag::Inlet => "IN".into(),
        EdgeTag::Outlet => "OUT".into(),
        EdgeTag::Interface(a) => format!("I{}", a + 1),
    }
}

/// Reads and validates a mesh; clockwise triangles are reoriented. Without a
/// `# h` comment the mesh size is the mean edge length.
pub fn read_mesh<T: Real>(
    node_path: impl AsRef<Path>,
    ele_path: impl AsRef<Path>,
    edge_path: impl AsRef<Path>,
) -> Result<Mesh<T>> {
    let (node_path, ele_path, edge_path) = (node_path.as_ref(), ele_path.as_ref(), edge_path.as_ref());
    let nodes = read_table(node_path)?;
    let ctx = node_path.display().to_string();
    let mut vertex_of_id = HashMap::new();
    let mut vertices = Vec::with_capacity(nodes.rows.len());
    for (line, f) in &nodes.rows {
        if f.len() < 3 {
            return Err(Error::parse(&ctx, format!("line {line}: expected 'id x y'")));
        }
        let id: usize = parse_num(&ctx, *line, &f[0])?;
        let x: f64 = parse_num(&ctx, *line, &f[1])?;
        let y: f64 = parse_num(&ctx, *line, &f[2])?;
        if vertex_of_id.insert(id, vertices.len()).is_some() {
            return Err(Error::parse(&ctx, format!("line {line}: duplicate vertex id {id}")));
        }
        vertices.push([T::lit(x), T::lit(y)]);
    }
    let lookup = |ctx: &str, line: usize, s: &str| -> Result<usize> {
        let id: usize = parse_num(ctx, line, s)?;
        vertex_of_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::parse(ctx, format!("line {line}: unknown vertex {id}")))
    };

    let eles = read_table(ele_path)?;
    let ctx = ele_path.display().to_string();
    let mut triangles = Vec::with_capacity(eles.rows.len());
    let mut element_subdomain = Vec::with_capacity(eles.rows.len());
    for (line, f) in &eles.rows {
        if f.len() < 5 {
            return Err(Error::parse(
                &ctx,
                format!("line {line}: expected 'id v1 v2 v3 subdomain' (missing subdomain column?)"),
            ));
        }
        triangles.push([
            lookup(&ctx, *line, &f[1])?,
            lookup(&ctx, *line, &f[2])?,
            lookup(&ctx, *line, &f[3])?,
        ]);
        element_subdomain.push(parse_num::<usize>(&ctx, *line, &f[4])?);
    }

    let edges = read_table(edge_path)?;
    let ctx = edge_path.display().to_string();
    let mut edge_tags = BTreeMap::new();
    for (line, f) in &edges.rows {
        if f.len() < 4 {
            return Err(Error::parse(&ctx, format!("line {line}: expected 'id v1 v2 tag'")));
        }
        let (a, b) = (lookup(&ctx, *line, &f[1])?, lookup(&ctx, *line, &f[2])?);
        edge_tags.insert(edge_key(a, b), parse_tag(&ctx, *line, &f[3])?);
    }

    let h = match nodes.h {
        Some(h) => T::lit(h),
        None => {
            let mut sum = T::zero();
            let mut n = 0usize;
            for tri in &triangles {
                for k in 0..3 {
                    sum += dist(vertices[tri[k]], vertices[tri[(k + 1) % 3]]);
                    n += 1;
                }
            }
            if n == 0 {
                return Err(Error::Mesh("mesh has no triangles".into()));
            }
            sum / T::lit(n as f64)
        }
    };
    Mesh::from_parts(vertices, triangles, edge_tags, element_subdomain, h)
}

/// Writes the three files; `header` lines are emitted as `#` comments.
pub fn write_mesh<T: Real>(
    mesh: &Mesh<T>,
    node_path: impl AsRef<Path>,
    ele_path: impl AsRef<Path>,
    edge_path: impl AsRef<Path>,
    header: &[&str],
) -> Result<()> {
    let mut comments = String::new();
    for line in header {
        let _ = writeln!(comments, "# {line}");
    }
    let mut node = comments.clone();
    let _ = writeln!(node, "# h {:e}", mesh.h.as_f64());
    let _ = writeln!(node, "{} 2 0 0", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(node, "{} {:e} {:e}", i + 1, v[0].as_f64(), v[1].as_f64());
    }
    let mut ele = comments.clone();
    let _ = writeln!(ele, "{} 3 1", mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(
            ele,
            "{} {} {} {} {}",
            t + 1,
            tri[0] + 1,
            tri[1] + 1,
            tri[2] + 1,
            mesh.element_subdomain[t]
        );
    }
    let mut edge = comments;
    let _ = writeln!(edge, "{} 1", mesh.edge_tags.len());
    for (k, (&(a, b), &tag)) in mesh.edge_tags.iter().enumerate() {
        let _ = writeln!(edge, "{} {} {} {}", k + 1, a + 1, b + 1, tag_str(tag));
    }
    for (path, text) in [
        (node_path.as_ref(), node),
        (ele_path.as_ref(), ele),
        (edge_path.as_ref(), edge),
    ] {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{interface_segments, GeometrySpec};
    use crate::mesh::build_structured_mesh;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn round_trip_is_identity() {
        let spec = GeometrySpec::channel(2.0, 1.0, 1.0, 0.0, 1.0)
            .unwrap()
            .with_interfaces(vec![[[1.0, 0.0], [1.0, 1.0]]])
            .unwrap();
        let segs = interface_segments(&spec).unwrap();
        let m = build_structured_mesh(&spec, &segs, 0.25).unwrap().refine();
        let dir = tempfile::tempdir().unwrap();
        let (n, e, g) = (dir.path().join("m.node"), dir.path().join("m.ele"), dir.path().join("m.edge"));
        write_mesh(&m, &n, &e, &g, &["test mesh"]).unwrap();
        let back: Mesh<f64> = read_mesh(&n, &e, &g).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn clockwise_triangle_reoriented() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "t.node", "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n");
        let e = write(dir.path(), "t.ele", "1 3 1\n1 1 3 2 0\n");
        let g = write(dir.path(), "t.edge", "# all walls\n3 1\n1 1 2 W\n2 2 3 IN\n3 3 1 W\n");
        let m: Mesh<f64> = read_mesh(&n, &e, &g).unwrap();
        assert!(m.signed_area(0) > 0.0);
        assert_eq!(m.count_tag(EdgeTag::Inlet), 1);
    }

    #[test]
    fn missing_subdomain_column() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "t.node", "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n");
        let e = write(dir.path(), "t.ele", "1 3 0\n1 1 2 3\n");
        let g = write(dir.path(), "t.edge", "3 1\n1 1 2 W\n2 2 3 W\n3 3 1 W\n");
        assert!(matches!(read_mesh::<f64>(&n, &e, &g), Err(Error::Parse { .. })));
    }

    #[test]
    fn untagged_boundary_edge() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "t.node", "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n");
        let e = write(dir.path(), "t.ele", "1 3 1\n1 1 2 3 0\n");
        let g = write(dir.path(), "t.edge", "2 1\n1 1 2 W\n2 2 3 W\n");
        assert!(matches!(read_mesh::<f64>(&n, &e, &g), Err(Error::Mesh(_))));
    }
}
