//! Named spaces, JSON space files and CSV tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::group::SpaceSpec;

/// Resolve a built-in space name such as `nil3`, `h2xr(-1)` or
/// `sl2(1,1,1)`. Parameters in parentheses are optional where a default
/// exists.
pub fn named_space(name: &str) -> Result<SpaceSpec> {
    let name = name.trim();
    let (head, args) = match name.find('(') {
        Some(i) if name.ends_with(')') => {
            let args = name[i + 1..name.len() - 1]
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad parameter {s:?} in {name:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            (&name[..i], args)
        }
        Some(_) => return Err(Error::Parse(format!("unbalanced parentheses in {name:?}"))),
        None => (name, vec![]),
    };
    let arity = |want: usize, default: &[f64]| -> Result<Vec<f64>> {
        match args.len() {
            0 if default.len() == want => Ok(default.to_vec()),
            n if n == want => Ok(args.clone()),
            _ => Err(Error::Parse(format!("{head} takes {want} parameter(s), got {}", args.len()))),
        }
    };
    let spec = match head.to_ascii_lowercase().as_str() {
        "euclidean" | "r3" => {
            arity(0, &[])?;
            SpaceSpec::semidirect(0.0, 0.0, 0.0, 0.0)
        }
        "h3" => {
            arity(0, &[])?;
            SpaceSpec::semidirect(1.0, 0.0, 0.0, 1.0)
        }
        "nil3" => {
            arity(0, &[])?;
            SpaceSpec::semidirect(0.0, 1.0, 0.0, 0.0)
        }
        "sol3" => {
            arity(0, &[])?;
            SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0)
        }
        "e2tilde" => {
            let c = arity(1, &[1.0])?[0];
            if c == 0.0 {
                return Err(Error::InvalidArgument("e2tilde needs c != 0".into()));
            }
            SpaceSpec::semidirect(0.0, -c, 1.0 / c, 0.0)
        }
        "nonunimodular" => {
            let b = arity(1, &[])?[0];
            SpaceSpec::semidirect(1.0, 0.0, 0.0, b)
        }
        "h2xr" => SpaceSpec::product(arity(1, &[-1.0])?[0]),
        "s2xr" => SpaceSpec::product(arity(1, &[1.0])?[0]),
        "sl2" => {
            let l = arity(3, &[1.0, 1.0, 1.0])?;
            SpaceSpec::sl2(l[0], l[1], l[2])
        }
        _ => return Err(Error::Parse(format!("unknown space {name:?}"))),
    };
    if matches!(head, "h2xr") && !matches!(spec, SpaceSpec::Product { kappa } if kappa < 0.0) {
        return Err(Error::InvalidArgument("h2xr needs kappa < 0".into()));
    }
    if matches!(head, "s2xr") && !matches!(spec, SpaceSpec::Product { kappa } if kappa > 0.0) {
        return Err(Error::InvalidArgument("s2xr needs kappa > 0".into()));
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_space_json(text: &str) -> Result<SpaceSpec> {
    let spec: SpaceSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_space_file(path: &Path) -> Result<SpaceSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_space_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// A JSON file if `arg` names an existing file, otherwise a built-in name.
/// A `.json` argument that does not exist is an I/O error.
pub fn resolve_space(arg: &str) -> Result<SpaceSpec> {
    let path = Path::new(arg);
    if path.is_file() || arg.ends_with(".json") {
        load_space_file(path)
    } else {
        named_space(arg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// Round-trip exact: 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// CSV text with a header row and `\n` line endings.
pub fn table_to_string(header: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidArgument(format!("row {i} has {} cells, header has {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_table(header: &[&str], rows: &[Vec<Cell>], path: &Path) -> Result<()> {
    let text = table_to_string(header, rows)?;
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

/// Read a numeric CSV with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = vec![];
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        rows.push(
            rec.iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{}: bad number {s:?}", path.display()))))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(named_space("nil3").unwrap(), SpaceSpec::semidirect(0.0, 1.0, 0.0, 0.0));
        assert_eq!(named_space("h2xr").unwrap(), SpaceSpec::product(-1.0));
        assert_eq!(named_space("h2xr(-4)").unwrap(), SpaceSpec::product(-4.0));
        assert_eq!(named_space("sl2(2, 2, 1)").unwrap(), SpaceSpec::sl2(2.0, 2.0, 1.0));
        assert_eq!(named_space("e2tilde(2)").unwrap(), SpaceSpec::semidirect(0.0, -2.0, 0.5, 0.0));
        assert_eq!(named_space("nonunimodular(0.5)").unwrap(), SpaceSpec::semidirect(1.0, 0.0, 0.0, 0.5));
        assert!(named_space("h2xr(1)").is_err());
        assert!(named_space("nonunimodular").is_err());
        assert!(named_space("sl2(1,-1,1)").is_err());
        assert!(named_space("torus").is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = parse_space_json(r#"{"kind":"semidirect","A":[[1,0],[0,-1]]}"#).unwrap();
        assert_eq!(spec, named_space("sol3").unwrap());
        let text = serde_json::to_string(&SpaceSpec::sl2(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(parse_space_json(&text).unwrap(), SpaceSpec::sl2(1.0, 2.0, 3.0));
        assert!(matches!(parse_space_json(r#"{"kind":"torus"}"#), Err(Error::Parse(_))));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(table_to_string(&["H", "closed", "area"], &[]).unwrap(), "H,closed,area\n");
        let s = table_to_string(&["a", "b"], &[vec![1.5.into(), true.into()]]).unwrap();
        assert_eq!(s, "a,b\n1.5000000000000000e0,true\n");
        assert!(table_to_string(&["a"], &[vec![1.0.into(), 2.0.into()]]).is_err());
    }

    #[test]
    fn io_errors_carry_path() {
        let e = emit_table(&["a"], &[], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/out.csv"), "{e}");
        let e = resolve_space("/nonexistent/space.json").unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
