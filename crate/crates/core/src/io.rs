//! Plain-text curve files.
//!
//! ```text
//! # topology=cocompact period=(1,0)
//! x,y
//! 0,0
//! 0.25,0.01
//! ...
//! ```
//!
//! The topology comment is optional (closed by default). The header names
//! the coordinates, `x,y` or `x,y,z`. Floats are written in shortest
//! round-trip form so save/load is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{ChenError, Result};
use crate::geometry::{CurveTopology, DiscreteCurve};

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn curve_to_string(curve: &DiscreteCurve) -> String {
    let mut out = String::new();
    match curve.topology() {
        CurveTopology::Closed => out.push_str("# topology=closed\n"),
        CurveTopology::Cocompact { period } => {
            let parts: Vec<String> = period.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "# topology=cocompact period=({})", parts.join(","));
        }
    }
    out.push_str(&AXES[..curve.dim().min(3)].join(","));
    for extra in 3..curve.dim() {
        let _ = write!(out, ",x{extra}");
    }
    out.push('\n');
    for i in 0..curve.len() {
        let row: Vec<String> = curve.point(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn save_curve(path: impl AsRef<Path>, curve: &DiscreteCurve) -> Result<()> {
    fs::write(path, curve_to_string(curve))?;
    Ok(())
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<DiscreteCurve> {
    parse_curve(&fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> ChenError {
    ChenError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_topology(line: usize, body: &str) -> Result<Option<CurveTopology>> {
    let mut kind = None;
    let mut period = None;
    for token in body.split_whitespace() {
        if let Some(v) = token.strip_prefix("topology=") {
            kind = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("period=") {
            let inner = v
                .strip_prefix('(')
                .and_then(|v| v.strip_suffix(')'))
                .ok_or_else(|| parse_err(line, "period must be written as (px,py)"))?;
            let values = inner
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(line, format!("bad period component: {e}")))?;
            period = Some(values);
        }
    }
    match (kind.as_deref(), period) {
        (None, _) => Ok(None),
        (Some("closed"), None) => Ok(Some(CurveTopology::Closed)),
        (Some("cocompact"), Some(period)) => Ok(Some(CurveTopology::Cocompact { period })),
        (Some("cocompact"), None) => Err(parse_err(line, "cocompact topology needs period=(..)")),
        (Some(other), _) => Err(parse_err(line, format!("unknown topology '{other}'"))),
    }
}

/// Parses a curve file. Errors carry 1-based line numbers.
pub fn parse_curve(text: &str) -> Result<DiscreteCurve> {
    let mut topology = None;
    let mut dim = None;
    let mut points = Vec::new();
    let mut lines_of_points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(body) = trimmed.strip_prefix('#') {
            if let Some(t) = parse_topology(line, body)? {
                topology = Some(t);
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let Some(d) = dim else {
            if fields.len() < 2 || fields[0] != "x" || fields[1] != "y" {
                return Err(parse_err(line, "expected header 'x,y' or 'x,y,z'"));
            }
            dim = Some(fields.len());
            continue;
        };
        if fields.len() != d {
            return Err(parse_err(
                line,
                format!("expected {d} values, found {}", fields.len()),
            ));
        }
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line, format!("not a number: '{f}'")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value '{f}'")));
            }
            points.push(v);
        }
        lines_of_points.push(line);
    }
    let dim = dim.ok_or_else(|| parse_err(text.lines().count().max(1), "missing header"))?;
    let topology = topology.unwrap_or(CurveTopology::Closed);
    let n = lines_of_points.len();
    DiscreteCurve::new(dim, points, topology).map_err(|e| match e {
        ChenError::DegenerateEdge { index, length } => parse_err(
            lines_of_points[(index + 1) % n],
            format!("point repeats its predecessor (edge length {length:e})"),
        ),
        ChenError::TooFewPoints(k) => parse_err(
            lines_of_points.last().copied().unwrap_or(1),
            format!("curve needs at least 5 points, found {k}"),
        ),
        ChenError::BadPeriod => parse_err(1, "period does not match the coordinate dimension"),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pentagon() -> DiscreteCurve {
        let pts: Vec<[f64; 2]> = (0..5)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / 5.0;
                [th.cos(), th.sin()]
            })
            .collect();
        DiscreteCurve::from_planar(&pts, CurveTopology::Closed).unwrap()
    }

    #[test]
    fn pentagon_round_trips_bitwise() {
        let c = pentagon();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pentagon.csv");
        save_curve(&path, &c).unwrap();
        let back = load_curve(&path).unwrap();
        assert_eq!(back, c);
        let bits = |c: &DiscreteCurve| c.coords().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&c));
    }

    #[test]
    fn cocompact_header() {
        let text = "# topology=cocompact period=(1,0)\nx,y\n0,0\n0.2,0\n0.4,0\n0.6,0\n0.8,0\n";
        let c = parse_curve(text).unwrap();
        assert_eq!(c.topology().period(), Some(&[1.0, 0.0][..]));
        assert_eq!(parse_curve(&curve_to_string(&c)).unwrap(), c);
    }

    #[test]
    fn space_curve_round_trip() {
        let pts: Vec<f64> = (0..6)
            .flat_map(|i| {
                let th = i as f64;
                [th.cos(), th.sin(), 0.1 * th]
            })
            .collect();
        let c = DiscreteCurve::new(3, pts, CurveTopology::Closed).unwrap();
        let text = curve_to_string(&c);
        assert!(text.contains("x,y,z"));
        assert_eq!(parse_curve(&text).unwrap(), c);
    }

    #[test]
    fn repeated_point_names_its_line() {
        let text = "x,y\n1,0\n0,1\n0,1\n-1,0\n0,-1\n0.5,-0.5\n";
        match parse_curve(text) {
            Err(ChenError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let cases = [
            ("x,y\n1,0\n0,1,2\n", 3),
            ("x,y\n1,0\nfoo,1\n", 3),
            ("a,b\n1,0\n", 1),
            ("# topology=weird\nx,y\n", 1),
            ("# topology=cocompact\nx,y\n", 1),
            ("x,y\n1,0\n0,1\n-1,0\n", 4),
        ];
        for (text, expected) in cases {
            match parse_curve(text) {
                Err(ChenError::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }
}
