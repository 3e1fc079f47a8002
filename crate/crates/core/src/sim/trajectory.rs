use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS: f64 = 6_371_008.8;

const PLT_HEADER_LINES: usize = 6;
const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    /// Header `t,lat,lon`, one fix per line, `t` in seconds.
    SimpleCsv,
    /// GeoLife `.plt`: six header lines, then
    /// `lat,lon,0,altitude,days,date,time` with `days` since 1899-12-30.
    GeolifePlt,
}

impl TrajectoryFormat {
    /// Guesses the format from a file extension (`.plt` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("plt") => TrajectoryFormat::GeolifePlt,
            _ => TrajectoryFormat::SimpleCsv,
        }
    }
}

impl FromStr for TrajectoryFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TrajectoryFormat::SimpleCsv),
            "plt" => Ok(TrajectoryFormat::GeolifePlt),
            other => Err(Error::InvalidParameter(format!("unknown trajectory format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fix {
    /// Seconds.
    pub t: f64,
    /// Planar meters.
    pub position: Point,
}

/// Time-ordered fixes in planar meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    fixes: Vec<Fix>,
}

impl Trajectory {
    /// Timestamps must be strictly increasing.
    pub fn new(fixes: Vec<Fix>) -> Result<Self> {
        if fixes.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(i) = fixes.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidParameter(format!(
                "fix {} at t={} does not follow t={}",
                i + 1,
                fixes[i + 1].t,
                fixes[i].t
            )));
        }
        Ok(Trajectory { fixes })
    }

    pub fn fixes(&self) -> &[Fix] {
        &self.fixes
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }

    /// Projects geographic fixes `(t, lat, lon)` around the first one.
    pub fn from_geographic(fixes: &[(f64, f64, f64)]) -> Result<Self> {
        let &(_, lat0, lon0) = fixes.first().ok_or(Error::EmptyTrajectory)?;
        Self::new(
            fixes.iter().map(|&(t, lat, lon)| Fix { t, position: project(lat, lon, lat0, lon0) }).collect(),
        )
    }
}

/// Local equirectangular projection in meters around `(lat0, lon0)`.
pub fn project(lat: f64, lon: f64, lat0: f64, lon0: f64) -> Point {
    let x = EARTH_RADIUS * (lon - lon0).to_radians() * lat0.to_radians().cos();
    let y = EARTH_RADIUS * (lat - lat0).to_radians();
    Point::new(x, y)
}

pub fn parse_trajectory(text: &str, format: TrajectoryFormat) -> Result<Trajectory> {
    let raw = match format {
        TrajectoryFormat::SimpleCsv => parse_csv(text)?,
        TrajectoryFormat::GeolifePlt => parse_plt(text)?,
    };
    // Report ordering errors against the offending line.
    for w in raw.windows(2) {
        if w[1].1 .0 <= w[0].1 .0 {
            return Err(Error::Parse {
                line: w[1].0,
                msg: format!("timestamp {} not after {}", w[1].1 .0, w[0].1 .0),
            });
        }
    }
    let fixes: Vec<_> = raw.into_iter().map(|(_, f)| f).collect();
    Trajectory::from_geographic(&fixes)
}

pub fn load_trajectory(path: impl AsRef<Path>, format: TrajectoryFormat) -> Result<Trajectory> {
    parse_trajectory(&std::fs::read_to_string(path)?, format)
}

/// Every `.plt` file below `dir`, sorted by path. GeoLife keeps one user
/// per directory with trips under `Trajectory/`.
pub fn geolife_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.as_ref().to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if TrajectoryFormat::from_path(&path) == TrajectoryFormat::GeolifePlt {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

type Numbered = (usize, (f64, f64, f64));

fn field(line: usize, raw: Option<&str>, name: &str) -> Result<f64> {
    let raw = raw.ok_or_else(|| Error::Parse { line, msg: format!("missing {name}") })?;
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse { line, msg: format!("bad {name} {raw:?}") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite {name}") });
    }
    Ok(v)
}

fn check_coordinates(line: usize, lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(Error::Parse { line, msg: format!("coordinates ({lat}, {lon}) out of range") });
    }
    Ok(())
}

fn parse_csv(text: &str) -> Result<Vec<Numbered>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => return Err(Error::EmptyTrajectory),
        Some((_, h)) if h.trim().replace(' ', "") == "t,lat,lon" => {}
        Some((i, _)) => return Err(Error::Parse { line: i + 1, msg: "expected header t,lat,lon".into() }),
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        let mut it = l.split(',');
        let t = field(line, it.next(), "t")?;
        let lat = field(line, it.next(), "lat")?;
        let lon = field(line, it.next(), "lon")?;
        if it.next().is_some() {
            return Err(Error::Parse { line, msg: "expected 3 fields".into() });
        }
        check_coordinates(line, lat, lon)?;
        out.push((line, (t, lat, lon)));
    }
    if out.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok(out)
}

fn parse_plt(text: &str) -> Result<Vec<Numbered>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate().skip(PLT_HEADER_LINES) {
        let line = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse { line, msg: format!("expected 7 fields, found {}", f.len()) });
        }
        let lat = field(line, Some(f[0]), "latitude")?;
        let lon = field(line, Some(f[1]), "longitude")?;
        let days = field(line, Some(f[4]), "day count")?;
        check_coordinates(line, lat, lon)?;
        out.push((line, (days * SECONDS_PER_DAY, lat, lon)));
    }
    if out.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLT: &str =
        "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n\
39.984702,116.318417,0,492,39744.1201851852,2008-10-23,02:53:04\n\
39.984683,116.31845,0,492,39744.1202546296,2008-10-23,02:53:10\n\
39.984686,116.318417,0,492,39744.1203125,2008-10-23,02:53:15\n";

    #[test]
    fn csv_fixture_in_order() {
        let tr = parse_trajectory(
            "t,lat,lon\n0,48.0,9.0\n10,48.001,9.0\n20,48.001,9.001\n",
            TrajectoryFormat::SimpleCsv,
        )
        .unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.fixes()[0].position, Point::ORIGIN);
        let north = tr.fixes()[1].position;
        assert!(north.x.abs() < 1e-9);
        assert!((north.y - EARTH_RADIUS * 0.001f64.to_radians()).abs() < 1e-6);
        assert!((north.y - 111.19).abs() < 0.01);
        let east = tr.fixes()[2].position;
        assert!((east.x - 111.19 * 48f64.to_radians().cos()).abs() < 0.01);
    }

    #[test]
    fn plt_header_is_skipped() {
        let tr = parse_trajectory(PLT, TrajectoryFormat::GeolifePlt).unwrap();
        assert_eq!(tr.len(), 3);
        let dt = tr.fixes()[1].t - tr.fixes()[0].t;
        assert!((dt - 6.0).abs() < 1e-3, "{dt}");
    }

    #[test]
    fn decreasing_timestamps_are_rejected() {
        let err =
            parse_trajectory("t,lat,lon\n0,1,1\n5,1,1\n4,1,1\n", TrajectoryFormat::SimpleCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_trajectory("t,lat,lon\n0,1,1\n0,1,1\n", TrajectoryFormat::SimpleCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let err = parse_trajectory("t,lat,lon\n0,1,1\n1,abc,1\n", TrajectoryFormat::SimpleCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_trajectory("t,lat,lon\n0,95,1\n", TrajectoryFormat::SimpleCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_trajectory("time,x,y\n", TrajectoryFormat::SimpleCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let bad_plt = PLT.replace("39.984683,116.31845,0,", "39.984683,116.31845,");
        let err = parse_trajectory(&bad_plt, TrajectoryFormat::GeolifePlt).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 8, .. }), "{err}");
    }

    #[test]
    fn empty_inputs() {
        for (text, fmt) in [
            ("", TrajectoryFormat::SimpleCsv),
            ("t,lat,lon\n", TrajectoryFormat::SimpleCsv),
            ("a\nb\nc\nd\ne\nf\n", TrajectoryFormat::GeolifePlt),
        ] {
            assert!(matches!(parse_trajectory(text, fmt), Err(Error::EmptyTrajectory)));
        }
    }

    #[test]
    fn geolife_directory_walk() {
        let dir = tempfile::tempdir().unwrap();
        let trips = dir.path().join("000").join("Trajectory");
        std::fs::create_dir_all(&trips).unwrap();
        std::fs::write(trips.join("b.plt"), PLT).unwrap();
        std::fs::write(trips.join("a.plt"), PLT).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let files = geolife_files(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[0].ends_with("a.plt"));
        let tr = load_trajectory(&files[0], TrajectoryFormat::from_path(&files[0])).unwrap();
        assert_eq!(tr.len(), 3);
    }
}
