//! Long-format `series,x,y,yerr` rows from report CSVs written by this tool.

use std::fmt;
use std::path::Path;

use crate::output::Csv;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Moments,
    CharFun,
    Trajectory,
    Measure,
}

const MOMENTS: &[&str] = &[
    "t",
    "sup_term",
    "sup_term_se",
    "integral_term",
    "integral_term_se",
    "lhs",
    "lhs_se",
    "ratio",
    "ratio_se",
    "envelope",
    "envelope_se",
    "gradient_moment",
    "gradient_moment_se",
    "gradient_bound",
];
const CHARFUN: &[&str] =
    &["mode", "dt", "s", "t", "xi", "empirical_re", "empirical_im", "se_re", "se_im", "theoretical_re", "theoretical_im", "z"];
const TRAJECTORY: &[&str] = &["t", "l2_norm", "h1_norm", "f_theta", "big_jumps"];
const MEASURE: &[&str] = &["observable", "bin_lo", "bin_hi", "mass", "window"];

fn kind_of(header: &[&str]) -> Option<Kind> {
    [(MOMENTS, Kind::Moments), (CHARFUN, Kind::CharFun), (TRAJECTORY, Kind::Trajectory), (MEASURE, Kind::Measure)]
        .into_iter()
        .find_map(|(h, k)| (h == header).then_some(k))
}

pub type Point = (String, f64, f64, f64);

/// Rows of one report. Comment lines start with `#`; an empty report yields none.
pub fn report_points(name: &str, text: &str) -> Result<Vec<Point>, SchemaError> {
    let err = |line: usize, message: String| SchemaError { file: name.to_string(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else { return Ok(Vec::new()) };
    let columns: Vec<&str> = header.split(',').collect();
    let kind = kind_of(&columns).ok_or_else(|| err(hline, format!("unrecognised report header '{header}'")))?;
    let mut out = Vec::new();
    for (no, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(err(no, format!("expected {} fields, found {}", columns.len(), cells.len())));
        }
        let num = |i: usize| -> Result<f64, SchemaError> {
            cells[i].parse::<f64>().map_err(|_| err(no, format!("column '{}' is not a number: '{}'", columns[i], cells[i])))
        };
        match kind {
            Kind::Moments => {
                let t = num(0)?;
                for (series, y, e) in [("sup_term", 1, 2), ("integral_term", 3, 4), ("gradient_moment", 11, 12)] {
                    out.push((series.to_string(), t, num(y)?, num(e)?));
                }
                out.push(("gradient_bound".to_string(), t, num(13)?, 0.0));
            }
            Kind::CharFun => {
                let (s, t, xi) = (num(2)?, num(3)?, num(4)?);
                let lag = t - s;
                let tag = format!("cf:mode={}:dt={}:xi={xi}", cells[0], cells[1]);
                out.push((format!("{tag}:re:empirical"), lag, num(5)?, num(7)?));
                out.push((format!("{tag}:im:empirical"), lag, num(6)?, num(8)?));
                out.push((format!("{tag}:re:theoretical"), lag, num(9)?, 0.0));
                out.push((format!("{tag}:im:theoretical"), lag, num(10)?, 0.0));
            }
            Kind::Trajectory => {
                let t = num(0)?;
                for (series, i) in [("l2_norm", 1), ("h1_norm", 2), ("f_theta", 3)] {
                    out.push((series.to_string(), t, num(i)?, 0.0));
                }
            }
            Kind::Measure => {
                let (lo, hi, mass) = (num(1)?, num(2)?, num(3)?);
                if lo.is_finite() && hi.is_finite() {
                    out.push((format!("measure:{}@{}", cells[0], cells[4]), 0.5 * (lo + hi), mass, 0.0));
                }
            }
        }
    }
    Ok(out)
}

/// Concatenated plot rows of several reports, in input order.
pub fn plot_csv(inputs: &[(String, String)]) -> Result<Vec<u8>, SchemaError> {
    let mut csv = Csv::new(None, &["series", "x", "y", "yerr"]);
    for (name, text) in inputs {
        for (series, x, y, e) in report_points(name, text)? {
            csv.row(&[&series, &x, &y, &e]);
        }
    }
    Ok(csv.into_bytes())
}

pub fn read_inputs(paths: &[impl AsRef<Path>]) -> std::io::Result<Vec<(String, String)>> {
    paths.iter().map(|p| Ok((p.as_ref().display().to_string(), std::fs::read_to_string(p)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_lines(bytes: &[u8]) -> Vec<String> {
        String::from_utf8(bytes.to_vec()).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
    }

    #[test]
    fn empty_report_gives_header_only() {
        let out = plot_csv(&[("a".into(), String::new())]).unwrap();
        assert_eq!(data_lines(&out), vec!["series,x,y,yerr"]);
        let out = plot_csv(&[("b".into(), format!("# c\n{}\n", MOMENTS.join(",")))]).unwrap();
        assert_eq!(data_lines(&out), vec!["series,x,y,yerr"]);
    }

    #[test]
    fn moment_report_maps_to_series() {
        let text = format!("{}\n1,2,0.1,3,0.2,5,0.3,1,0.1,1,0.1,4,0.4,9\n", MOMENTS.join(","));
        let pts = report_points("m.csv", &text).unwrap();
        assert_eq!(pts[0], ("sup_term".into(), 1.0, 2.0, 0.1));
        assert_eq!(pts[1], ("integral_term".into(), 1.0, 3.0, 0.2));
        assert_eq!(pts.len(), 4);
    }

    #[test]
    fn charfun_report_maps_to_series() {
        let text = format!("{}\n1,0.001,0,0.5,2,0.9,0.01,0.002,0.003,0.91,0,0.4\n", CHARFUN.join(","));
        let pts = report_points("cf.csv", &text).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], ("cf:mode=1:dt=0.001:xi=2:re:empirical".into(), 0.5, 0.9, 0.002));
        assert_eq!(pts[3].2, 0.0);
    }

    #[test]
    fn schema_errors_name_file_and_line() {
        let text = format!("# hash\n{}\n1,2\n", TRAJECTORY.join(","));
        let e = report_points("traj.csv", &text).unwrap_err();
        assert_eq!((e.file.as_str(), e.line), ("traj.csv", 3));
        let e = report_points("x.csv", "a,b\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = report_points("m.csv", &format!("{}\ninf,x,0,0,0\n", TRAJECTORY.join(","))).unwrap_err();
        assert!(e.to_string().starts_with("m.csv:2:"));
    }

    #[test]
    fn output_is_stable() {
        let text = format!("{}\n0,1,2,1,0\n0.1,0.5,1,1.1,1\n", TRAJECTORY.join(","));
        let a = plot_csv(&[("t".into(), text.clone())]).unwrap();
        assert_eq!(a, plot_csv(&[("t".into(), text)]).unwrap());
    }
}
