//! Front files (`algorithm,beta_or_id,obj_t,obj_s,seed`) and the statistics computed on
//! them.

use std::path::Path;

use cogradar::moo::{dominates, extract_pareto, hypervolume_2d, reference_point, ObjectivePoint};

use crate::error::{CliError, CliResult};

pub const FRONT_HEADER: [&str; 5] = ["algorithm", "beta_or_id", "obj_t", "obj_s", "seed"];

/// Margin of the declared hypervolume reference point below the component-wise minima.
pub const REFERENCE_MARGIN: f64 = 0.05;

pub fn front_csv(points: &[ObjectivePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FRONT_HEADER).expect("in-memory write");
    for p in points {
        w.write_record([
            p.provenance.algorithm.clone(),
            p.provenance.tag.to_string(),
            p.obj_t.to_string(),
            p.obj_s.to_string(),
            p.provenance.seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses a front file, rejecting any header other than [`FRONT_HEADER`] and any
/// unparsable or non-finite cell.
pub fn read_front(path: &Path) -> CliResult<Vec<ObjectivePoint>> {
    let schema = |reason: String| CliError::Schema {
        file: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| schema(e.to_string()))?;
    parse_front(&text).map_err(schema)
}

pub fn parse_front(text: &str) -> Result<Vec<ObjectivePoint>, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.len() != FRONT_HEADER.len() {
        return Err(format!(
            "expected {} columns ({}), found {}",
            FRONT_HEADER.len(),
            FRONT_HEADER.join(","),
            header.len()
        ));
    }
    for (i, (got, want)) in header.iter().zip(FRONT_HEADER).enumerate() {
        if got != want {
            return Err(format!("column {} is `{got}`, expected `{want}`", i + 1));
        }
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = line + 2;
        let num = |col: usize| -> Result<f64, String> {
            let v: f64 = rec[col].trim().parse().map_err(|_| {
                format!(
                    "row {row}, column `{}`: `{}` is not a number",
                    FRONT_HEADER[col], &rec[col]
                )
            })?;
            if !v.is_finite() {
                return Err(format!(
                    "row {row}, column `{}`: value is not finite",
                    FRONT_HEADER[col]
                ));
            }
            Ok(v)
        };
        let seed: u64 = rec[4]
            .trim()
            .parse()
            .map_err(|_| format!("row {row}, column `seed`: `{}` is not an unsigned integer", &rec[4]))?;
        out.push(ObjectivePoint::new(num(2)?, num(3)?, rec[0].trim(), num(1)?, seed));
    }
    Ok(out)
}

pub fn objectives(points: &[ObjectivePoint]) -> Vec<[f64; 2]> {
    points.iter().map(ObjectivePoint::objectives).collect()
}

/// Shared reference over every point of every set.
pub fn shared_reference<'a>(sets: impl IntoIterator<Item = &'a [ObjectivePoint]>) -> [f64; 2] {
    let all: Vec<[f64; 2]> = sets.into_iter().flat_map(objectives).collect();
    reference_point(&all, REFERENCE_MARGIN)
}

pub fn hypervolume(points: &[ObjectivePoint], reference: [f64; 2]) -> CliResult<f64> {
    Ok(hypervolume_2d(&objectives(points), reference)?)
}

/// Number of points of `a` dominated by at least one point of `b`.
pub fn dominated_count(a: &[ObjectivePoint], b: &[ObjectivePoint]) -> usize {
    a.iter()
        .filter(|p| b.iter().any(|q| dominates(&q.objectives(), &p.objectives())))
        .count()
}

/// A named set of points and its non-dominated subset.
#[derive(Debug, Clone)]
pub struct NamedFront {
    pub name: String,
    pub points: Vec<ObjectivePoint>,
}

impl NamedFront {
    pub fn new(name: impl Into<String>, points: Vec<ObjectivePoint>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }

    pub fn pareto(&self) -> Vec<ObjectivePoint> {
        extract_pareto(&self.points)
    }
}

/// `name,points,front_points,hypervolume,ref_t,ref_s`, one row per set.
pub fn hypervolume_table(sets: &[NamedFront], reference: [f64; 2]) -> CliResult<String> {
    let mut out = String::from("name,points,front_points,hypervolume,ref_t,ref_s\n");
    for s in sets {
        let hv = hypervolume(&s.points, reference)?;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.name,
            s.points.len(),
            s.pareto().len(),
            hv,
            reference[0],
            reference[1]
        ));
    }
    Ok(out)
}

/// `a,b,a_dominated_by_b,b_dominated_by_a` for every ordered pair `a < b` of fronts.
pub fn dominance_table(sets: &[NamedFront]) -> String {
    let mut out = String::from("a,b,a_dominated_by_b,b_dominated_by_a\n");
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (sets[i].pareto(), sets[j].pareto());
            out.push_str(&format!(
                "{},{},{},{}\n",
                sets[i].name,
                sets[j].name,
                dominated_count(&a, &b),
                dominated_count(&b, &a)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64, s: f64) -> ObjectivePoint {
        ObjectivePoint::new(t, s, "sac", 0.0, 1)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = vec![
            ObjectivePoint::new(-123.456789012345, 2.5, "sac", 300.0, 42),
            ObjectivePoint::new(-0.1, 3.0, "nsga2", 7.0, u64::MAX),
        ];
        assert_eq!(parse_front(&front_csv(&pts)).unwrap(), pts);
    }

    #[test]
    fn schema_errors_name_the_column() {
        let err = parse_front("algorithm,beta,obj_t,obj_s,seed\n").unwrap_err();
        assert!(err.contains("`beta`"), "{err}");
        let err = parse_front("algorithm,beta_or_id,obj_t,obj_s\n").unwrap_err();
        assert!(err.contains("5 columns"), "{err}");
        let err = parse_front("algorithm,beta_or_id,obj_t,obj_s,seed\nsac,0,abc,1,2\n").unwrap_err();
        assert!(err.contains("row 2") && err.contains("obj_t"), "{err}");
        let err = parse_front("algorithm,beta_or_id,obj_t,obj_s,seed\nsac,0,1,NaN,2\n").unwrap_err();
        assert!(err.contains("obj_s"), "{err}");
    }

    #[test]
    fn copy_of_a_front_has_no_dominance_difference() {
        let f = NamedFront::new("a", vec![p(1.0, 3.0), p(2.0, 2.0), p(3.0, 1.0)]);
        let g = NamedFront::new("b", f.points.clone());
        assert_eq!(
            dominance_table(&[f, g]),
            "a,b,a_dominated_by_b,b_dominated_by_a\na,b,0,0\n"
        );
    }

    #[test]
    fn dominated_counts() {
        let a = vec![p(1.0, 1.0), p(5.0, 0.0)];
        let b = vec![p(2.0, 2.0)];
        assert_eq!(dominated_count(&a, &b), 1);
        assert_eq!(dominated_count(&b, &a), 0);
    }
}
