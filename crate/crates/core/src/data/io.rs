use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{validate_dataset, GroupStructure, SurvivalDataset};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_value<T: Real>(path: &Path, row: usize, col: &str, raw: &str) -> Result<T> {
    raw.parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::schema(path, format!("row {row}: column {col}: cannot parse '{raw}' as a number")))
}

fn parse_upper<T: Real>(path: &Path, row: usize, raw: &str) -> Result<T> {
    if raw.is_empty() || raw.eq_ignore_ascii_case("inf") || raw.eq_ignore_ascii_case("infinity") {
        Ok(T::infinity())
    } else {
        parse_value(path, row, "cU", raw)
    }
}

/// Reads `(column, group)` pairs from the group file.
fn read_groups(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| Error::schema(path, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "column" || &headers[1] != "group" {
        return Err(Error::schema(path, "header must be `column,group`"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, format!("row {}: {e}", i + 1)))?;
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::schema(path, format!("row {}: expected `column,group`", i + 1)));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// Loads a dataset from the data CSV (`c0,cL,cU,<x columns>,<z columns>`)
/// and the group CSV (`column,group`).
///
/// Columns named in the group file are the shrinkage covariates; any other
/// column must start with `z` and is taken as unpenalized. An empty `cU` or
/// the literal `inf` marks a right-censored row.
pub fn load_dataset<T: Real>(data_path: &Path, group_path: &Path) -> Result<SurvivalDataset<T>> {
    let group_rows = read_groups(group_path)?;
    let mut rdr = open_csv(data_path)?;
    let headers = rdr.headers().map_err(|e| Error::schema(data_path, e.to_string()))?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if position.len() != headers.len() {
        return Err(Error::schema(data_path, "duplicate column names in header"));
    }
    let required = ["c0", "cL", "cU"];
    for name in required {
        if !position.contains_key(name) {
            return Err(Error::schema(data_path, format!("missing required column `{name}`")));
        }
    }
    let mut label_of: HashMap<&str, &str> = HashMap::new();
    for (col, grp) in &group_rows {
        if !position.contains_key(col.as_str()) {
            return Err(Error::schema(group_path, format!("group file references unknown column `{col}`")));
        }
        if required.contains(&col.as_str()) {
            return Err(Error::schema(group_path, format!("`{col}` cannot be a covariate")));
        }
        if label_of.insert(col, grp).is_some() {
            return Err(Error::schema(group_path, format!("column `{col}` listed twice")));
        }
    }
    let mut x_cols = Vec::new();
    let mut z_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if required.contains(&h) {
            continue;
        }
        if label_of.contains_key(h) {
            x_cols.push(i);
        } else if h.starts_with('z') {
            z_cols.push(i);
        } else {
            return Err(Error::schema(data_path, format!(
                "column `{h}` is neither listed in the group file nor a `z` covariate"
            )));
        }
    }
    let labels: Vec<&str> = x_cols.iter().map(|&i| label_of[&headers[i]]).collect();
    let groups = GroupStructure::from_labels(&labels);

    let (mut c0, mut cl, mut cu) = (Vec::new(), Vec::new(), Vec::new());
    let (mut xs, mut zs) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::schema(data_path, format!("row {row}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(Error::schema(data_path, format!(
                "row {row}: expected {} fields, found {}", headers.len(), rec.len()
            )));
        }
        c0.push(parse_value::<T>(data_path, row, "c0", &rec[position["c0"]])?);
        cl.push(parse_value::<T>(data_path, row, "cL", &rec[position["cL"]])?);
        cu.push(parse_upper::<T>(data_path, row, &rec[position["cU"]])?);
        for &j in &x_cols {
            xs.push(parse_value::<T>(data_path, row, &headers[j], &rec[j])?);
        }
        for &j in &z_cols {
            zs.push(parse_value::<T>(data_path, row, &headers[j], &rec[j])?);
        }
    }
    let n = cl.len();
    if n == 0 {
        return Err(Error::schema(data_path, "no data rows"));
    }
    let x = Array2::from_shape_vec((n, x_cols.len()), xs).expect("row-major fill");
    let z = Array2::from_shape_vec((n, z_cols.len()), zs).expect("row-major fill");
    let x_names = x_cols.iter().map(|&i| headers[i].to_string()).collect();
    let z_names = z_cols.iter().map(|&i| headers[i].to_string()).collect();
    let d = SurvivalDataset::new_unchecked(Array1::from(c0), Array1::from(cl), Array1::from(cu), x, z, groups)
        .with_names(x_names, z_names)?;
    let report = validate_dataset(&d);
    if let Some(v) = report.violations.first() {
        return Err(Error::schema(data_path, format!("{v} ({:?})", v.rule)));
    }
    Ok(d)
}

fn fmt_num<T: Real>(v: T) -> String {
    if v == T::infinity() { "inf".to_string() } else { format!("{}", v.as_f64()) }
}

/// Writes the data CSV in the format read by [`load_dataset`].
pub fn write_dataset<T: Real>(path: &Path, d: &SurvivalDataset<T>) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut header = vec!["c0".to_string(), "cL".into(), "cU".into()];
    header.extend(d.x_names().iter().cloned());
    header.extend(d.z_names().iter().cloned());
    let mut text = header.join(",");
    text.push('\n');
    for i in 0..d.n() {
        let mut fields = vec![fmt_num(d.entry()[i]), fmt_num(d.lower()[i]), fmt_num(d.upper()[i])];
        fields.extend(d.x().row(i).iter().map(|&v| fmt_num(v)));
        fields.extend(d.z().row(i).iter().map(|&v| fmt_num(v)));
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the group CSV for the dataset's shrinkage covariates.
pub fn write_groups<T: Real>(path: &Path, d: &SurvivalDataset<T>) -> Result<()> {
    let mut text = String::from("column,group\n");
    for (j, name) in d.x_names().iter().enumerate() {
        let g = d.groups().group_of(j);
        text.push_str(&format!("{name},{}\n", d.groups().labels()[g]));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
