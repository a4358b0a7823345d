//! Long-form indicator panels: ingestion, per-year standardization, composite
//! indices, E/I joins and per-entity time averages.
//!
//! Missing observations are absent rows. All serialization is ordered by
//! entity, then year.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhasePoint;
use crate::simulate::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelSchema {
    pub entity: String,
    pub year: String,
    pub value: String,
    pub delimiter: u8,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            entity: "entity".into(),
            year: "year".into(),
            value: "value".into(),
            delimiter: b',',
        }
    }
}

impl PanelSchema {
    pub fn with_value(value: &str) -> Self {
        Self {
            value: value.into(),
            ..Self::default()
        }
    }

    pub fn tab(mut self) -> Self {
        self.delimiter = b'\t';
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelRow<'a> {
    pub entity: &'a str,
    pub year: i32,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelTable {
    data: BTreeMap<(String, i32), f64>,
}

impl PanelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entity: &str, year: i32, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite value for ({entity}, {year})")));
        }
        match self.data.entry((entity.to_string(), year)) {
            std::collections::btree_map::Entry::Occupied(_) => Err(Error::DuplicateKey {
                entity: entity.to_string(),
                year,
            }),
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(value);
                Ok(())
            }
        }
    }

    pub fn from_rows<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, i32, f64)>,
    {
        let mut t = Self::new();
        for (e, y, v) in rows {
            t.insert(e, y, v)?;
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, entity: &str, year: i32) -> Option<f64> {
        self.data.get(&(entity.to_string(), year)).copied()
    }

    pub fn rows(&self) -> impl Iterator<Item = PanelRow<'_>> {
        self.data.iter().map(|((e, y), v)| PanelRow {
            entity: e,
            year: *y,
            value: *v,
        })
    }

    pub fn years(&self) -> Vec<i32> {
        self.data
            .keys()
            .map(|(_, y)| *y)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn entities(&self) -> Vec<String> {
        self.data
            .keys()
            .map(|(e, _)| e.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Entity -> value for one year.
    pub fn cross_section(&self, year: i32) -> BTreeMap<&str, f64> {
        self.data
            .iter()
            .filter(|((_, y), _)| *y == year)
            .map(|((e, _), v)| (e.as_str(), *v))
            .collect()
    }

    /// Applies `f(year, value)` to every observation.
    pub fn map_values(&self, mut f: impl FnMut(i32, f64) -> f64) -> Self {
        Self {
            data: self
                .data
                .iter()
                .map(|((e, y), v)| ((e.clone(), *y), f(*y, *v)))
                .collect(),
        }
    }
}

pub fn load_panel<R: Read>(source: R, schema: &PanelSchema) -> Result<PanelTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let (ce, cy, cv) = (col(&schema.entity)?, col(&schema.year)?, col(&schema.value)?);

    let mut table = PanelTable::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let entity = rec.get(ce).unwrap_or("");
        if entity.is_empty() {
            return Err(parse_err(line, "empty entity".into()));
        }
        let year: i32 = rec
            .get(cy)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_err(line, format!("bad year '{}'", rec.get(cy).unwrap_or(""))))?;
        let raw = rec.get(cv).unwrap_or("");
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("non-numeric value '{raw}'")))?;
        table.insert(entity, year, value)?;
    }
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(table)
}

fn parse_err(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

pub fn write_panel<W: Write>(sink: W, table: &PanelTable, schema: &PanelSchema) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(schema.delimiter).from_writer(sink);
    w.write_record([&schema.entity, &schema.year, &schema.value])?;
    for r in table.rows() {
        w.write_record([r.entity.to_string(), r.year.to_string(), fmt_f64(r.value)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn mean_and_sample_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Z-scores each year's cross-section (sample standard deviation).
pub fn standardize_by_year(p: &PanelTable) -> Result<PanelTable> {
    let mut stats = BTreeMap::new();
    for year in p.years() {
        let vals: Vec<f64> = p.cross_section(year).values().copied().collect();
        if vals.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "year {year} has {} entities (need >= 3)",
                vals.len()
            )));
        }
        let (mean, sd) = mean_and_sample_sd(&vals);
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance(format!("year {year}")));
        }
        stats.insert(year, (mean, sd));
    }
    Ok(p.map_values(|y, v| {
        let (m, s) = stats[&y];
        (v - m) / s
    }))
}

/// Weighted mean across panels, emitted only where every panel has the key.
pub fn composite_index(panels: &[PanelTable], weights: Option<&[f64]>) -> Result<PanelTable> {
    if panels.is_empty() {
        return Err(Error::InsufficientData("composite needs at least one panel".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != panels.len() {
                return Err(Error::InvalidParams(format!(
                    "{} weights for {} panels",
                    w.len(),
                    panels.len()
                )));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 || w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams(format!("weights sum to {total}, not 1")));
            }
            w.to_vec()
        }
        None => vec![1.0 / panels.len() as f64; panels.len()],
    };

    let mut out = PanelTable::new();
    'keys: for key in panels[0].data.keys() {
        let mut acc = 0.0;
        for (panel, wk) in panels.iter().zip(&w) {
            match panel.data.get(key) {
                Some(v) => acc += wk * v,
                None => continue 'keys,
            }
        }
        out.data.insert(key.clone(), acc);
    }
    if out.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinedRow<'a> {
    pub entity: &'a str,
    pub year: i32,
    pub e: f64,
    pub i: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinedPanel {
    data: BTreeMap<(String, i32), (f64, f64)>,
}

impl JoinedPanel {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = JoinedRow<'_>> {
        self.data.iter().map(|((en, y), (e, i))| JoinedRow {
            entity: en,
            year: *y,
            e: *e,
            i: *i,
        })
    }

    pub fn entity_count(&self) -> usize {
        self.data.keys().map(|(e, _)| e).collect::<BTreeSet<_>>().len()
    }

    /// One trajectory per entity with at least `min_len` observations; time is
    /// the calendar year.
    pub fn trajectories(&self, min_len: usize) -> Vec<Trajectory> {
        let mut grouped: BTreeMap<&str, (Vec<f64>, Vec<PhasePoint>)> = BTreeMap::new();
        for r in self.rows() {
            let slot = grouped.entry(r.entity).or_default();
            slot.0.push(r.year as f64);
            slot.1.push(PhasePoint::new(r.e, r.i));
        }
        grouped
            .into_iter()
            .filter(|(_, (t, _))| t.len() >= min_len.max(2))
            .filter_map(|(id, (t, p))| Trajectory::new(id, t, p).ok())
            .collect()
    }

    /// Split back into E and I panels.
    pub fn split(&self) -> (PanelTable, PanelTable) {
        let mut e = PanelTable::new();
        let mut i = PanelTable::new();
        for ((en, y), (ev, iv)) in &self.data {
            e.data.insert((en.clone(), *y), *ev);
            i.data.insert((en.clone(), *y), *iv);
        }
        (e, i)
    }
}

pub fn join_panels(e_panel: &PanelTable, i_panel: &PanelTable) -> Result<JoinedPanel> {
    let data: BTreeMap<_, _> = e_panel
        .data
        .iter()
        .filter_map(|(k, e)| i_panel.data.get(k).map(|i| (k.clone(), (*e, *i))))
        .collect();
    if data.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(JoinedPanel { data })
}

pub fn load_joined<R: Read>(source: R, delimiter: u8) -> Result<JoinedPanel> {
    let text = {
        let mut s = String::new();
        let mut src = source;
        src.read_to_string(&mut s)?;
        s
    };
    let e = load_panel(
        text.as_bytes(),
        &PanelSchema {
            value: "e".into(),
            delimiter,
            ..PanelSchema::default()
        },
    )?;
    let i = load_panel(
        text.as_bytes(),
        &PanelSchema {
            value: "i".into(),
            delimiter,
            ..PanelSchema::default()
        },
    )?;
    join_panels(&e, &i)
}

pub fn write_joined<W: Write>(sink: W, j: &JoinedPanel, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    w.write_record(["entity", "year", "e", "i"])?;
    for r in j.rows() {
        w.write_record([r.entity.to_string(), r.year.to_string(), fmt_f64(r.e), fmt_f64(r.i)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityAverage {
    pub entity: String,
    pub e_mean: f64,
    pub i_mean: f64,
    pub n_years: usize,
}

impl EntityAverage {
    pub fn mu(&self) -> f64 {
        self.i_mean + self.e_mean
    }

    pub fn kappa(&self) -> f64 {
        self.i_mean - self.e_mean
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityAverages {
    pub rows: Vec<EntityAverage>,
}

impl EntityAverages {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_points<'a, I>(points: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, PhasePoint)>,
    {
        Self {
            rows: points
                .into_iter()
                .map(|(id, p)| EntityAverage {
                    entity: id.to_string(),
                    e_mean: p.e,
                    i_mean: p.i,
                    n_years: 1,
                })
                .collect(),
        }
    }
}

pub fn time_average(j: &JoinedPanel) -> EntityAverages {
    let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for r in j.rows() {
        let a = acc.entry(r.entity).or_insert((0.0, 0.0, 0));
        a.0 += r.e;
        a.1 += r.i;
        a.2 += 1;
    }
    EntityAverages {
        rows: acc
            .into_iter()
            .map(|(en, (se, si, n))| EntityAverage {
                entity: en.to_string(),
                e_mean: se / n as f64,
                i_mean: si / n as f64,
                n_years: n,
            })
            .collect(),
    }
}

pub fn write_averages<W: Write>(sink: W, a: &EntityAverages, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    w.write_record(["entity", "e_mean", "i_mean", "n_years"])?;
    for r in &a.rows {
        w.write_record([
            r.entity.clone(),
            fmt_f64(r.e_mean),
            fmt_f64(r.i_mean),
            r.n_years.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_averages<R: Read>(source: R, delimiter: u8) -> Result<EntityAverages> {
    let table = load_entity_table(source, delimiter)?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let (e, i) = (col("e_mean")?, col("i_mean")?);
    let n = table.column("n_years");
    let rows = table
        .entities
        .iter()
        .enumerate()
        .map(|(k, id)| EntityAverage {
            entity: id.clone(),
            e_mean: e[k],
            i_mean: i[k],
            n_years: n.map(|c| c[k] as usize).unwrap_or(1),
        })
        .collect();
    Ok(EntityAverages { rows })
}

/// Per-entity numeric columns (covariates such as temperature or elevation).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityTable {
    pub entities: Vec<String>,
    pub names: Vec<String>,
    /// Column-major: `columns[c][row]`.
    pub columns: Vec<Vec<f64>>,
}

impl EntityTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.columns[k].as_slice())
    }

    pub fn row_of(&self, entity: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == entity)
    }
}

/// Reads a table whose first column is `entity` and whose other columns are
/// numeric. Rows with a blank numeric cell are dropped.
pub fn load_entity_table<R: Read>(source: R, delimiter: u8) -> Result<EntityTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let ent_col = headers
        .iter()
        .position(|h| h == "entity")
        .ok_or_else(|| parse_err(1, "missing column 'entity'".into()))?;
    let value_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != ent_col).collect();
    let mut table = EntityTable {
        names: value_cols.iter().map(|&c| headers[c].to_string()).collect(),
        columns: vec![Vec::new(); value_cols.len()],
        ..Default::default()
    };
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = rec.get(ent_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty entity".into()));
        }
        let mut vals = Vec::with_capacity(value_cols.len());
        let mut blank = false;
        for &c in &value_cols {
            let raw = rec.get(c).unwrap_or("");
            if raw.is_empty() {
                blank = true;
                break;
            }
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("non-numeric value '{raw}'")))?;
            vals.push(v);
        }
        if blank {
            continue;
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateKey { entity: id, year: 0 });
        }
        table.entities.push(id);
        for (col, v) in table.columns.iter_mut().zip(vals) {
            col.push(v);
        }
    }
    if table.entities.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn loads_small_file() {
        let src = "entity,year,value\nUSA,2000,1.5\nFRA,2000,0.5\nUSA,2001,1.6\n";
        let t = load_panel(src.as_bytes(), &PanelSchema::default()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.get("USA", 2001), Some(1.6));
    }

    #[test]
    fn custom_columns_and_tabs() {
        let src = "hdi\tiso\tyr\n0.7\tKEN\t1999\n";
        let schema = PanelSchema {
            entity: "iso".into(),
            year: "yr".into(),
            value: "hdi".into(),
            delimiter: b'\t',
        };
        let t = load_panel(src.as_bytes(), &schema).unwrap();
        assert_eq!(t.get("KEN", 1999), Some(0.7));
    }

    #[test]
    fn duplicate_key_named() {
        let src = "entity,year,value\nUSA,2000,1\nUSA,2000,2\n";
        let err = load_panel(src.as_bytes(), &PanelSchema::default()).unwrap_err();
        match err {
            Error::DuplicateKey { entity, year } => {
                assert_eq!(entity, "USA");
                assert_eq!(year, 2000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line() {
        let src = "entity,year,value\nUSA,2000,1\nFRA,2000,abc\n";
        match load_panel(src.as_bytes(), &PanelSchema::default()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let src = "entity,year,value\nUSA,2000\n";
        assert!(matches!(
            load_panel(src.as_bytes(), &PanelSchema::default()),
            Err(Error::Parse { line: 2, .. })
        ));
        let src = "entity,year,value\n";
        assert!(matches!(
            load_panel(src.as_bytes(), &PanelSchema::default()),
            Err(Error::EmptyTable)
        ));
        assert!(load_panel("".as_bytes(), &PanelSchema::default()).is_err());
    }

    #[test]
    fn standardize_simple_year() {
        let t = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, 2.0), ("C", 2000, 3.0)]).unwrap();
        let s = standardize_by_year(&t).unwrap();
        assert_abs_diff_eq!(s.get("A", 2000).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get("B", 2000).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get("C", 2000).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn standardize_errors() {
        let t = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, 2.0)]).unwrap();
        assert!(matches!(standardize_by_year(&t), Err(Error::InsufficientData(_))));
        let t = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, 1.0), ("C", 2000, 1.0)]).unwrap();
        assert!(matches!(standardize_by_year(&t), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn composite_examples() {
        let a = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, 5.0)]).unwrap();
        let b = PanelTable::from_rows([("A", 2000, 3.0), ("C", 2000, 5.0)]).unwrap();
        let c = composite_index(&[a.clone(), b.clone()], None).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get("A", 2000), Some(2.0));

        let five = vec![a.clone(); 5];
        assert_eq!(composite_index(&five, None).unwrap(), a);

        let w = composite_index(&[a.clone(), b.clone()], Some(&[0.25, 0.75])).unwrap();
        assert_eq!(w.get("A", 2000), Some(2.5));
        assert!(composite_index(&[a.clone(), b.clone()], Some(&[0.5, 0.6])).is_err());

        let d = PanelTable::from_rows([("Z", 1990, 1.0)]).unwrap();
        assert!(matches!(composite_index(&[a, d], None), Err(Error::EmptyJoin)));
    }

    #[test]
    fn join_examples() {
        let a = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, 5.0)]).unwrap();
        let j = join_panels(&a, &a).unwrap();
        assert_eq!(j.len(), 2);
        let z = PanelTable::from_rows([("Z", 2000, 1.0)]).unwrap();
        assert!(matches!(join_panels(&a, &z), Err(Error::EmptyJoin)));
    }

    #[test]
    fn averages() {
        let e = PanelTable::from_rows([("A", 2000, 0.2), ("A", 2001, 0.4), ("B", 2000, 1.0)]).unwrap();
        let i = PanelTable::from_rows([("A", 2000, 1.0), ("A", 2001, 3.0), ("B", 2000, -1.0)]).unwrap();
        let avg = time_average(&join_panels(&e, &i).unwrap());
        assert_eq!(avg.len(), 2);
        assert_abs_diff_eq!(avg.rows[0].e_mean, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(avg.rows[0].i_mean, 2.0, epsilon = 1e-15);
        assert_eq!(avg.rows[0].n_years, 2);
        assert_eq!(avg.rows[1].e_mean, 1.0);
        assert_eq!(avg.rows[1].n_years, 1);
    }

    #[test]
    fn panel_csv_round_trip() {
        let t = PanelTable::from_rows([("B", 2001, 0.1), ("A", 2000, -2.5e-7), ("A", 1999, 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &t, &PanelSchema::default()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("entity,year,value\nA,1999,"));
        let back = load_panel(buf.as_slice(), &PanelSchema::default()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn joined_and_averages_round_trip() {
        let e = PanelTable::from_rows([("A", 2000, 0.2), ("B", 2000, 1.0), ("A", 2001, 0.5)]).unwrap();
        let i = PanelTable::from_rows([("A", 2000, 1.0), ("B", 2000, -1.0), ("A", 2001, 0.25)]).unwrap();
        let j = join_panels(&e, &i).unwrap();
        let mut buf = Vec::new();
        write_joined(&mut buf, &j, b',').unwrap();
        assert_eq!(load_joined(buf.as_slice(), b',').unwrap(), j);

        let avg = time_average(&j);
        let mut buf = Vec::new();
        write_averages(&mut buf, &avg, b',').unwrap();
        assert_eq!(load_averages(buf.as_slice(), b',').unwrap(), avg);

        let trajs = j.trajectories(2);
        assert_eq!(trajs.len(), 1);
        assert_eq!(trajs[0].entity_id, "A");
        assert_eq!(trajs[0].times, vec![2000.0, 2001.0]);
    }

    #[test]
    fn entity_table_drops_blank_rows() {
        let src = "entity,t_star,h\nAAA,20.5,0.3\nAAB,,0.1\nAAC,18,0.9\n";
        let t = load_entity_table(src.as_bytes(), b',').unwrap();
        assert_eq!(t.entities, vec!["AAA", "AAC"]);
        assert_eq!(t.column("h").unwrap(), &[0.3, 0.9]);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn panel_strategy() -> impl Strategy<Value = PanelTable> {
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 4..9), 1..4).prop_map(|years| {
                let mut t = PanelTable::new();
                for (y, vals) in years.iter().enumerate() {
                    for (k, v) in vals.iter().enumerate() {
                        // small per-entity offset keeps every cross-section non-constant
                        t.insert(&format!("E{k:02}"), 2000 + y as i32, v + k as f64 * 1e-3)
                            .unwrap();
                    }
                }
                t
            })
        }

        fn spearman_is_one(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> bool {
            let keys: Vec<_> = a.keys().collect();
            keys.iter().all(|k1| {
                keys.iter().all(|k2| {
                    let da = a[*k1].partial_cmp(&a[*k2]);
                    let db = b[*k1].partial_cmp(&b[*k2]);
                    da == db
                })
            })
        }

        proptest! {
            #[test]
            fn standardized_moments(t in panel_strategy()) {
                let s = standardize_by_year(&t).unwrap();
                for y in s.years() {
                    let v: Vec<f64> = s.cross_section(y).values().copied().collect();
                    let n = v.len() as f64;
                    let m = v.iter().sum::<f64>() / n;
                    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
                    prop_assert!(m.abs() < 1e-12);
                    prop_assert!((var - 1.0).abs() < 1e-12);
                    prop_assert!(spearman_is_one(&t.cross_section(y), &s.cross_section(y)));
                }
                let twice = standardize_by_year(&s).unwrap();
                for (a, b) in s.rows().zip(twice.rows()) {
                    prop_assert!((a.value - b.value).abs() < 1e-12);
                }
            }

            #[test]
            fn composite_permutation_invariant(a in panel_strategy(), b in panel_strategy(), c in panel_strategy()) {
                let x = composite_index(&[a.clone(), b.clone(), c.clone()], None);
                let y = composite_index(&[c, a, b], None);
                match (x, y) {
                    (Ok(x), Ok(y)) => {
                        prop_assert_eq!(x.len(), y.len());
                        for (r, s) in x.rows().zip(y.rows()) {
                            prop_assert!((r.value - s.value).abs() < 1e-12);
                        }
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "one ordering failed"),
                }
            }

            #[test]
            fn join_count_symmetric(a in panel_strategy(), b in panel_strategy()) {
                let ab = join_panels(&a, &b).map(|j| j.len()).unwrap_or(0);
                let ba = join_panels(&b, &a).map(|j| j.len()).unwrap_or(0);
                prop_assert_eq!(ab, ba);
                prop_assert!(ab <= a.len().min(b.len()));
            }
        }
    }
}
