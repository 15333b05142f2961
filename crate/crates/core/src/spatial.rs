//! Observation points, planar distances, neighbor queries and correlation.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Observation points with planar coordinates, features and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    features: Matrix,
    feature_names: Vec<String>,
    response: Vec<f64>,
}

impl SpatialDataset {
    /// Validates and assembles a dataset.
    pub fn new(
        ids: Vec<String>,
        coords: Vec<[f64; 2]>,
        features: Matrix,
        feature_names: Vec<String>,
        response: Vec<f64>,
    ) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 points, got {n}")));
        }
        if coords.len() != n || features.nrows() != n || response.len() != n {
            return Err(Error::InvalidDataset(format!(
                "row count mismatch: ids {n}, coords {}, features {}, response {}",
                coords.len(),
                features.nrows(),
                response.len()
            )));
        }
        let d = features.ncols();
        if d == 0 {
            return Err(Error::InvalidDataset("need at least one feature".into()));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {d} feature columns",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate id '{id}'")));
            }
        }
        for i in 0..n {
            let finite = coords[i].iter().all(|v| v.is_finite())
                && features.row(i).iter().all(|v| v.is_finite())
                && response[i].is_finite();
            if !finite {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in row {i} (id '{}')",
                    ids[i]
                )));
            }
        }
        Ok(SpatialDataset {
            ids,
            coords,
            features,
            feature_names,
            response,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Copy of the dataset with a different response column.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        SpatialDataset::new(
            self.ids.clone(),
            self.coords.clone(),
            self.features.clone(),
            self.feature_names.clone(),
            response,
        )
    }
}

/// Column-name mapping used when reading delimited input.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub id: String,
    pub cx: String,
    pub cy: String,
    pub response: String,
    /// Explicit feature columns; empty means every column not named above.
    pub features: Vec<String>,
    pub delimiter: u8,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            id: "id".into(),
            cx: "cx".into(),
            cy: "cy".into(),
            response: "y".into(),
            features: Vec::new(),
            delimiter: b',',
        }
    }
}

/// Reads a delimited table with a header row into a validated dataset.
///
/// Row numbers in diagnostics are 1-based data rows (the header is row 0).
pub fn load_dataset<R: Read>(source: R, schema: &Schema) -> Result<SpatialDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = find(&schema.id)?;
    let cx_col = find(&schema.cx)?;
    let cy_col = find(&schema.cy)?;
    let y_col = find(&schema.response)?;
    let feature_cols: Vec<usize> = if schema.features.is_empty() {
        (0..headers.len())
            .filter(|c| ![id_col, cx_col, cy_col, y_col].contains(c))
            .collect()
    } else {
        schema
            .features
            .iter()
            .map(|f| find(f))
            .collect::<Result<_>>()?
    };
    if feature_cols.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();

    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut data = Vec::new();
    let mut response = Vec::new();
    let mut seen = HashSet::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Load {
                row,
                column: headers[c].clone(),
                message: format!("'{raw}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Load {
                    row,
                    column: headers[c].clone(),
                    message: format!("'{raw}' is not finite"),
                });
            }
            Ok(v)
        };
        let id = record.get(id_col).unwrap_or("").to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Load {
                row,
                column: schema.id.clone(),
                message: format!("duplicate id '{id}'"),
            });
        }
        coords.push([cell(cx_col)?, cell(cy_col)?]);
        for &c in &feature_cols {
            data.push(cell(c)?);
        }
        response.push(cell(y_col)?);
        ids.push(id);
    }
    let n = ids.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
    }
    let d = feature_cols.len();
    SpatialDataset::new(ids, coords, Matrix::from_vec(n, d, data), feature_names, response)
}

pub fn load_dataset_path(path: &Path, schema: &Schema) -> Result<SpatialDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset(std::io::BufReader::new(file), schema)
}

/// Brute-force Euclidean distance table with per-point neighbor orderings.
///
/// Neighbor lists are sorted by distance, ties by ascending point index.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    n: usize,
    dist: Vec<f64>,
    order: Vec<u32>,
}

impl DistanceIndex {
    pub fn build(ds: &SpatialDataset) -> Self {
        Self::from_coords(ds.coords())
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Self {
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                let d = (dx * dx + dy * dy).sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let mut order = Vec::with_capacity(n * n);
        let mut buf: Vec<u32> = Vec::with_capacity(n);
        for i in 0..n {
            buf.clear();
            buf.extend(0..n as u32);
            let row = &dist[i * n..(i + 1) * n];
            buf.sort_by(|&a, &b| {
                row[a as usize]
                    .total_cmp(&row[b as usize])
                    .then(a.cmp(&b))
            });
            order.extend_from_slice(&buf);
        }
        DistanceIndex { n, dist, order }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Distances from `i` to every point, in point order.
    pub fn distances_from(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// All points ordered by distance from `i`; the first entry is `i` unless
    /// another point shares its coordinates and has a smaller index.
    pub fn neighbor_order(&self, i: usize) -> &[u32] {
        &self.order[i * self.n..(i + 1) * self.n]
    }

    /// The `k` nearest points to `i` with their distances.
    pub fn knn(&self, i: usize, k: usize) -> Vec<(usize, f64)> {
        self.neighbor_order(i)
            .iter()
            .take(k)
            .map(|&j| (j as usize, self.distance(i, j as usize)))
            .collect()
    }

    /// Distance from `i` to its k-th nearest point (1-based, self included).
    pub fn kth_distance(&self, i: usize, k: usize) -> Option<f64> {
        if k == 0 || k > self.n {
            return None;
        }
        let j = self.neighbor_order(i)[k - 1] as usize;
        Some(self.distance(i, j))
    }
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 values".into()));
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance input".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Coefficient of determination of `pred` against `y`.
pub fn r_squared(y: &[f64], pred: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(pred).map(|(v, p)| (v - p).powi(2)).sum();
    1.0 - ss_res / ss_tot
}
