//! Dataset ingestion: CSV parsing, affine rescaling into the unit domain,
//! and key-based holdout splits.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};

/// Column layout of an input CSV: named location coordinates, one numeric
/// response column, and passthrough columns carried along unparsed. The first
/// passthrough column (if any) doubles as the holdout key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub location_columns: Vec<String>,
    pub response_column: String,
    #[serde(default)]
    pub passthrough_columns: Vec<String>,
}

impl CsvSchema {
    /// Key column used by holdout splits: the first passthrough column.
    pub fn key_column(&self) -> Option<&str> {
        self.passthrough_columns.first().map(String::as_str)
    }
}

/// Affine map `raw -> (raw - lo) / (hi - lo)` recorded per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub lo: f64,
    pub hi: f64,
}

impl AffineMap {
    pub fn to_model(&self, raw: f64) -> f64 {
        (raw - self.lo) / (self.hi - self.lo)
    }

    pub fn to_raw(&self, model: f64) -> f64 {
        self.lo + model * (self.hi - self.lo)
    }

    /// Jacobian of `to_model`; divides densities expressed in model units.
    pub fn scale(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Rescaling applied on load, kept for inverse mapping and reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleRecord {
    /// Observed min/max per location dimension; maps to `[0, 1]`.
    pub location: Vec<AffineMap>,
    /// Raw interval that the model response box `[0, 1]` corresponds to
    /// (data range expanded by the configured margin on each side).
    pub response: AffineMap,
}

/// Scattered `(location, response)` records in model units, with passthrough
/// metadata aligned row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub locations: Array2<f64>,
    pub responses: Array2<f64>,
    /// Holdout keys, one per record; empty when no key column exists.
    pub keys: Vec<String>,
    pub passthrough_columns: Vec<String>,
    pub passthrough: Vec<Vec<String>>,
}

impl Dataset {
    pub fn from_points(locations: Array2<f64>, responses: Array2<f64>) -> Result<Self> {
        if locations.nrows() != responses.nrows() {
            return Err(SlgpError::DimensionMismatch {
                expected: locations.nrows(),
                got: responses.nrows(),
            });
        }
        Ok(Self {
            locations,
            responses,
            keys: Vec::new(),
            passthrough_columns: Vec::new(),
            passthrough: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.locations.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_d(&self) -> usize {
        self.locations.ncols()
    }

    pub fn d_t(&self) -> usize {
        self.responses.ncols()
    }

    /// Every record inside the closed domain boxes.
    pub fn check_domain(&self, domain: &DomainSpec) -> Result<()> {
        if self.d_d() != domain.d_d() && !self.is_empty() {
            return Err(SlgpError::DimensionMismatch { expected: domain.d_d(), got: self.d_d() });
        }
        for i in 0..self.len() {
            let x = self.locations.row(i);
            let t = self.responses.row(i);
            if !domain.contains_location(x.as_slice().expect("row-major")) {
                return Err(SlgpError::OutsideDomain(format!("record {i} location {x}")));
            }
            if !domain.contains_response(t.as_slice().expect("row-major")) {
                return Err(SlgpError::OutsideDomain(format!("record {i} response {t}")));
            }
        }
        Ok(())
    }

    /// Distinct keys in first-appearance order with their record locations.
    pub fn stations(&self) -> Vec<(String, Vec<f64>)> {
        let mut seen = BTreeMap::new();
        let mut ordered = Vec::new();
        for (i, key) in self.keys.iter().enumerate() {
            if !seen.contains_key(key) {
                seen.insert(key.clone(), ());
                ordered.push((key.clone(), self.locations.row(i).to_vec()));
            }
        }
        ordered
    }
}

/// A loaded dataset together with its rescaling record, the derived unit
/// domain and per-row rejections.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub rescale: RescaleRecord,
    pub domain: DomainSpec,
    /// `(csv line number, message)` for rows that failed to parse.
    pub rejected: Vec<(u64, String)>,
}

/// Read a CSV following `schema`, rescale locations to `[0,1]` per dimension
/// by observed min/max and the response to `[0,1]` with `response_margin`
/// (fraction of the data range added on each side). Malformed rows are
/// rejected with their line numbers; missing columns or an empty file fail.
pub fn load_dataset_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    response_margin: f64,
) -> Result<LoadedDataset> {
    if !(response_margin.is_finite() && response_margin >= 0.0) {
        return Err(SlgpError::InvalidParameter(format!(
            "response margin must be nonnegative, got {response_margin}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| SlgpError::Data {
            line: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let loc_idx: Vec<usize> =
        schema.location_columns.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let resp_idx = col_index(&schema.response_column)?;
    let pass_idx: Vec<usize> =
        schema.passthrough_columns.iter().map(|c| col_index(c)).collect::<Result<_>>()?;

    let mut raw_locs: Vec<Vec<f64>> = Vec::new();
    let mut raw_resp: Vec<f64> = Vec::new();
    let mut passthrough: Vec<Vec<String>> = Vec::new();
    let mut rejected: Vec<(u64, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse = |idx: usize| -> std::result::Result<f64, String> {
            let cell = record.get(idx).ok_or_else(|| "short row".to_string())?;
            cell.parse::<f64>()
                .map_err(|_| format!("non-numeric value '{cell}' in column '{}'", &headers[idx]))
                .and_then(|v| {
                    if v.is_finite() { Ok(v) } else { Err(format!("non-finite value '{cell}'")) }
                })
        };
        let mut row = Vec::with_capacity(loc_idx.len());
        let mut ok = true;
        for &idx in &loc_idx {
            match parse(idx) {
                Ok(v) => row.push(v),
                Err(message) => {
                    rejected.push((line, message));
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        match parse(resp_idx) {
            Ok(v) => {
                raw_locs.push(row);
                raw_resp.push(v);
                passthrough
                    .push(pass_idx.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect());
            }
            Err(message) => rejected.push((line, message)),
        }
    }
    if raw_locs.is_empty() {
        return Err(SlgpError::Data { line: 0, message: "no parseable data rows".into() });
    }

    let d_d = loc_idx.len();
    let n = raw_locs.len();
    let mut loc_maps = Vec::with_capacity(d_d);
    for k in 0..d_d {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for row in &raw_locs {
            lo = lo.min(row[k]);
            hi = hi.max(row[k]);
        }
        if lo >= hi {
            return Err(SlgpError::Data {
                line: 0,
                message: format!(
                    "location column '{}' is constant; cannot rescale",
                    schema.location_columns[k]
                ),
            });
        }
        loc_maps.push(AffineMap { lo, hi });
    }
    let (t_min, t_max) = raw_resp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if t_min >= t_max {
        return Err(SlgpError::Data { line: 0, message: "response column is constant".into() });
    }
    let pad = response_margin * (t_max - t_min);
    let resp_map = AffineMap { lo: t_min - pad, hi: t_max + pad };

    let mut locations = Array2::zeros((n, d_d));
    for (i, row) in raw_locs.iter().enumerate() {
        for k in 0..d_d {
            locations[(i, k)] = loc_maps[k].to_model(row[k]);
        }
    }
    let mut responses = Array2::zeros((n, 1));
    for (i, &v) in raw_resp.iter().enumerate() {
        responses[(i, 0)] = resp_map.to_model(v);
    }
    let keys = if pass_idx.is_empty() {
        Vec::new()
    } else {
        passthrough.iter().map(|row| row[0].clone()).collect()
    };
    let dataset = Dataset {
        locations,
        responses,
        keys,
        passthrough_columns: schema.passthrough_columns.clone(),
        passthrough,
    };
    let domain = DomainSpec::unit(d_d, 1)?;
    Ok(LoadedDataset {
        dataset,
        rescale: RescaleRecord { location: loc_maps, response: resp_map },
        domain,
        rejected,
    })
}

/// Partition records by holdout key: records whose key is listed go to the
/// test set, the rest to the train set. Unknown keys are an error.
pub fn holdout_split(dataset: &Dataset, held_out_keys: &[String]) -> Result<(Dataset, Dataset)> {
    for key in held_out_keys {
        if !dataset.keys.iter().any(|k| k == key) {
            return Err(SlgpError::Data { line: 0, message: format!("unknown holdout key '{key}'") });
        }
    }
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (i, key) in dataset.keys.iter().enumerate() {
        if held_out_keys.contains(key) {
            test_rows.push(i);
        } else {
            train_rows.push(i);
        }
    }
    if dataset.keys.is_empty() {
        // no keys at all: everything trains
        train_rows = (0..dataset.len()).collect();
    }
    Ok((take_rows(dataset, &train_rows), take_rows(dataset, &test_rows)))
}

fn take_rows(dataset: &Dataset, rows: &[usize]) -> Dataset {
    let d_d = dataset.d_d();
    let d_t = dataset.d_t();
    let mut locations = Array2::zeros((rows.len(), d_d));
    let mut responses = Array2::zeros((rows.len(), d_t));
    for (out, &i) in rows.iter().enumerate() {
        locations.row_mut(out).assign(&dataset.locations.row(i));
        responses.row_mut(out).assign(&dataset.responses.row(i));
    }
    Dataset {
        locations,
        responses,
        keys: rows.iter().map(|&i| dataset.keys.get(i).cloned().unwrap_or_default()).collect(),
        passthrough_columns: dataset.passthrough_columns.clone(),
        passthrough: rows
            .iter()
            .map(|&i| dataset.passthrough.get(i).cloned().unwrap_or_default())
            .collect(),
    }
}
