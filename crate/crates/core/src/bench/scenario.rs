//! Built-in didactic datasets and CSV loaders.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Complete,
    Quasi,
    Quadratic,
    Endometrial,
    Maize,
    Custom,
}

impl ScenarioName {
    pub const BUILTIN: [ScenarioName; 3] = [
        ScenarioName::Complete,
        ScenarioName::Quasi,
        ScenarioName::Quadratic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Complete => "complete",
            ScenarioName::Quasi => "quasi",
            ScenarioName::Quadratic => "quadratic",
            ScenarioName::Endometrial => "endometrial",
            ScenarioName::Maize => "maize",
            ScenarioName::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "complete" => Ok(ScenarioName::Complete),
            "quasi" | "quasi-complete" => Ok(ScenarioName::Quasi),
            "quadratic" => Ok(ScenarioName::Quadratic),
            "endometrial" => Ok(ScenarioName::Endometrial),
            "maize" => Ok(ScenarioName::Maize),
            "custom" => Ok(ScenarioName::Custom),
            other => Err(Error::Precondition(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub dataset: Dataset,
    /// Human-readable design, e.g. `1 + z + z^2`.
    pub model_terms: String,
}

/// The three didactic scenarios. File-backed names return an error.
pub fn builtin_scenario(name: ScenarioName) -> Result<Scenario> {
    let (rows, y, names, terms): (Vec<Vec<f64>>, Vec<f64>, Vec<&str>, &str) = match name {
        ScenarioName::Complete | ScenarioName::Quasi => {
            let mut z = vec![10.0, 20.0, 30.0, 40.0, 60.0, 70.0, 80.0, 90.0];
            let mut y = vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
            if name == ScenarioName::Quasi {
                z.extend([50.0, 50.0]);
                y.extend([1.0, 0.0]);
            }
            (
                z.into_iter().map(|v| vec![v]).collect(),
                y,
                vec!["z"],
                "1 + z",
            )
        }
        ScenarioName::Quadratic => {
            let z: Vec<f64> = (1..=30).map(f64::from).collect();
            let y = z
                .iter()
                .map(|&v| if (13.0..=23.0).contains(&v) { 1.0 } else { 0.0 })
                .collect();
            (
                z.iter().map(|&v| vec![v, v * v]).collect(),
                y,
                vec!["z", "z2"],
                "1 + z + z^2",
            )
        }
        other => {
            return Err(Error::Precondition(format!(
                "scenario '{other}' is file-backed; load it with the matching CSV loader"
            )))
        }
    };
    Ok(Scenario {
        name,
        dataset: Dataset::from_rows(&rows, &y, &names, true)?,
        model_terms: terms.to_string(),
    })
}

/// A CSV file as named string columns.
struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                if field.is_empty() || field.eq_ignore_ascii_case("na") {
                    return Err(Error::Schema(format!(
                        "missing value in column '{}' at data row {}",
                        headers[j],
                        r + 1
                    )));
                }
                columns[j].push(field.to_string());
            }
        }
        Ok(Self { headers, columns })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Schema(format!(
                "column '{name}' not found (have {:?})",
                self.headers
            ))
        })
    }

    fn numeric(&self, j: usize) -> Result<Vec<f64>> {
        self.columns[j]
            .iter()
            .enumerate()
            .map(|(r, s)| {
                s.parse::<f64>().map_err(|_| {
                    Error::Schema(format!(
                        "non-numeric value '{s}' in column '{}' at data row {}",
                        self.headers[j],
                        r + 1
                    ))
                })
            })
            .collect()
    }

    fn nrows(&self) -> usize {
        self.columns.first().map(Vec::len).unwrap_or(0)
    }
}

fn binary(values: Vec<f64>, name: &str) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Schema(format!(
            "response '{name}' must be 0/1, found {v}"
        )));
    }
    Ok(values)
}

fn assemble(
    cols: Vec<Vec<f64>>,
    names: Vec<String>,
    y: Vec<f64>,
    intercept: bool,
) -> Result<Dataset> {
    let n = y.len();
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let y = DVector::from_vec(y);
    if intercept {
        Dataset::with_intercept(x, y, names)
    } else {
        Dataset::new(x, y, names)
    }
}

/// Loads a CSV with a header row: `response` is the 0/1 outcome and every
/// other column is a numeric predictor, in file order.
pub fn load_csv(path: impl AsRef<Path>, response: &str, intercept: bool) -> Result<Dataset> {
    let t = Table::read(path.as_ref())?;
    let r = t.index(response)?;
    let y = binary(t.numeric(r)?, response)?;
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for j in (0..t.headers.len()).filter(|&j| j != r) {
        cols.push(t.numeric(j)?);
        names.push(t.headers[j].clone());
    }
    if cols.is_empty() && !intercept {
        return Err(Error::Schema("no predictor columns".into()));
    }
    assemble(cols, names, y, intercept)
}

/// Reads predictor rows for prediction, ordered like `names` (which may start
/// with the intercept).
pub fn load_new_rows(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<DVector<f64>>> {
    let t = Table::read(path.as_ref())?;
    let predictors: Vec<&String> = names
        .iter()
        .filter(|n| *n != crate::dataset::INTERCEPT_NAME)
        .collect();
    let missing: Vec<&str> = predictors
        .iter()
        .filter(|n| !t.headers.contains(n))
        .map(|n| n.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "new-data file is missing columns: {}",
            missing.join(", ")
        )));
    }
    let mut cols = BTreeMap::new();
    for name in &predictors {
        cols.insert(name.as_str(), t.numeric(t.index(name)?)?);
    }
    Ok((0..t.nrows())
        .map(|i| {
            DVector::from_iterator(
                names.len(),
                names.iter().map(|n| {
                    if n == crate::dataset::INTERCEPT_NAME {
                        1.0
                    } else {
                        cols[n.as_str()][i]
                    }
                }),
            )
        })
        .collect())
}

/// Endometrial cancer study: outcome `HG`, predictors `NV`, `PI`, `EH`.
pub fn load_endometrial(path: impl AsRef<Path>) -> Result<Scenario> {
    let t = Table::read(path.as_ref())?;
    let y = binary(t.numeric(t.index("HG")?)?, "HG")?;
    let mut cols = Vec::new();
    for name in ["NV", "PI", "EH"] {
        cols.push(t.numeric(t.index(name)?)?);
    }
    if y.len() != 79 {
        return Err(Error::Schema(format!(
            "endometrial data must have 79 rows, found {}",
            y.len()
        )));
    }
    let hg = y.iter().filter(|&&v| v == 1.0).count();
    if hg != 30 {
        return Err(Error::Schema(format!(
            "endometrial data must have 30 rows with HG = 1, found {hg}"
        )));
    }
    let nv = binary(cols[0].clone(), "NV")?
        .iter()
        .filter(|&&v| v == 1.0)
        .count();
    if nv != 13 {
        return Err(Error::Schema(format!(
            "endometrial data must have 13 rows with NV = 1, found {nv}"
        )));
    }
    let names = vec!["NV".to_string(), "PI".to_string(), "EH".to_string()];
    Ok(Scenario {
        name: ScenarioName::Endometrial,
        dataset: assemble(cols, names, y, true)?,
        model_terms: "1 + NV + PI + EH".into(),
    })
}

pub const MAIZE_MARKERS: usize = 24;

/// Maize kernel color: 0/1 outcome `response`, a categorical `subpop`
/// column (dummy coded against its first level in sorted order) and 24
/// marker columns valued in [0, 1].
pub fn load_maize(path: impl AsRef<Path>, response: &str) -> Result<Scenario> {
    let t = Table::read(path.as_ref())?;
    let r = t.index(response)?;
    let s = t.index("subpop")?;
    let y = binary(t.numeric(r)?, response)?;

    let levels: Vec<&String> = {
        let mut l: Vec<&String> = t.columns[s].iter().collect();
        l.sort();
        l.dedup();
        l
    };
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for level in levels.iter().skip(1) {
        cols.push(
            t.columns[s]
                .iter()
                .map(|v| if v == *level { 1.0 } else { 0.0 })
                .collect(),
        );
        names.push(format!("subpop[{level}]"));
    }
    let markers: Vec<usize> = (0..t.headers.len()).filter(|&j| j != r && j != s).collect();
    if markers.len() != MAIZE_MARKERS {
        return Err(Error::Schema(format!(
            "maize data must have {MAIZE_MARKERS} marker columns, found {}",
            markers.len()
        )));
    }
    for j in markers {
        let v = t.numeric(j)?;
        if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Schema(format!(
                "marker '{}' must lie in [0, 1], found {bad}",
                t.headers[j]
            )));
        }
        cols.push(v);
        names.push(t.headers[j].clone());
    }
    Ok(Scenario {
        name: ScenarioName::Maize,
        dataset: assemble(cols, names, y, true)?,
        model_terms: "1 + subpop + 24 markers".into(),
    })
}

/// Any CSV following the loader contract.
pub fn load_custom(path: impl AsRef<Path>, response: &str, intercept: bool) -> Result<Scenario> {
    let dataset = load_csv(path, response, intercept)?;
    let terms = dataset.names().join(" + ");
    Ok(Scenario {
        name: ScenarioName::Custom,
        dataset,
        model_terms: terms,
    })
}
