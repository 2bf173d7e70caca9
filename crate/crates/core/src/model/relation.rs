use std::collections::{BTreeMap, HashSet};

use rustc_hash::FxHashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::ModelError;
use crate::value::{Value, ValueKind};

/// Reserved CSV column carrying per-tuple weights.
pub const WEIGHT_COLUMN: &str = "__weight";

/// A named set of fixed-arity tuples, stored row-major.
///
/// Tuple data sits behind an `Arc`, so copies made for self-join removal share
/// storage.
#[derive(Clone, Debug)]
pub struct Relation {
    name: String,
    columns: Vec<String>,
    len: usize,
    data: Arc<[Value]>,
    weights: Option<Arc<[f64]>>,
}

impl Relation {
    /// Builds a relation, checking arity and per-column kinds and dropping
    /// duplicate tuples (the first occurrence, and its weight, wins).
    pub fn new(
        name: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let arity = columns.len();
        if let Some(w) = &weights {
            if w.len() != rows.len() {
                return Err(ModelError::WeightCount {
                    relation: name,
                    expected: rows.len(),
                    found: w.len(),
                });
            }
        }
        let mut kinds: Vec<Option<ValueKind>> = vec![None; arity];
        let mut seen: FxHashSet<&[Value]> = FxHashSet::with_capacity_and_hasher(rows.len(), Default::default());
        let mut keep = Vec::with_capacity(rows.len());
        for (index, row) in rows.iter().enumerate() {
            if row.len() != arity {
                return Err(ModelError::TupleArity {
                    relation: name,
                    index,
                    expected: arity,
                    found: row.len(),
                });
            }
            for (col, v) in row.iter().enumerate() {
                match kinds[col] {
                    None => kinds[col] = Some(v.kind()),
                    Some(k) if k != v.kind() => {
                        return Err(ModelError::MixedColumn {
                            relation: name,
                            column: columns[col].clone(),
                            first: k,
                            second: v.kind(),
                        })
                    }
                    _ => {}
                }
            }
            if seen.insert(row.as_slice()) {
                keep.push(index);
            }
        }
        let len = keep.len();
        let data: Arc<[Value]> = keep
            .iter()
            .flat_map(|&i| rows[i].iter().cloned())
            .collect();
        let weights = weights.map(|w| keep.iter().map(|&i| w[i]).collect());
        Ok(Relation {
            name,
            columns,
            len,
            data,
            weights,
        })
    }

    /// Convenience constructor with generated column names `c0, c1, ...`.
    pub fn from_rows(
        name: impl Into<String>,
        arity: usize,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self, ModelError> {
        let columns = (0..arity).map(|i| format!("c{i}")).collect();
        Relation::new(name, columns, rows, None)
    }

    /// Integer-valued rows; handy for fixtures.
    pub fn from_ints<const N: usize>(name: &str, rows: &[[i64; N]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Value::Int(v)).collect())
            .collect();
        Relation::from_rows(name, N, rows).expect("integer rows are uniform")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tuple(&self, i: usize) -> &[Value] {
        let a = self.arity();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn tuples(&self) -> impl ExactSizeIterator<Item = &[Value]> + '_ {
        (0..self.len).map(move |i| self.tuple(i))
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Tuple weight, defaulting to 0 when the relation carries none.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(0.0, |w| w[i])
    }

    /// Kind of a column, or `None` when the relation is empty.
    pub fn column_kind(&self, col: usize) -> Option<ValueKind> {
        (self.len > 0).then(|| self.tuple(0)[col].kind())
    }

    /// Same tuples under a different name.
    pub fn renamed(&self, name: impl Into<String>) -> Relation {
        Relation {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Keeps the tuples accepted by `keep`, projected onto `cols`.
    ///
    /// Callers must ensure the projection is injective on the kept tuples
    /// (true for selection normalization, where dropped columns are constant
    /// or duplicate a kept column).
    pub(crate) fn filter_project(
        &self,
        name: impl Into<String>,
        cols: &[usize],
        mut keep: impl FnMut(&[Value]) -> bool,
    ) -> Relation {
        let mut data = Vec::new();
        let mut weights = self.weights.as_ref().map(|_| Vec::new());
        let mut len = 0;
        for i in 0..self.len {
            let t = self.tuple(i);
            if keep(t) {
                data.extend(cols.iter().map(|&c| t[c].clone()));
                if let Some(w) = weights.as_mut() {
                    w.push(self.weight(i));
                }
                len += 1;
            }
        }
        Relation {
            name: name.into(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            len,
            data: data.into(),
            weights: weights.map(Into::into),
        }
    }

    /// Loads a relation from CSV: the header row names the columns and an
    /// optional `__weight` column supplies tuple weights.
    pub fn load_csv(name: &str, path: &Path) -> Result<Relation, ModelError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ModelError::Load(format!("{}: {e}", path.display())))?;
        Relation::parse_csv(name, &text)
    }

    pub fn parse_csv(name: &str, text: &str) -> Result<Relation, ModelError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let load_err = |e: csv::Error| ModelError::Load(format!("relation `{name}`: {e}"));
        let header: Vec<String> = reader
            .headers()
            .map_err(load_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let weight_col = header.iter().position(|h| h == WEIGHT_COLUMN);
        let records: Vec<csv::StringRecord> =
            reader.records().collect::<Result<_, _>>().map_err(load_err)?;
        for (i, r) in records.iter().enumerate() {
            if r.len() != header.len() {
                return Err(ModelError::TupleArity {
                    relation: name.to_string(),
                    index: i,
                    expected: header.len(),
                    found: r.len(),
                });
            }
        }
        let data_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != weight_col).collect();
        if data_cols.is_empty() {
            return Err(ModelError::Load(format!("relation `{name}` has no data columns")));
        }
        let kinds: Vec<ValueKind> = data_cols
            .iter()
            .map(|&c| Value::infer_kind(records.iter().map(|r| &r[c])))
            .collect();
        let mut rows = Vec::with_capacity(records.len());
        for r in &records {
            rows.push(
                data_cols
                    .iter()
                    .zip(&kinds)
                    .map(|(&c, &k)| Value::parse_as(&r[c], k).expect("kind was inferred from data"))
                    .collect(),
            );
        }
        let weights = match weight_col {
            Some(c) => Some(
                records
                    .iter()
                    .map(|r| {
                        r[c].parse::<f64>().map_err(|_| {
                            ModelError::Load(format!("relation `{name}`: bad weight `{}`", &r[c]))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let columns = data_cols.iter().map(|&c| header[c].clone()).collect();
        Relation::new(name, columns, rows, weights)
    }
}

/// Named relations. Iteration order is by name.
#[derive(Clone, Debug, Default)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_relations(relations: impl IntoIterator<Item = Relation>) -> Self {
        let mut db = Database::new();
        for r in relations {
            db.insert(r);
        }
        db
    }

    /// Inserts (or replaces) a relation under its own name.
    pub fn insert(&mut self, relation: Relation) {
        self.relations.insert(relation.name().to_string(), relation);
    }

    pub fn remove(&mut self, name: &str) -> Option<Relation> {
        self.relations.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// Total number of tuples across relations.
    pub fn size(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    /// Largest relation cardinality.
    pub fn max_cardinality(&self) -> usize {
        self.relations.values().map(Relation::len).max().unwrap_or(0)
    }

    /// A name not yet taken, derived from `base`.
    pub(crate) fn fresh_name(&self, base: &str, taken: &HashSet<String>) -> String {
        if !self.contains(base) && !taken.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !self.contains(n) && !taken.contains(n))
            .expect("unbounded name supply")
    }
}
