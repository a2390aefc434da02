//! Total assignment of one class label per object.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `object_id,class`")]
    BadHeader,
    #[error("object `{0}` labeled more than once")]
    DuplicateObject(String),
    #[error("class `{0}` is not among the declared classes")]
    UnknownClass(String),
    #[error("class `{0}` declared twice")]
    DuplicateClass(String),
    #[error("labeling has no objects")]
    Empty,
    #[error("{objects} objects but {labels} labels")]
    LengthMismatch { objects: usize, labels: usize },
}

/// Class label per object. Classes keep a declaration order, which fixes
/// the order of report rows and cost terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    object_ids: Vec<String>,
    classes: Vec<String>,
    assignment: Vec<usize>,
}

impl Labeling {
    /// `assignment[i]` indexes into `classes` for `object_ids[i]`.
    pub fn new(
        object_ids: Vec<String>,
        classes: Vec<String>,
        assignment: Vec<usize>,
    ) -> Result<Self, LabelingError> {
        if object_ids.is_empty() {
            return Err(LabelingError::Empty);
        }
        if object_ids.len() != assignment.len() {
            return Err(LabelingError::LengthMismatch {
                objects: object_ids.len(),
                labels: assignment.len(),
            });
        }
        let mut seen = HashMap::new();
        for c in &classes {
            if seen.insert(c.as_str(), ()).is_some() {
                return Err(LabelingError::DuplicateClass(c.clone()));
            }
        }
        let mut seen = HashMap::new();
        for o in &object_ids {
            if seen.insert(o.as_str(), ()).is_some() {
                return Err(LabelingError::DuplicateObject(o.clone()));
            }
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= classes.len()) {
            return Err(LabelingError::UnknownClass(format!("#{bad}")));
        }
        Ok(Self {
            object_ids,
            classes,
            assignment,
        })
    }

    /// Builds a labeling from `(object, class)` pairs. Objects are sorted by
    /// id. Without an explicit class list, classes are taken in sorted order.
    pub fn from_pairs<I, O, C>(
        pairs: I,
        classes: Option<Vec<String>>,
    ) -> Result<Self, LabelingError>
    where
        I: IntoIterator<Item = (O, C)>,
        O: Into<String>,
        C: Into<String>,
    {
        let mut pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(o, c)| (o.into(), c.into()))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(LabelingError::DuplicateObject(w[0].0.clone()));
        }
        let classes = match classes {
            Some(c) => c,
            None => {
                let mut c: Vec<String> = pairs.iter().map(|p| p.1.clone()).collect();
                c.sort();
                c.dedup();
                c
            }
        };
        let index: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let assignment = pairs
            .iter()
            .map(|(_, c)| {
                index
                    .get(c.as_str())
                    .copied()
                    .ok_or_else(|| LabelingError::UnknownClass(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let object_ids = pairs.into_iter().map(|p| p.0).collect();
        Self::new(object_ids, classes, assignment)
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Class index per object, aligned with [`Self::object_ids`].
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.object_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object_ids.is_empty()
    }

    pub fn get(&self, object_id: &str) -> Option<&str> {
        self.object_ids
            .iter()
            .position(|o| o == object_id)
            .map(|i| self.classes[self.assignment[i]].as_str())
    }

    /// `(object_id, class)` pairs in object order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.object_ids
            .iter()
            .zip(&self.assignment)
            .map(|(o, &a)| (o.as_str(), self.classes[a].as_str()))
    }

    /// Member count of each declared class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.classes.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// Object id to class index lookup.
    pub fn index_by_object(&self) -> HashMap<&str, usize> {
        self.object_ids
            .iter()
            .zip(&self.assignment)
            .map(|(o, &a)| (o.as_str(), a))
            .collect()
    }

    /// Same partition under different class names, given old → new.
    pub fn rename_classes(&self, rename: impl Fn(&str) -> String) -> Result<Self, LabelingError> {
        let classes = self.classes.iter().map(|c| rename(c)).collect();
        Self::new(self.object_ids.clone(), classes, self.assignment.clone())
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, LabelingError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?;
        if header.len() != 2 || &header[0] != "object_id" || &header[1] != "class" {
            return Err(LabelingError::BadHeader);
        }
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            pairs.push((rec[0].to_string(), rec[1].to_string()));
        }
        Self::from_pairs(pairs, None)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, LabelingError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| LabelingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(io::BufReader::new(file))
    }

    /// Export as `object_id,class`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "object_id,class")?;
        for (o, c) in self.iter() {
            writeln!(w, "{o},{c}")?;
        }
        Ok(())
    }
}
