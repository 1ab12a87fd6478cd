//! Node-keyed dense vectors and their text file format.
//!
//! ```text
//! <count> <dim>
//! <node id> <f1> ... <f_dim>
//! ```
//!
//! Floats are written in shortest round-trip decimal form.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::kg::NodeId;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("vector for {id} has dimension {found}, expected {expected}")]
    Dimension { id: String, expected: usize, found: usize },
    #[error("duplicate vector for {0}")]
    Duplicate(NodeId),
    #[error("non-finite value in vector for {0}")]
    NonFinite(NodeId),
    #[error("{path}: header declares {declared} vectors but file holds {found}")]
    Count {
        path: String,
        declared: usize,
        found: usize,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeVectors<F> {
    dim: usize,
    ids: Vec<NodeId>,
    lookup: HashMap<NodeId, usize>,
    data: Vec<F>,
}

impl<F: Scalar> NodeVectors<F> {
    pub fn new(dim: usize) -> Self {
        NodeVectors {
            dim,
            ids: Vec::new(),
            lookup: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, ids: Vec<NodeId>, data: Vec<F>) -> Result<Self, VectorError> {
        assert_eq!(ids.len() * dim, data.len(), "row data does not match id count");
        let mut out = NodeVectors::new(dim);
        out.data = data;
        for (i, id) in ids.iter().enumerate() {
            if out.lookup.insert(id.clone(), i).is_some() {
                return Err(VectorError::Duplicate(id.clone()));
            }
        }
        out.ids = ids;
        Ok(out)
    }

    pub fn push(&mut self, id: NodeId, v: &[F]) -> Result<(), VectorError> {
        if v.len() != self.dim {
            return Err(VectorError::Dimension {
                id: id.to_string(),
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(VectorError::NonFinite(id));
        }
        if self.lookup.contains_key(&id) {
            return Err(VectorError::Duplicate(id));
        }
        self.lookup.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &NodeId) -> Option<&[F]> {
        self.lookup.get(id).map(|&i| self.row(i))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.lookup.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &[F])> + '_ {
        self.ids.iter().enumerate().map(|(i, id)| (id, self.row(i)))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (id, v) in self.iter() {
            write!(w, "{id}")?;
            for x in v {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), VectorError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_text(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, VectorError> {
        let name = path.display().to_string();
        let err = |line: usize, msg: String| VectorError::Parse {
            path: name.clone(),
            line,
            msg,
        };
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file".into()))??;
        let head: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match head.as_slice() {
            [c, d] => (
                c.parse::<usize>().map_err(|e| err(1, e.to_string()))?,
                d.parse::<usize>().map_err(|e| err(1, e.to_string()))?,
            ),
            _ => return Err(err(1, "expected \"<count> <dim>\"".into())),
        };
        let mut out = NodeVectors::new(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let id: NodeId = fields
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e: crate::kg::GraphError| err(i + 2, e.to_string()))?;
            let values = fields
                .map(|f| f.parse::<F>().map_err(|_| err(i + 2, format!("bad float {f:?}"))))
                .collect::<Result<Vec<F>, _>>()?;
            out.push(id, &values)?;
        }
        if out.len() != count {
            return Err(VectorError::Count {
                path: name,
                declared: count,
                found: out.len(),
            });
        }
        Ok(out)
    }
}

/// Arithmetic mean of the given rows, or `None` when there are none.
pub fn mean<'a, F: Scalar>(dim: usize, rows: impl IntoIterator<Item = &'a [F]>) -> Option<Vec<F>> {
    let mut acc = vec![F::zero(); dim];
    let mut n = 0usize;
    for row in rows {
        debug_assert_eq!(row.len(), dim);
        for (a, &x) in acc.iter_mut().zip(row) {
            *a += x;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let denom = F::of(n as f64);
    for a in &mut acc {
        *a /= denom;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(i: usize) -> NodeId {
        NodeId::article(&i.to_string())
    }

    #[test]
    fn rejects_bad_rows() {
        let mut v = NodeVectors::<f64>::new(2);
        v.push(id(1), &[1.0, 2.0]).unwrap();
        assert!(matches!(v.push(id(1), &[0.0, 0.0]), Err(VectorError::Duplicate(_))));
        assert!(matches!(v.push(id(2), &[0.0]), Err(VectorError::Dimension { .. })));
        assert!(matches!(
            v.push(id(3), &[f64::NAN, 0.0]),
            Err(VectorError::NonFinite(_))
        ));
    }

    #[test]
    fn loader_rejects_count_and_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        std::fs::write(&p, "2 2\narticle/pmid/1 0.5 1\n").unwrap();
        assert!(matches!(NodeVectors::<f64>::read(&p), Err(VectorError::Count { .. })));
        std::fs::write(&p, "1 3\narticle/pmid/1 0.5 1\n").unwrap();
        assert!(matches!(
            NodeVectors::<f64>::read(&p),
            Err(VectorError::Dimension { .. })
        ));
        std::fs::write(&p, "1 2\narticle/pmid/1 0.5 1\n").unwrap();
        assert_eq!(NodeVectors::<f64>::read(&p).unwrap().get(&id(1)).unwrap(), &[0.5, 1.0]);
    }

    #[test]
    fn shortest_float_form() {
        let mut v = NodeVectors::<f32>::new(3);
        v.push(id(7), &[0.1, -2.5, 1e-8]).unwrap();
        let mut buf = Vec::new();
        v.write_text(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1 3\narticle/pmid/7 0.1 -2.5 0.00000001\n"
        );
    }

    #[test]
    fn mean_of_nothing() {
        assert_eq!(mean::<f64>(3, std::iter::empty()), None);
    }

    proptest! {
        #[test]
        fn file_round_trip_is_exact(rows in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 4), 1..20)) {
            let mut v = NodeVectors::<f64>::new(4);
            for (i, r) in rows.iter().enumerate() {
                v.push(id(i), r).unwrap();
            }
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("v.txt");
            v.write(&p).unwrap();
            prop_assert_eq!(NodeVectors::<f64>::read(&p).unwrap(), v);
        }
    }
}
