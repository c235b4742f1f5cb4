use std::collections::HashMap;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Handle into a [`ParameterStore`]; stable for the lifetime of the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable arrays in registration order.
///
/// Registration order is the iteration, checkpoint and optimizer order, so two
/// stores built by the same code line up entry for entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TensorError::DuplicateParameter(name));
        }
        let id = self.values.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| TensorError::UnknownParameter(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn by_name(&self, name: &str) -> Result<&Tensor> {
        Ok(self.get(self.id(name)?))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Copies every value of `source` into `self`. Names and shapes must agree
    /// entry for entry; on mismatch nothing is modified.
    pub fn copy_from(&mut self, source: &ParameterStore) -> Result<()> {
        self.check_layout(source)?;
        for (dst, src) in self.values.iter_mut().zip(&source.values) {
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    pub fn check_layout(&self, other: &ParameterStore) -> Result<()> {
        if self.names.len() != other.names.len() {
            return Err(TensorError::Invalid {
                op: "parameter layout",
                msg: format!("{} entries vs {}", self.names.len(), other.names.len()),
            });
        }
        for (i, name) in self.names.iter().enumerate() {
            if *name != other.names[i] {
                return Err(TensorError::Invalid {
                    op: "parameter layout",
                    msg: format!("entry {i}: `{name}` vs `{}`", other.names[i]),
                });
            }
            if self.values[i].shape() != other.values[i].shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "parameter layout",
                    lhs: self.values[i].shape().to_vec(),
                    rhs: other.values[i].shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Returns a store with the same names and shapes and all values zero.
    pub fn zeros_like(&self) -> ParameterStore {
        let mut out = ParameterStore::new();
        for (_, name, v) in self.iter() {
            out.insert(name, Tensor::zeros(v.shape().to_vec()))
                .expect("names are unique");
        }
        out
    }

    pub fn into_entries(self) -> Vec<(String, Tensor)> {
        self.names.into_iter().zip(self.values).collect()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, Tensor)>) -> Result<Self> {
        let mut store = ParameterStore::new();
        for (name, value) in entries {
            store.insert(name, value)?;
        }
        Ok(store)
    }
}

/// Per-parameter gradients aligned with a store's ids.
#[derive(Clone, Debug)]
pub struct ParamGrads {
    grads: Vec<Tensor>,
}

impl ParamGrads {
    pub fn zeros(store: &ParameterStore) -> Self {
        ParamGrads {
            grads: store.values.iter().map(|v| Tensor::zeros(v.shape().to_vec())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &Tensor) {
        self.grads[id.0].add_assign(g);
    }

    pub fn add(&mut self, other: &ParamGrads) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(Tensor::norm_sq).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParameterStore {
        let mut s = ParameterStore::new();
        s.insert("w", Tensor::mat(1, 2, vec![1.0, 2.0])).unwrap();
        s.insert("b", Tensor::scalar(0.5)).unwrap();
        s
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = store();
        assert!(matches!(
            s.insert("w", Tensor::scalar(0.0)),
            Err(TensorError::DuplicateParameter(_))
        ));
    }

    #[test]
    fn copy_from_is_a_value_copy() {
        let mut online = store();
        let mut target = online.zeros_like();
        target.copy_from(&online).unwrap();
        assert_eq!(target, online);
        let w = online.id("w").unwrap();
        online.get_mut(w).data_mut()[0] = 9.0;
        assert_eq!(target.by_name("w").unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn copy_from_rejects_layout_mismatch() {
        let mut a = store();
        let mut b = ParameterStore::new();
        b.insert("w", Tensor::mat(2, 1, vec![1.0, 2.0])).unwrap();
        b.insert("b", Tensor::scalar(0.5)).unwrap();
        assert!(a.copy_from(&b).is_err());
        let mut c = ParameterStore::new();
        c.insert("v", Tensor::mat(1, 2, vec![1.0, 2.0])).unwrap();
        c.insert("b", Tensor::scalar(0.5)).unwrap();
        assert!(a.copy_from(&c).is_err());
        assert_eq!(a, store());
    }
}
