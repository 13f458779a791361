use rand::Rng;

use crate::error::{config_err, dim_err, Result};

use super::{Scalar, Tensor};

/// Index of a parameter slot inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId(pub(crate) usize);

impl SlotId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor together with its gradient and optimizer state.
#[derive(Clone, Debug)]
pub struct ParamSlot<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub rms_cache: Tensor<T>,
    pub frozen: bool,
}

impl<T: Scalar> ParamSlot<T> {
    fn new(name: String, value: Tensor<T>) -> Self {
        let shape = value.shape().to_vec();
        Self {
            name,
            grad: Tensor::zeros(&shape),
            rms_cache: Tensor::zeros(&shape),
            value,
            frozen: false,
        }
    }
}

/// Owns every parameter slot of a model.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    slots: Vec<ParamSlot<T>>,
}

/// Weight initialisation schemes.
#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` for a `[fan_in, fan_out]` matrix.
    Glorot,
    Uniform(f64),
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { slots: Vec::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<SlotId> {
        let name = name.into();
        if self.find(&name).is_some() {
            return Err(config_err!("duplicate parameter name {name}"));
        }
        self.slots.push(ParamSlot::new(name, value));
        Ok(SlotId(self.slots.len() - 1))
    }

    pub fn insert_init<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        init: Init,
        rng: &mut R,
    ) -> Result<SlotId> {
        let len: usize = shape.iter().product();
        let bound = match init {
            Init::Zeros => 0.0,
            Init::Glorot => {
                let (fan_in, fan_out) = match shape {
                    [a, b] => (*a, *b),
                    [a] => (*a, *a),
                    _ => return Err(dim_err!("glorot init needs a matrix, got {shape:?}")),
                };
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            }
            Init::Uniform(b) => b,
        };
        let data = (0..len)
            .map(|_| {
                if bound == 0.0 {
                    T::zero()
                } else {
                    T::lit(rng.gen_range(-bound..bound))
                }
            })
            .collect();
        self.insert(name, Tensor::new(shape, data)?)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SlotId> {
        (0..self.slots.len()).map(SlotId)
    }

    pub fn find(&self, name: &str) -> Option<SlotId> {
        self.slots.iter().position(|s| s.name == name).map(SlotId)
    }

    pub fn slot(&self, id: SlotId) -> &ParamSlot<T> {
        &self.slots[id.0]
    }

    pub fn slot_mut(&mut self, id: SlotId) -> &mut ParamSlot<T> {
        &mut self.slots[id.0]
    }

    pub fn value(&self, id: SlotId) -> &Tensor<T> {
        &self.slots[id.0].value
    }

    pub fn slots(&self) -> &[ParamSlot<T>] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [ParamSlot<T>] {
        &mut self.slots
    }

    pub fn is_frozen(&self, id: SlotId) -> bool {
        self.slots[id.0].frozen
    }

    pub fn set_frozen(&mut self, id: SlotId, frozen: bool) {
        self.slots[id.0].frozen = frozen;
    }

    pub fn freeze_all(&mut self, frozen: bool) {
        self.slots.iter_mut().for_each(|s| s.frozen = frozen);
    }

    pub fn zero_grad(&mut self) {
        self.slots.iter_mut().for_each(|s| s.grad.fill(T::zero()));
    }

    /// Adds `scale * g` into the slot gradients. Frozen slots are skipped.
    pub fn accumulate(&mut self, grads: &Gradients<T>, scale: T) -> Result<()> {
        for (slot, g) in self.slots.iter_mut().zip(&grads.per_slot) {
            let Some(g) = g else { continue };
            if slot.frozen {
                continue;
            }
            if !g.same_shape(&slot.grad) {
                return Err(dim_err!("gradient for {} has shape {:?}", slot.name, g.shape()));
            }
            for (acc, v) in slot.grad.data_mut().iter_mut().zip(g.data()) {
                *acc += scale * *v;
            }
        }
        Ok(())
    }

    /// Same parameters in another scalar type; optimizer state is reset.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            slots: self
                .slots
                .iter()
                .map(|s| {
                    let mut out = ParamSlot::new(s.name.clone(), s.value.cast());
                    out.frozen = s.frozen;
                    out
                })
                .collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.slots.iter().map(|s| s.value.len()).sum()
    }
}

/// Gradients produced by one backward pass, indexed by slot.
///
/// `None` means the slot was unreachable from the loss or frozen.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub(crate) per_slot: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: SlotId) -> Option<&Tensor<T>> {
        self.per_slot.get(id.0).and_then(Option::as_ref)
    }

    /// Gradient for `id`, materialising zeros for unreachable or frozen slots.
    pub fn dense(&self, id: SlotId, store: &ParamStore<T>) -> Tensor<T> {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(store.value(id).shape()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bound_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::<f32>::new();
        let id = store.insert_init("w", &[10, 14], Init::Glorot, &mut rng).unwrap();
        let bound = (6.0f32 / 24.0).sqrt();
        assert!(store.value(id).data().iter().all(|v| v.abs() <= bound));
        let b = store.insert_init("b", &[14], Init::Zeros, &mut rng).unwrap();
        assert!(store.value(b).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::<f32>::new();
        store.insert("a", Tensor::zeros(&[1])).unwrap();
        assert!(store.insert("a", Tensor::zeros(&[1])).is_err());
    }
}
