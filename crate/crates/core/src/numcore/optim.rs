use crate::error::{config_err, Error, Result};

use super::{ParamStore, Scalar};

/// RMSProp hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            lr: 0.001,
            decay: 0.9,
            eps: 1e-8,
        }
    }
}

impl RmsProp {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(config_err!("learning rate must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(config_err!("rmsprop decay must be in [0, 1), got {}", self.decay));
        }
        if !(self.eps > 0.0) {
            return Err(config_err!("rmsprop eps must be positive, got {}", self.eps));
        }
        Ok(())
    }

    /// Applies one update from the accumulated slot gradients. Frozen slots are untouched.
    pub fn step<T: Scalar>(&self, store: &mut ParamStore<T>) -> Result<()> {
        self.validate()?;
        let (lr, decay, eps) = (T::lit(self.lr), T::lit(self.decay), T::lit(self.eps));
        let one = T::one();
        for slot in store.slots_mut().iter_mut().filter(|s| !s.frozen) {
            let values = slot.value.data_mut();
            let cache = slot.rms_cache.data_mut();
            for ((v, c), g) in values.iter_mut().zip(cache.iter_mut()).zip(slot.grad.data()) {
                let g = *g;
                *c = decay * *c + (one - decay) * g * g;
                *v -= lr * g / (c.sqrt() + eps);
            }
            if !slot.value.all_finite() {
                return Err(Error::Numeric(format!("rmsprop update of {}", slot.name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Tensor;

    fn store(value: f64, grad: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        let id = s.insert("w", Tensor::from_vec(vec![value])).unwrap();
        s.slot_mut(id).grad = Tensor::from_vec(vec![grad]);
        s
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut s = store(0.25, 0.0);
        RmsProp::default().step(&mut s).unwrap();
        assert_eq!(s.slots()[0].value.item(), 0.25);
    }

    #[test]
    fn frozen_slot_bit_identical() {
        let mut s = store(0.3, 5.0);
        s.freeze_all(true);
        let before = s.slots()[0].value.item().to_bits();
        RmsProp::default().step(&mut s).unwrap();
        assert_eq!(s.slots()[0].value.item().to_bits(), before);
        assert_eq!(s.slots()[0].rms_cache.item(), 0.0);
    }

    #[test]
    fn single_update_by_hand() {
        let mut s = store(1.0, 1.0);
        RmsProp::default().step(&mut s).unwrap();
        let slot = &s.slots()[0];
        assert!((slot.rms_cache.item() - 0.1).abs() < 1e-15);
        let want = 1.0 - 0.001 * 1.0 / (0.1f64.sqrt() + 1e-8);
        assert!((slot.value.item() - want).abs() < 1e-15);
    }

    #[test]
    fn non_positive_lr_rejected() {
        let mut s = store(1.0, 1.0);
        let opt = RmsProp {
            lr: 0.0,
            ..Default::default()
        };
        assert!(matches!(opt.step(&mut s), Err(Error::Config(_))));
    }
}
