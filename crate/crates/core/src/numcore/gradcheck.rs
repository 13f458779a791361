use crate::error::Result;

use super::{Graph, NodeId, ParamStore};

/// Worst relative error observed for one parameter slot.
#[derive(Clone, Debug)]
pub struct SlotCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub elements: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub slots: Vec<SlotCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.slots.iter().all(|s| s.max_rel_error < self.tolerance)
    }

    pub fn worst(&self) -> f64 {
        self.slots.iter().map(|s| s.max_rel_error).fold(0.0, f64::max)
    }
}

pub const FD_STEP: f64 = 1e-4;

/// Gradients smaller than this are compared in absolute terms; central
/// differences of an O(1) loss carry roundoff near `1e-12`.
pub const GRAD_FLOOR: f64 = 1e-7;

/// `|a - n| / max(|a|, |n|, GRAD_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Compares analytic gradients against central finite differences for every
/// non-frozen slot. `build` must be deterministic (no dropout).
pub fn gradient_check<F>(store: &mut ParamStore<f64>, build: F, tolerance: f64) -> Result<GradCheckReport>
where
    F: for<'s> Fn(&mut Graph<'s, f64>) -> Result<NodeId>,
{
    let grads = {
        let mut g = Graph::new(store);
        let loss = build(&mut g)?;
        g.backward(loss)?
    };
    let eval = |store: &ParamStore<f64>| -> Result<f64> {
        let mut g = Graph::new(store);
        let loss = build(&mut g)?;
        Ok(g.value(loss).item())
    };
    let mut slots = Vec::new();
    for id in store.ids().collect::<Vec<_>>() {
        if store.is_frozen(id) {
            continue;
        }
        let analytic = grads.dense(id, store);
        let n = analytic.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let orig = store.value(id).data()[i];
            store.slot_mut(id).value.data_mut()[i] = orig + FD_STEP;
            let plus = eval(store)?;
            store.slot_mut(id).value.data_mut()[i] = orig - FD_STEP;
            let minus = eval(store)?;
            store.slot_mut(id).value.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(analytic.data()[i], numeric));
        }
        slots.push(SlotCheck {
            name: store.slot(id).name.clone(),
            max_rel_error: worst,
            elements: n,
        });
    }
    Ok(GradCheckReport { slots, tolerance })
}
