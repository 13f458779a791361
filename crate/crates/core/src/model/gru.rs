//! Gated recurrent unit:
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 - z) ⊙ h + z ⊙ h~
//! ```
//!
//! Weights are stored fused for batched evaluation: `input` is
//! `[in, 3·hidden]` with column blocks (z, r, candidate), `gates` is
//! `[hidden, 2·hidden]` with blocks (z, r), `candidate` is `[hidden, hidden]`,
//! and `bias` is `[3·hidden]`.

use rand::Rng;

use crate::error::{dim_err, Result};
use crate::numcore::{sigmoid, Graph, Init, NodeId, ParamStore, Scalar, SlotId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GruParams {
    pub input: SlotId,
    pub gates: SlotId,
    pub candidate: SlotId,
    pub bias: SlotId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl GruParams {
    pub fn register<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        // Glorot bounds per gate block, not per fused matrix.
        let input_bound = (6.0 / (input_dim + hidden) as f64).sqrt();
        let hidden_bound = (6.0 / (2 * hidden) as f64).sqrt();
        Ok(Self {
            input: store.insert_init(
                format!("{prefix}.input"),
                &[input_dim, 3 * hidden],
                Init::Uniform(input_bound),
                rng,
            )?,
            gates: store.insert_init(
                format!("{prefix}.gates"),
                &[hidden, 2 * hidden],
                Init::Uniform(hidden_bound),
                rng,
            )?,
            candidate: store.insert_init(format!("{prefix}.candidate"), &[hidden, hidden], Init::Glorot, rng)?,
            bias: store.insert_init(format!("{prefix}.bias"), &[3 * hidden], Init::Zeros, rng)?,
            input_dim,
            hidden,
        })
    }

    pub fn slots(&self) -> [SlotId; 4] {
        [self.input, self.gates, self.candidate, self.bias]
    }

    /// Runs the cell over a sequence. `inputs` is a `[steps·rows, input_dim]`
    /// node in step-major order; the initial state is zero. Returns the final
    /// `[rows, hidden]` state.
    pub fn run<T: Scalar>(&self, g: &mut Graph<'_, T>, inputs: NodeId, steps: usize, rows: usize) -> Result<NodeId> {
        self.run_masked(g, inputs, steps, rows, None)
    }

    /// Like [`run`](Self::run), but a row whose `active[t·rows + row]` flag is
    /// false keeps its previous state at step `t`.
    pub fn run_masked<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        inputs: NodeId,
        steps: usize,
        rows: usize,
        active: Option<&[bool]>,
    ) -> Result<NodeId> {
        let h = self.hidden;
        if let Some(a) = active {
            if a.len() != steps * rows {
                return Err(dim_err!(
                    "mask has {} entries for {steps} steps of {rows} rows",
                    a.len()
                ));
            }
        }
        let (w_in, bias) = (g.param(self.input), g.param(self.bias));
        let (u_gates, u_cand) = (g.param(self.gates), g.param(self.candidate));
        let xw = g.matmul(inputs, w_in)?;
        let xw = g.add_row(xw, bias)?;
        let mut state = g.input(crate::numcore::Tensor::zeros(&[rows, h]))?;
        for t in 0..steps {
            let flags = active.map(|a| &a[t * rows..(t + 1) * rows]);
            if flags.is_some_and(|f| !f.contains(&true)) {
                continue;
            }
            let x_t = g.slice_rows(xw, t * rows, rows)?;
            let mask = flags.filter(|f| f.contains(&false)).map(<[bool]>::to_vec);
            state = g.gru_cell(x_t, state, u_gates, u_cand, mask)?;
        }
        Ok(state)
    }
}

/// One cell update on plain vectors, reading weights from `store`.
pub fn gru_step<T: Scalar>(x: &[T], h_prev: &[T], params: &GruParams, store: &ParamStore<T>) -> Result<Vec<T>> {
    let (n_in, h) = (params.input_dim, params.hidden);
    if x.len() != n_in || h_prev.len() != h {
        return Err(dim_err!(
            "gru_step expects input {n_in} and state {h}, got {} and {}",
            x.len(),
            h_prev.len()
        ));
    }
    let w = store.value(params.input).data();
    let u = store.value(params.gates).data();
    let uc = store.value(params.candidate).data();
    let b = store.value(params.bias).data();
    let proj = |col: usize| -> T {
        let mut acc = b[col];
        for (i, xi) in x.iter().enumerate() {
            acc += *xi * w[i * 3 * h + col];
        }
        acc
    };
    let mut z = vec![T::zero(); h];
    let mut r = vec![T::zero(); h];
    for j in 0..h {
        let (mut az, mut ar) = (proj(j), proj(h + j));
        for (i, hi) in h_prev.iter().enumerate() {
            az += *hi * u[i * 2 * h + j];
            ar += *hi * u[i * 2 * h + h + j];
        }
        z[j] = sigmoid(az);
        r[j] = sigmoid(ar);
    }
    let mut out = vec![T::zero(); h];
    for j in 0..h {
        let mut ac = proj(2 * h + j);
        for i in 0..h {
            ac += r[i] * h_prev[i] * uc[i * h + j];
        }
        let cand = ac.tanh();
        out[j] = (T::one() - z[j]) * h_prev[j] + z[j] * cand;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cell(input: usize, hidden: usize, seed: u64) -> (ParamStore<f64>, GruParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let p = GruParams::register(&mut store, "g", input, hidden, &mut rng).unwrap();
        (store, p)
    }

    fn zero_all(store: &mut ParamStore<f64>) {
        for s in store.slots_mut() {
            s.value.fill(0.0);
        }
    }

    #[test]
    fn zero_network_zero_state() {
        let (mut store, p) = cell(3, 3, 0);
        zero_all(&mut store);
        let out = gru_step(&[1.0, -2.0, 0.5], &[0.0; 3], &p, &store).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn zero_network_halves_state() {
        let (mut store, p) = cell(3, 3, 0);
        zero_all(&mut store);
        let v = [0.4, -1.0, 2.0];
        let out = gru_step(&[1.0, 1.0, 1.0], &v, &p, &store).unwrap();
        for (o, v) in out.iter().zip(v) {
            assert!((o - 0.5 * v).abs() < 1e-15);
        }
    }

    /// Gate-by-gate evaluation with separately sliced weight matrices.
    fn oracle(x: &[f64], hp: &[f64], store: &ParamStore<f64>, p: &GruParams) -> Vec<f64> {
        let h = p.hidden;
        let w = store.value(p.input);
        let u = store.value(p.gates);
        let uc = store.value(p.candidate);
        let b = store.value(p.bias).data();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let wx = |block: usize, j: usize| -> f64 {
            (0..x.len()).map(|i| w.row(i)[block * h + j] * x[i]).sum::<f64>() + b[block * h + j]
        };
        let z: Vec<f64> = (0..h)
            .map(|j| sig(wx(0, j) + (0..h).map(|i| u.row(i)[j] * hp[i]).sum::<f64>()))
            .collect();
        let r: Vec<f64> = (0..h)
            .map(|j| sig(wx(1, j) + (0..h).map(|i| u.row(i)[h + j] * hp[i]).sum::<f64>()))
            .collect();
        (0..h)
            .map(|j| {
                let cand = (wx(2, j) + (0..h).map(|i| uc.row(i)[j] * r[i] * hp[i]).sum::<f64>()).tanh();
                (1.0 - z[j]) * hp[j] + z[j] * cand
            })
            .collect()
    }

    #[test]
    fn random_cell_matches_hand_evaluation() {
        let (mut store, p) = cell(3, 3, 11);
        // non-zero biases so every term is exercised
        let b = store.slot_mut(p.bias);
        for (i, v) in b.value.data_mut().iter_mut().enumerate() {
            *v = 0.1 * i as f64 - 0.4;
        }
        let x = [0.3, -0.7, 1.1];
        let hp = [0.2, 0.5, -0.9];
        let got = gru_step(&x, &hp, &p, &store).unwrap();
        let want = oracle(&x, &hp, &store, &p);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-6);
        }
    }

    #[test]
    fn graph_cell_matches_vector_cell() {
        let (store, p) = cell(2, 4, 5);
        let seq = [[0.5, -1.0], [0.25, 0.75], [-0.3, 0.1]];
        let mut hv = vec![0.0; 4];
        for x in &seq {
            hv = gru_step(x, &hv, &p, &store).unwrap();
        }
        let mut g = Graph::new(&store);
        let inputs = g
            .input(Tensor::matrix(3, 2, seq.iter().flatten().copied().collect()).unwrap())
            .unwrap();
        let out = p.run(&mut g, inputs, 3, 1).unwrap();
        for (a, b) in g.value(out).data().iter().zip(&hv) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (store, p) = cell(3, 2, 0);
        assert!(gru_step(&[1.0, 2.0], &[0.0, 0.0], &p, &store).is_err());
    }
}
