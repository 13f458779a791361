//! Tape-based reverse-mode differentiation over [`Tensor`]s.
//!
//! A [`Graph`] borrows a [`ParamStore`] immutably while the forward pass is
//! recorded; [`Graph::backward`] then returns a [`Gradients`] value that the
//! owner of the store accumulates. Nodes that depend only on constants or on
//! frozen slots are never differentiated.

use rand::Rng;

use crate::error::{config_err, dim_err, Error, Result};

use super::params::{Gradients, ParamStore, SlotId};
use super::{Scalar, Tensor};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(SlotId),
    Gather { table: SlotId, ids: Vec<usize> },
    MatMul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    Sigmoid(NodeId),
    Tanh(NodeId),
    SliceCols { src: NodeId, start: usize },
    SliceRows { src: NodeId, start: usize },
    GatherRows { src: NodeId, rows: Vec<usize> },
    MulConst { src: NodeId, mask: Tensor<T> },
    Sum(NodeId),
    Bce { probs: NodeId, labels: Vec<T> },
    GruCell(Box<GruCache<T>>),
}

/// Inputs and saved activations of one fused GRU step.
#[derive(Debug)]
struct GruCache<T> {
    x: NodeId,
    h: NodeId,
    u_gates: NodeId,
    u_cand: NodeId,
    /// Per-row update flags; `None` means every row updates.
    active: Option<Vec<bool>>,
    z: Vec<T>,
    r: Vec<T>,
    c: Vec<T>,
    rh: Vec<T>,
}

#[derive(Debug)]
struct Node<T> {
    op: Op<T>,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor<T>>,
    requires_grad: bool,
}

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

pub struct Graph<'s, T> {
    store: &'s ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'s, T: Scalar> Graph<'s, T> {
    pub fn new(store: &'s ParamStore<T>) -> Self {
        Self {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'s ParamStore<T> {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(slot)) => self.store.value(*slot),
            _ => unreachable!("non-parameter node without value"),
        }
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>, requires_grad: bool) -> Result<NodeId> {
        if !value.all_finite() {
            return Err(Error::Numeric(format!("{}", op_name(&op))));
        }
        self.nodes.push(Node {
            op,
            value: Some(value),
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn rg(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Constant input; never differentiated.
    pub fn input(&mut self, value: Tensor<T>) -> Result<NodeId> {
        self.push(Op::Input, value, false)
    }

    pub fn param(&mut self, slot: SlotId) -> NodeId {
        let requires_grad = !self.store.is_frozen(slot);
        self.nodes.push(Node {
            op: Op::Param(slot),
            value: None,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Rows `ids` of the table held in `table`, as a `[ids.len(), d]` matrix.
    pub fn gather(&mut self, table: SlotId, ids: Vec<usize>) -> Result<NodeId> {
        let t = self.store.value(table);
        let (rows, d) = t.dims2();
        if ids.is_empty() {
            return Err(dim_err!("empty gather"));
        }
        let mut out = Vec::with_capacity(ids.len() * d);
        for &i in &ids {
            if i >= rows {
                return Err(Error::Data(format!(
                    "token id {i} out of range for table {} with {rows} rows",
                    self.store.slot(table).name
                )));
            }
            out.extend_from_slice(t.row(i));
        }
        let value = Tensor::matrix(ids.len(), d, out)?;
        let requires_grad = !self.store.is_frozen(table);
        self.push(Op::Gather { table, ids }, value, requires_grad)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        self.push(Op::MatMul(a, b), value, rg)
    }

    /// `a[m, n] + bias[n]` broadcast over rows.
    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(bias));
        let (_, n) = va.dims2();
        if vb.len() != n {
            return Err(dim_err!("add_row {:?} + {:?}", va.shape(), vb.shape()));
        }
        let mut out = va.clone();
        for row in out.data_mut().chunks_mut(n) {
            for (x, b) in row.iter_mut().zip(vb.data()) {
                *x += *b;
            }
        }
        let rg = self.rg(&[a, bias]);
        self.push(Op::AddRow(a, bias), out, rg)
    }

    fn zip_with(&self, a: NodeId, b: NodeId, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.same_shape(vb) {
            return Err(dim_err!("elementwise {:?} vs {:?}", va.shape(), vb.shape()));
        }
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| f(*x, *y)).collect();
        Tensor::new(va.shape(), data)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_with(a, b, |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        self.push(Op::Add(a, b), v, rg)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_with(a, b, |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        self.push(Op::Sub(a, b), v, rg)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_with(a, b, |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        self.push(Op::Mul(a, b), v, rg)
    }

    pub fn scale(&mut self, a: NodeId, factor: T) -> Result<NodeId> {
        let v = self.value(a).map(|x| x * factor);
        let rg = self.rg(&[a]);
        self.push(Op::Scale(a, factor), v, rg)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(sigmoid);
        let rg = self.rg(&[a]);
        self.push(Op::Sigmoid(a), v, rg)
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(T::tanh);
        let rg = self.rg(&[a]);
        self.push(Op::Tanh(a), v, rg)
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&mut self, src: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.value(src);
        let (m, n) = v.dims2();
        if start + len > n || len == 0 {
            return Err(dim_err!("slice_cols {start}+{len} of {n}"));
        }
        let mut out = Vec::with_capacity(m * len);
        for row in v.data().chunks(n) {
            out.extend_from_slice(&row[start..start + len]);
        }
        let value = Tensor::matrix(m, len, out)?;
        let rg = self.rg(&[src]);
        self.push(Op::SliceCols { src, start }, value, rg)
    }

    /// Rows `start..start + len` of a matrix.
    pub fn slice_rows(&mut self, src: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.value(src);
        let (m, n) = v.dims2();
        if start + len > m || len == 0 {
            return Err(dim_err!("slice_rows {start}+{len} of {m}"));
        }
        let value = Tensor::matrix(len, n, v.data()[start * n..(start + len) * n].to_vec())?;
        let rg = self.rg(&[src]);
        self.push(Op::SliceRows { src, start }, value, rg)
    }

    /// Selects (possibly repeated) rows of a matrix.
    pub fn gather_rows(&mut self, src: NodeId, rows: Vec<usize>) -> Result<NodeId> {
        let v = self.value(src);
        let (m, n) = v.dims2();
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in &rows {
            if r >= m {
                return Err(dim_err!("gather_rows index {r} of {m}"));
            }
            out.extend_from_slice(v.row(r));
        }
        let value = Tensor::matrix(rows.len(), n, out)?;
        let rg = self.rg(&[src]);
        self.push(Op::GatherRows { src, rows }, value, rg)
    }

    /// Elementwise product with a constant tensor (dropout masks).
    pub fn mul_const(&mut self, src: NodeId, mask: Tensor<T>) -> Result<NodeId> {
        let v = self.value(src);
        if !v.same_shape(&mask) {
            return Err(dim_err!("mask {:?} vs {:?}", mask.shape(), v.shape()));
        }
        let data = v.data().iter().zip(mask.data()).map(|(x, m)| *x * *m).collect();
        let value = Tensor::new(v.shape(), data)?;
        let rg = self.rg(&[src]);
        self.push(Op::MulConst { src, mask }, value, rg)
    }

    /// Inverted dropout; the identity when `training` is false or `rate` is zero.
    pub fn dropout<R: Rng + ?Sized>(&mut self, src: NodeId, rate: f64, training: bool, rng: &mut R) -> Result<NodeId> {
        match dropout_mask(self.value(src).shape(), rate, training, rng)? {
            Some(mask) => self.mul_const(src, mask),
            None => Ok(src),
        }
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(Op::Sum(a), v, rg)
    }

    /// Summed binary cross-entropy of `probs` (one per row) against `labels`,
    /// with probabilities clamped to `[1e-7, 1 - 1e-7]`.
    pub fn bce(&mut self, probs: NodeId, labels: Vec<T>) -> Result<NodeId> {
        let p = self.value(probs);
        if p.len() != labels.len() {
            return Err(dim_err!("bce: {} probabilities, {} labels", p.len(), labels.len()));
        }
        let loss = p.data().iter().zip(&labels).map(|(&p, &y)| bce_term(p, y)).sum();
        let rg = self.rg(&[probs]);
        self.push(Op::Bce { probs, labels }, Tensor::scalar(loss), rg)
    }

    /// One fused GRU step. `x` holds the input projections `[rows, 3h]`
    /// (update, reset and candidate blocks, bias included), `h` the state
    /// `[rows, h]`, `u_gates` the `[h, 2h]` recurrent gate weights and
    /// `u_cand` the `[h, h]` candidate weights. Returns
    /// `h + z ⊙ (c - h)`; rows whose `active` flag is false keep `h`.
    pub fn gru_cell(
        &mut self,
        x: NodeId,
        h: NodeId,
        u_gates: NodeId,
        u_cand: NodeId,
        active: Option<Vec<bool>>,
    ) -> Result<NodeId> {
        let (vx, vh, ug, uc) = (self.value(x), self.value(h), self.value(u_gates), self.value(u_cand));
        let (rows, hid) = vh.dims2();
        if vx.dims2() != (rows, 3 * hid) || ug.dims2() != (hid, 2 * hid) || uc.dims2() != (hid, hid) {
            return Err(dim_err!(
                "gru_cell: x {:?}, h {:?}, gates {:?}, candidate {:?}",
                vx.shape(),
                vh.shape(),
                ug.shape(),
                uc.shape()
            ));
        }
        if active.as_ref().is_some_and(|a| a.len() != rows) {
            return Err(dim_err!("gru_cell: mask length differs from {rows} rows"));
        }
        let (xd, hd) = (vx.data(), vh.data());
        let mut hu = vec![T::zero(); rows * 2 * hid];
        T::gemm(
            rows,
            hid,
            2 * hid,
            T::one(),
            hd,
            hid as isize,
            1,
            ug.data(),
            2 * hid as isize,
            1,
            T::zero(),
            &mut hu,
        );
        let n = rows * hid;
        let (mut z, mut r, mut rh) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        for i in 0..rows {
            for j in 0..hid {
                let k = i * hid + j;
                z[k] = sigmoid(xd[i * 3 * hid + j] + hu[i * 2 * hid + j]);
                r[k] = sigmoid(xd[i * 3 * hid + hid + j] + hu[i * 2 * hid + hid + j]);
                rh[k] = r[k] * hd[k];
            }
        }
        let mut c = vec![T::zero(); n];
        T::gemm(
            rows,
            hid,
            hid,
            T::one(),
            &rh,
            hid as isize,
            1,
            uc.data(),
            hid as isize,
            1,
            T::zero(),
            &mut c,
        );
        let mut out = hd.to_vec();
        for i in 0..rows {
            let on = active.as_ref().map_or(true, |a| a[i]);
            for j in 0..hid {
                let k = i * hid + j;
                c[k] = (c[k] + xd[i * 3 * hid + 2 * hid + j]).tanh();
                if on {
                    out[k] += z[k] * (c[k] - hd[k]);
                }
            }
        }
        let value = Tensor::matrix(rows, hid, out)?;
        let rg = self.rg(&[x, h, u_gates, u_cand]);
        let cache = GruCache {
            x,
            h,
            u_gates,
            u_cand,
            active,
            z,
            r,
            c,
            rh,
        };
        self.push(Op::GruCell(Box::new(cache)), value, rg)
    }

    /// Reverse pass from a scalar `loss` node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(dim_err!(
                "backward needs a scalar loss, got {:?}",
                self.value(loss).shape()
            ));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut slot_grads: Vec<Option<Tensor<T>>> = (0..self.store.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Input => {}
                Op::Param(slot) => accumulate(&mut slot_grads[slot.0], g),
                Op::Gather { table, ids } => {
                    let entry =
                        slot_grads[table.0].get_or_insert_with(|| Tensor::zeros(self.store.value(*table).shape()));
                    let (_, d) = g.dims2();
                    for (r, &id) in ids.iter().enumerate() {
                        let src = &g.data()[r * d..(r + 1) * d];
                        for (acc, v) in entry.row_mut(id).iter_mut().zip(src) {
                            *acc += *v;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let (m, k) = va.dims2();
                    let (_, n) = vb.dims2();
                    if self.requires_grad(*a) {
                        // dA = dC · B^T
                        let mut out = vec![T::zero(); m * k];
                        T::gemm(
                            m,
                            n,
                            k,
                            T::one(),
                            g.data(),
                            n as isize,
                            1,
                            vb.data(),
                            1,
                            n as isize,
                            T::zero(),
                            &mut out,
                        );
                        accumulate(&mut grads[a.0], Tensor::new(va.shape(), out)?);
                    }
                    if self.requires_grad(*b) {
                        // dB = A^T · dC
                        let mut out = vec![T::zero(); k * n];
                        T::gemm(
                            k,
                            m,
                            n,
                            T::one(),
                            va.data(),
                            1,
                            k as isize,
                            g.data(),
                            n as isize,
                            1,
                            T::zero(),
                            &mut out,
                        );
                        accumulate(&mut grads[b.0], Tensor::new(vb.shape(), out)?);
                    }
                }
                Op::AddRow(a, bias) => {
                    if self.requires_grad(*bias) {
                        let vb = self.value(*bias);
                        let n = vb.len();
                        let mut out = vec![T::zero(); n];
                        for row in g.data().chunks(n) {
                            for (acc, v) in out.iter_mut().zip(row) {
                                *acc += *v;
                            }
                        }
                        accumulate(&mut grads[bias.0], Tensor::new(vb.shape(), out)?);
                    }
                    if self.requires_grad(*a) {
                        accumulate(&mut grads[a.0], g);
                    }
                }
                Op::Add(a, b) => {
                    if self.requires_grad(*b) {
                        accumulate(&mut grads[b.0], g.clone());
                    }
                    if self.requires_grad(*a) {
                        accumulate(&mut grads[a.0], g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.requires_grad(*b) {
                        accumulate(&mut grads[b.0], g.map(|v| -v));
                    }
                    if self.requires_grad(*a) {
                        accumulate(&mut grads[a.0], g);
                    }
                }
                Op::Mul(a, b) => {
                    if self.requires_grad(*a) {
                        let d = hadamard(&g, self.value(*b));
                        accumulate(&mut grads[a.0], d);
                    }
                    if self.requires_grad(*b) {
                        let d = hadamard(&g, self.value(*a));
                        accumulate(&mut grads[b.0], d);
                    }
                }
                Op::Scale(a, f) => {
                    let f = *f;
                    accumulate(&mut grads[a.0], g.map(|v| v * f));
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap();
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(g, y)| *g * *y * (T::one() - *y))
                        .collect();
                    accumulate(&mut grads[a.0], Tensor::new(g.shape(), data)?);
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap();
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(g, y)| *g * (T::one() - *y * *y))
                        .collect();
                    accumulate(&mut grads[a.0], Tensor::new(g.shape(), data)?);
                }
                Op::SliceCols { src, start } => {
                    let (m, n) = self.value(*src).dims2();
                    let (_, len) = g.dims2();
                    let entry = grads[src.0].get_or_insert_with(|| Tensor::zeros(&[m, n]));
                    for (dst, row) in entry.data_mut().chunks_mut(n).zip(g.data().chunks(len)) {
                        for (acc, v) in dst[*start..*start + len].iter_mut().zip(row) {
                            *acc += *v;
                        }
                    }
                }
                Op::SliceRows { src, start } => {
                    let (m, n) = self.value(*src).dims2();
                    let entry = grads[src.0].get_or_insert_with(|| Tensor::zeros(&[m, n]));
                    for (acc, v) in entry.data_mut()[start * n..].iter_mut().zip(g.data()) {
                        *acc += *v;
                    }
                }
                Op::GatherRows { src, rows } => {
                    let (m, n) = self.value(*src).dims2();
                    let entry = grads[src.0].get_or_insert_with(|| Tensor::zeros(&[m, n]));
                    for (r, &target) in rows.iter().enumerate() {
                        let row = &g.data()[r * n..(r + 1) * n];
                        for (acc, v) in entry.row_mut(target).iter_mut().zip(row) {
                            *acc += *v;
                        }
                    }
                }
                Op::MulConst { src, mask } => {
                    accumulate(&mut grads[src.0], hadamard(&g, mask));
                }
                Op::Sum(a) => {
                    let s = g.item();
                    accumulate(&mut grads[a.0], Tensor::full(self.value(*a).shape(), s));
                }
                Op::Bce { probs, labels } => {
                    let s = g.item();
                    let p = self.value(*probs);
                    let data = p.data().iter().zip(labels).map(|(&p, &y)| s * bce_grad(p, y)).collect();
                    accumulate(&mut grads[probs.0], Tensor::new(p.shape(), data)?);
                }
                Op::GruCell(cache) => self.gru_cell_backward(cache, &g, &mut grads)?,
            }
        }
        for (slot, g) in slot_grads.iter().enumerate() {
            if let Some(g) = g {
                g.check_finite(&format!("gradient of {}", self.store.slots()[slot].name))?;
            }
        }
        Ok(Gradients { per_slot: slot_grads })
    }

    fn gru_cell_backward(&self, k: &GruCache<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let vh = self.value(k.h);
        let (rows, hid) = vh.dims2();
        let (hd, gd) = (vh.data(), g.data());
        let n = rows * hid;
        // pre-activation gradients, laid out like x: [update | reset | candidate]
        let mut dx = vec![T::zero(); rows * 3 * hid];
        let mut dh = vec![T::zero(); n];
        for i in 0..rows {
            let on = k.active.as_ref().map_or(true, |a| a[i]);
            for j in 0..hid {
                let e = i * hid + j;
                if !on {
                    dh[e] = gd[e];
                    continue;
                }
                let (z, c) = (k.z[e], k.c[e]);
                dh[e] = gd[e] * (T::one() - z);
                dx[i * 3 * hid + j] = gd[e] * (c - hd[e]) * z * (T::one() - z);
                dx[i * 3 * hid + 2 * hid + j] = gd[e] * z * (T::one() - c * c);
            }
        }
        let uc = self.value(k.u_cand);
        let ug = self.value(k.u_gates);
        let ld = 3 * hid as isize;
        if self.requires_grad(k.u_cand) {
            // dUc = (r ⊙ h)^T · dc
            let mut d = vec![T::zero(); hid * hid];
            T::gemm(
                hid,
                rows,
                hid,
                T::one(),
                &k.rh,
                1,
                hid as isize,
                &dx[2 * hid..],
                ld,
                1,
                T::zero(),
                &mut d,
            );
            accumulate(&mut grads[k.u_cand.0], Tensor::new(uc.shape(), d)?);
        }
        // d(r ⊙ h) = dc · Uc^T
        let mut drh = vec![T::zero(); n];
        T::gemm(
            rows,
            hid,
            hid,
            T::one(),
            &dx[2 * hid..],
            ld,
            1,
            uc.data(),
            1,
            hid as isize,
            T::zero(),
            &mut drh,
        );
        for i in 0..rows {
            for j in 0..hid {
                let e = i * hid + j;
                let r = k.r[e];
                dx[i * 3 * hid + hid + j] = drh[e] * hd[e] * r * (T::one() - r);
                dh[e] += drh[e] * r;
            }
        }
        if self.requires_grad(k.u_gates) {
            // dUg = h^T · [dz | dr]
            let mut d = vec![T::zero(); hid * 2 * hid];
            T::gemm(
                hid,
                rows,
                2 * hid,
                T::one(),
                hd,
                1,
                hid as isize,
                &dx,
                ld,
                1,
                T::zero(),
                &mut d,
            );
            accumulate(&mut grads[k.u_gates.0], Tensor::new(ug.shape(), d)?);
        }
        if self.requires_grad(k.h) {
            // dh += [dz | dr] · Ug^T
            T::gemm(
                rows,
                2 * hid,
                hid,
                T::one(),
                &dx,
                ld,
                1,
                ug.data(),
                1,
                2 * hid as isize,
                T::one(),
                &mut dh,
            );
            accumulate(&mut grads[k.h.0], Tensor::new(vh.shape(), dh)?);
        }
        if self.requires_grad(k.x) {
            accumulate(&mut grads[k.x.0], Tensor::new(self.value(k.x).shape(), dx)?);
        }
        Ok(())
    }
}

fn op_name<T>(op: &Op<T>) -> &'static str {
    match op {
        Op::Input => "input",
        Op::Param(_) => "param",
        Op::Gather { .. } => "gather",
        Op::MatMul(..) => "matmul",
        Op::AddRow(..) => "add_row",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::Sigmoid(_) => "sigmoid",
        Op::Tanh(_) => "tanh",
        Op::SliceCols { .. } => "slice_cols",
        Op::SliceRows { .. } => "slice_rows",
        Op::GatherRows { .. } => "gather_rows",
        Op::MulConst { .. } => "mul_const",
        Op::Sum(_) => "sum",
        Op::Bce { .. } => "bce",
        Op::GruCell(_) => "gru_cell",
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        Some(acc) => {
            for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += *v;
            }
        }
        None => *slot = Some(g),
    }
}

fn hadamard<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| *x * *y).collect();
    Tensor::new(a.shape(), data).expect("hadamard of equal shapes")
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// `-(y ln p + (1 - y) ln(1 - p))` with clamped `p`.
pub fn bce_term<T: Scalar>(p: T, y: T) -> T {
    let p = clamp_prob(p);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

fn bce_grad<T: Scalar>(p: T, y: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    if p <= lo || p >= T::one() - lo {
        return T::zero();
    }
    -y / p + (T::one() - y) / (T::one() - p)
}

/// Inverted-dropout mask for `shape`, or `None` when dropout is a no-op.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<Option<Tensor<T>>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(config_err!("dropout rate must be in [0, 1), got {rate}"));
    }
    if !training || rate == 0.0 {
        return Ok(None);
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    Ok(Some(Tensor::new(shape, data)?))
}

/// Inverted dropout on a plain tensor.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(x: &Tensor<T>, rate: f64, training: bool, rng: &mut R) -> Result<Tensor<T>> {
    Ok(match dropout_mask::<T, R>(x.shape(), rate, training, rng)? {
        Some(mask) => Tensor::new(x.shape(), hadamard(x, &mask).into_data())?,
        None => x.clone(),
    })
}
