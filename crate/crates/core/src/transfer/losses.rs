//! Loss graphs: labelled cross-entropy, representation projection and the
//! hard label-projection baseline.

use rand::Rng;

use crate::error::{config_err, Result};
use crate::model::{DropoutMasks, Model, ModelView};
use crate::numcore::{bce_term, Graph, NodeId, Scalar};
use crate::textpipe::{EncodedReview, Grid, ParallelParagraph};

/// Summed binary cross-entropy of the positive-class probability against the
/// gold labels.
pub fn labeled_loss_node<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<'_, T>,
    view: &ModelView<'_, T>,
    batch: &[&EncodedReview],
    training: bool,
    rng: &mut R,
) -> Result<NodeId> {
    let grids: Vec<&Grid> = batch.iter().map(|r| &r.grid).collect();
    let masks = DropoutMasks::sample(view.model().config(), batch.len(), training, rng)?;
    let repr = view.encode_node(g, &grids, &masks)?;
    let probs = view.probability_node(g, repr)?;
    let labels = batch.iter().map(|r| T::from_u8(r.label).unwrap()).collect();
    g.bce(probs, labels)
}

/// `Σ_j (1/d_T) Σ_i (a_ji - b_ji)²` over the rows of two `[B, d_T]` nodes.
pub fn representation_mse_node<T: Scalar>(g: &mut Graph<'_, T>, a: NodeId, b: NodeId) -> Result<NodeId> {
    let (_, width) = g.value(a).dims2();
    let diff = g.sub(a, b)?;
    let sq = g.mul(diff, diff)?;
    let total = g.sum(sq)?;
    g.scale(total, T::one() / T::from_usize(width).unwrap())
}

/// Per-pair squared error of two representations, divided by their width.
pub fn representation_mse<T: Scalar>(a: &[T], b: &[T]) -> T {
    let sum: T = a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
    sum / T::from_usize(a.len()).unwrap()
}

fn views<'m, T: Scalar>(
    model: &'m Model<T>,
    source: &str,
    target: &str,
) -> Result<(ModelView<'m, T>, ModelView<'m, T>)> {
    let s = model
        .view(source)
        .map_err(|_| config_err!("projection needs a {source:?} table"))?;
    let t = model
        .view(target)
        .map_err(|_| config_err!("projection needs a {target:?} table"))?;
    Ok((s, t))
}

/// Squared-error distance between source-side and target-side task
/// representations of each paragraph. Both branches share the encoder and
/// the dropout masks.
pub fn projection_loss_node<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<'_, T>,
    model: &Model<T>,
    source: &str,
    target: &str,
    batch: &[&ParallelParagraph],
    training: bool,
    rng: &mut R,
) -> Result<NodeId> {
    let (sv, tv) = views(model, source, target)?;
    let masks = DropoutMasks::sample(model.config(), batch.len(), training, rng)?;
    let src: Vec<&Grid> = batch.iter().map(|p| &p.source).collect();
    let tgt: Vec<&Grid> = batch.iter().map(|p| &p.target).collect();
    let rs = sv.encode_node(g, &src, &masks)?;
    let rt = tv.encode_node(g, &tgt, &masks)?;
    representation_mse_node(g, rs, rt)
}

/// Hard pseudo-label from a source-side probability; ties go to 0.
pub fn pseudo_label<T: Scalar>(p: T) -> u8 {
    u8::from(p > T::lit(0.5))
}

/// Cross-entropy of target-side predictions against the source model's hard
/// labels. The source branch runs in inference mode and carries no gradient.
pub fn label_projection_loss_node<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<'_, T>,
    model: &Model<T>,
    source: &str,
    target: &str,
    batch: &[&ParallelParagraph],
    training: bool,
    rng: &mut R,
) -> Result<NodeId> {
    let (sv, tv) = views(model, source, target)?;
    let src: Vec<Grid> = batch.iter().map(|p| p.source.clone()).collect();
    let labels: Vec<T> = sv
        .predict_proba(&src)?
        .into_iter()
        .map(|p| T::from_u8(pseudo_label(p)).unwrap())
        .collect();
    let masks = DropoutMasks::sample(model.config(), batch.len(), training, rng)?;
    let tgt: Vec<&Grid> = batch.iter().map(|p| &p.target).collect();
    let rt = tv.encode_node(g, &tgt, &masks)?;
    let probs = tv.probability_node(g, rt)?;
    g.bce(probs, labels)
}

/// Inference-mode labelled loss of a batch.
pub fn labeled_loss<T: Scalar>(view: &ModelView<'_, T>, batch: &[&EncodedReview]) -> Result<T> {
    let mut g = Graph::new(view.model().store());
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let node = labeled_loss_node(&mut g, view, batch, false, &mut rng)?;
    Ok(g.value(node).item())
}

/// Inference-mode projection loss of a batch.
pub fn projection_loss<T: Scalar>(
    model: &Model<T>,
    source: &str,
    target: &str,
    batch: &[&ParallelParagraph],
) -> Result<T> {
    let mut g = Graph::new(model.store());
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let node = projection_loss_node(&mut g, model, source, target, batch, false, &mut rng)?;
    Ok(g.value(node).item())
}

/// Inference-mode label-projection loss of a batch.
pub fn label_projection_loss<T: Scalar>(
    model: &Model<T>,
    source: &str,
    target: &str,
    batch: &[&ParallelParagraph],
) -> Result<T> {
    let mut g = Graph::new(model.store());
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let node = label_projection_loss_node(&mut g, model, source, target, batch, false, &mut rng)?;
    Ok(g.value(node).item())
}

/// Binary cross-entropy of a target probability against the hard label of a
/// source probability, on plain numbers.
pub fn label_projection_term<T: Scalar>(source_p: T, target_p: T) -> T {
    bce_term(target_p, T::from_u8(pseudo_label(source_p)).unwrap())
}
