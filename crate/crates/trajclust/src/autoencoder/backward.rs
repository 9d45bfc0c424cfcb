//! Exact gradients of the reconstruction loss.
//!
//! The backward pass re-runs the forward computation while caching gate
//! activations, then applies the chain rule through the output head, the
//! decoder MLP, the bottleneck, and backwards through time across all
//! encoder steps. No approximation is involved; the results are the exact
//! partial derivatives of [`reconstruction_loss`].

use super::{
    lstm_step_cached, seq_loss, AutoencoderModel, GateCache, GradientSet, LstmGate, LstmState,
};
use crate::error::{Error, Result};
use crate::parallel;

/// Loss and exact gradients of [`super::reconstruction_loss`] over a batch.
///
/// The loss returned here is computed through the same operations in the
/// same order as `reconstruction_loss`, so the two agree bit-for-bit.
/// Per-sequence work fans out to parallel workers; the reduction over
/// sequences runs in index order, so results do not depend on scheduling.
pub fn backward(model: &AutoencoderModel, batch: &[&[f64]]) -> Result<(f64, GradientSet)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    model.validate()?;
    for seq in batch {
        super::check_sequence(model, seq)?;
    }

    let per_seq = parallel::map_slice(batch, |seq| backward_seq(model, seq));

    let mut total = 0.0;
    let mut grads = GradientSet::zeros_like(model);
    for (loss, g) in &per_seq {
        total += loss;
        grads.add_assign(g);
    }
    grads.scale(1.0 / batch.len() as f64);
    Ok((total / batch.len() as f64, grads))
}

/// Like [`backward`], but the reduction over sequences may run in any
/// order, so results can differ from `backward` in the last bits between
/// runs. Used by training when the determinism flag is off.
#[cfg(feature = "parallel")]
pub(crate) fn backward_any_order(
    model: &AutoencoderModel,
    batch: &[&[f64]],
) -> Result<(f64, GradientSet)> {
    use rayon::prelude::*;

    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    model.validate()?;
    for seq in batch {
        super::check_sequence(model, seq)?;
    }

    let (total, grads) = batch
        .par_iter()
        .map(|seq| backward_seq(model, seq))
        .reduce(
            || (0.0, GradientSet::zeros_like(model)),
            |(la, mut ga), (lb, gb)| {
                ga.add_assign(&gb);
                (la + lb, ga)
            },
        );
    let mut grads = grads;
    grads.scale(1.0 / batch.len() as f64);
    Ok((total / batch.len() as f64, grads))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn backward_any_order(
    model: &AutoencoderModel,
    batch: &[&[f64]],
) -> Result<(f64, GradientSet)> {
    backward(model, batch)
}

/// Loss and gradients for a single sequence.
fn backward_seq(model: &AutoencoderModel, seq: &[f64]) -> (f64, GradientSet) {
    let t_len = model.dims.seq_len;
    let p = model.dims.input_size;
    let hidden = model.dims.hidden;

    // Forward with caches. states[t] is the state entering step t.
    let mut states: Vec<LstmState> = Vec::with_capacity(t_len + 1);
    states.push(LstmState::zero(hidden));
    let mut gates: Vec<GateCache> = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x_t = &seq[t * p..(t + 1) * p];
        let (next, cache) = lstm_step_cached(&model.encoder, x_t, &states[t]);
        states.push(next);
        gates.push(cache);
    }
    let embedding = model.bottleneck.apply(&states[t_len].h);

    // zs[0] = embedding, zs[l] = output of decoder layer l.
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(model.decoder.len() + 1);
    zs.push(embedding);
    for layer in &model.decoder {
        let mut z = layer.linear.apply(zs.last().unwrap());
        for v in &mut z {
            *v = layer.activation.apply(*v);
        }
        zs.push(z);
    }
    let pred = model.output_head.apply(zs.last().unwrap());
    let loss = seq_loss(&pred, seq);

    let mut grads = GradientSet::zeros_like(model);

    // d loss / d pred for the per-sequence mean squared error.
    let n = pred.len() as f64;
    let dpred: Vec<f64> = pred.iter().zip(seq).map(|(p, y)| 2.0 * (p - y) / n).collect();

    // Output head.
    grads.output_head.w.add_outer(&dpred, zs.last().unwrap());
    for (b, d) in grads.output_head.b.iter_mut().zip(&dpred) {
        *b += d;
    }
    let mut dz = model.output_head.w.matvec_transpose(&dpred);

    // Decoder layers, last to first.
    for l in (0..model.decoder.len()).rev() {
        let layer = &model.decoder[l];
        let da: Vec<f64> = dz
            .iter()
            .zip(&zs[l + 1])
            .map(|(dz, &y)| dz * layer.activation.derivative_from_output(y))
            .collect();
        grads.decoder[l].w.add_outer(&da, &zs[l]);
        for (b, d) in grads.decoder[l].b.iter_mut().zip(&da) {
            *b += d;
        }
        dz = layer.linear.w.matvec_transpose(&da);
    }

    // Bottleneck: dz now holds d loss / d embedding.
    grads.bottleneck.w.add_outer(&dz, &states[t_len].h);
    for (b, d) in grads.bottleneck.b.iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dh = model.bottleneck.w.matvec_transpose(&dz);

    // Backpropagation through time.
    let mut dc = vec![0.0; hidden];
    let mut da_f = vec![0.0; hidden];
    let mut da_i = vec![0.0; hidden];
    let mut da_o = vec![0.0; hidden];
    let mut da_g = vec![0.0; hidden];
    for t in (0..t_len).rev() {
        let cache = &gates[t];
        let prev = &states[t];
        let x_t = &seq[t * p..(t + 1) * p];

        for j in 0..hidden {
            let (f, i, o, g, tc) = (cache.f[j], cache.i[j], cache.o[j], cache.g[j], cache.tanh_c[j]);
            let d_o = dh[j] * tc;
            da_o[j] = d_o * o * (1.0 - o);
            let d_c = dc[j] + dh[j] * o * (1.0 - tc * tc);
            da_f[j] = d_c * prev.c[j] * f * (1.0 - f);
            da_i[j] = d_c * g * i * (1.0 - i);
            da_g[j] = d_c * i * (1.0 - g * g);
            dc[j] = d_c * f;
        }

        accumulate_gate(&mut grads.encoder.forget, &da_f, x_t, &prev.h);
        accumulate_gate(&mut grads.encoder.input, &da_i, x_t, &prev.h);
        accumulate_gate(&mut grads.encoder.output, &da_o, x_t, &prev.h);
        accumulate_gate(&mut grads.encoder.candidate, &da_g, x_t, &prev.h);

        let mut dh_prev = model.encoder.forget.u.matvec_transpose(&da_f);
        for (acc, v) in dh_prev.iter_mut().zip(model.encoder.input.u.matvec_transpose(&da_i)) {
            *acc += v;
        }
        for (acc, v) in dh_prev.iter_mut().zip(model.encoder.output.u.matvec_transpose(&da_o)) {
            *acc += v;
        }
        for (acc, v) in dh_prev.iter_mut().zip(model.encoder.candidate.u.matvec_transpose(&da_g)) {
            *acc += v;
        }
        dh = dh_prev;
    }

    (loss, grads)
}

fn accumulate_gate(gate: &mut LstmGate, da: &[f64], x_t: &[f64], h_prev: &[f64]) {
    gate.w.add_outer(da, x_t);
    gate.u.add_outer(da, h_prev);
    for (b, d) in gate.b.iter_mut().zip(da) {
        *b += d;
    }
}

/// Worst relative error of the analytic gradients against central finite
/// differences, over every parameter: max(|a - n| / max(|a|, |n|, 1e-12)).
pub fn gradient_check(model: &AutoencoderModel, batch: &[&[f64]], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step {epsilon} outside (0, 1e-3]"
        )));
    }
    let (_, grads) = backward(model, batch)?;
    compare_to_finite_differences(model, batch, epsilon, &grads)
}

/// Compare a given gradient set against finite differences of the loss.
/// Split out from [`gradient_check`] so tests can feed deliberately broken
/// gradients through the same comparison.
pub(crate) fn compare_to_finite_differences(
    model: &AutoencoderModel,
    batch: &[&[f64]],
    epsilon: f64,
    grads: &GradientSet,
) -> Result<f64> {
    let n_tensors = grads.tensors().len();
    let per_tensor: Vec<Result<f64>> = parallel::map_indexed(n_tensors, |ti| {
        let mut probe = model.clone();
        let len = probe.tensors()[ti].len();
        let mut worst = 0.0f64;
        for k in 0..len {
            let original = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = original + epsilon;
            let plus = super::reconstruction_loss(&probe, batch)?;
            probe.tensors_mut()[ti][k] = original - epsilon;
            let minus = super::reconstruction_loss(&probe, batch)?;
            probe.tensors_mut()[ti][k] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = grads.tensors()[ti][k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
        Ok(worst)
    });

    let mut worst = 0.0f64;
    for r in per_tensor {
        worst = worst.max(r?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{random_model, zero_model};
    use super::super::{reconstruction_loss, Activation};
    use super::*;
    use crate::math::rng::RngStream;

    fn batch_of(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(seed);
        (0..n).map(|_| (0..len).map(|_| rng.uniform(-1.5, 1.5)).collect()).collect()
    }

    fn as_refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
        rows.iter().map(|r| r.as_slice()).collect()
    }

    #[test]
    fn backward_loss_equals_reconstruction_loss_bitwise() {
        let model = random_model(1, 4, 2, 5, vec![4], Activation::Tanh, 21);
        let rows = batch_of(6, 5, 1);
        let batch = as_refs(&rows);
        let (loss, _) = backward(&model, &batch).unwrap();
        let direct = reconstruction_loss(&model, &batch).unwrap();
        assert_eq!(loss.to_bits(), direct.to_bits());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let model = random_model(1, 4, 2, 5, vec![4], Activation::Tanh, 42);
        let rows = batch_of(3, 5, 7);
        let err = gradient_check(&model, &as_refs(&rows), 1e-5).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn gradients_match_on_multivariate_steps_with_identity_decoder() {
        // Bound is looser than the scalar case: tiny gradients here sit at
        // the finite-difference noise floor. Real faults register above 1e-2.
        let model = random_model(2, 3, 2, 4, vec![5], Activation::Identity, 11);
        let rows = batch_of(3, 8, 13);
        let err = gradient_check(&model, &as_refs(&rows), 1e-5).unwrap();
        assert!(err < 5e-5, "max relative error {err}");
    }

    #[test]
    fn gradients_match_with_empty_decoder_stack() {
        let model = random_model(1, 3, 2, 6, vec![], Activation::Tanh, 5);
        let rows = batch_of(4, 6, 3);
        let err = gradient_check(&model, &as_refs(&rows), 1e-5).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn exact_reconstruction_zeroes_output_head_gradients() {
        let seq = vec![3.0; 4];
        let mut model = zero_model(1, 2, 1, 4, &[], Activation::Identity);
        model.output_head.b = seq.clone();
        let (loss, grads) = backward(&model, &[&seq]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.output_head.w.as_slice().iter().all(|g| g.abs() < 1e-12));
        assert!(grads.output_head.b.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn duplicating_the_batch_leaves_gradients_unchanged() {
        let model = random_model(1, 3, 2, 5, vec![3], Activation::Tanh, 8);
        let rows = batch_of(3, 5, 2);
        let batch = as_refs(&rows);
        let doubled: Vec<&[f64]> = batch.iter().chain(batch.iter()).copied().collect();
        let (l1, g1) = backward(&model, &batch).unwrap();
        let (l2, g2) = backward(&model, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.tensors().into_iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zeroed_bias_gradient_is_caught_by_the_checker() {
        let model = random_model(1, 4, 2, 5, vec![4], Activation::Tanh, 42);
        let rows = batch_of(3, 5, 7);
        let batch = as_refs(&rows);
        let (_, mut grads) = backward(&model, &batch).unwrap();
        for g in &mut grads.encoder.forget.b {
            *g = 0.0;
        }
        let err = compare_to_finite_differences(&model, &batch, 1e-5, &grads).unwrap();
        assert!(err > 1e-2, "fault slipped through: {err}");
    }

    #[test]
    fn gradient_check_rejects_bad_epsilon() {
        let model = random_model(1, 2, 1, 3, vec![], Activation::Tanh, 1);
        let rows = batch_of(1, 3, 1);
        let batch = as_refs(&rows);
        assert!(gradient_check(&model, &batch, 0.0).is_err());
        assert!(gradient_check(&model, &batch, 1e-2).is_err());
    }

    #[test]
    fn batch_gradient_is_mean_of_per_sequence_gradients() {
        let model = random_model(1, 3, 2, 4, vec![3], Activation::Tanh, 17);
        let rows = batch_of(2, 4, 19);
        let (_, ga) = backward(&model, &[rows[0].as_slice()]).unwrap();
        let (_, gb) = backward(&model, &[rows[1].as_slice()]).unwrap();
        let (_, gboth) = backward(&model, &as_refs(&rows)).unwrap();
        for ((a, b), both) in ga.tensors().into_iter().zip(gb.tensors()).zip(gboth.tensors()) {
            for ((x, y), z) in a.iter().zip(b).zip(both) {
                assert!((0.5 * (x + y) - z).abs() < 1e-14);
            }
        }
    }
}
