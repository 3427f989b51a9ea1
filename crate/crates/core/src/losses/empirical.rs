use super::LossKind;
use crate::error::{Error, Result};
use crate::latent_model::{BlockBatch, LatentClassModel, SampleBatch};
use crate::representation::Representation;
use crate::scalar::{dot, ksum, Real};

/// ℓ({f(x)ᵀ(f(x⁺) − f(x_i⁻))}) for every tuple.
pub fn unsup_losses_per_tuple<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    kind: LossKind<T>,
) -> Result<Vec<T>> {
    let emb = f.embed(model)?;
    let mut v = vec![T::zero(); batch.k];
    Ok(batch
        .tuples
        .iter()
        .map(|t| {
            let fx = &emb[t.anchor];
            let a = dot(fx, &emb[t.positive]);
            for (vi, &n) in v.iter_mut().zip(&t.negatives) {
                *vi = a - dot(fx, &emb[n]);
            }
            kind.eval(&v)
        })
        .collect())
}

/// Mean loss over the batch.
pub fn unsup_loss_empirical<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    kind: LossKind<T>,
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let losses = unsup_losses_per_tuple(f, model, batch, kind)?;
    Ok(ksum(losses) / T::from_usize_lossy(batch.len()))
}

/// ℓ(f(x)ᵀ(mean positive − mean negative)) for every block tuple.
pub fn block_losses_per_tuple<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    batch: &BlockBatch,
    kind: LossKind<T>,
) -> Result<Vec<T>> {
    let emb = f.embed(model)?;
    let b = T::from_usize_lossy(batch.b);
    Ok(batch
        .tuples
        .iter()
        .map(|t| {
            let fx = &emb[t.anchor];
            let pos = t.positives.iter().map(|&y| dot(fx, &emb[y])).sum::<T>();
            let neg = t.negatives.iter().map(|&y| dot(fx, &emb[y])).sum::<T>();
            kind.eval(&[(pos - neg) / b])
        })
        .collect())
}

pub fn block_loss_empirical<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    batch: &BlockBatch,
    kind: LossKind<T>,
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let losses = block_losses_per_tuple(f, model, batch, kind)?;
    Ok(ksum(losses) / T::from_usize_lossy(batch.len()))
}
