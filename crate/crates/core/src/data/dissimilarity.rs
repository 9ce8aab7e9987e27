//! Monte-Carlo estimate of the gradient dissimilarity between an epoch of
//! purely private steps and an epoch that swaps its tail for public samples.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tasks::TaskObjective;
use crate::vector::{axpy_in_place, check_dims, norm};

/// Mean over `num_perms` random orders π̂ of
///
/// ‖Σ_{j<n_d} (∇f(x; d_j) − ∇f(x; d_{π̂_j})) + Σ_{j≥n_d} (∇f(x; d_j) − ∇f(x; p_{j−n_d}))‖
///
/// with the reference order fixed at the identity. Gradients are unclipped.
/// The private part is summed through per-sample multiplicities, so terms
/// that cancel contribute exactly nothing; in particular the result is
/// exactly zero when there is no public slice.
pub fn estimate_dissimilarity<F: Scalar>(
    private: &Dataset<F>,
    public_slice: Option<&Dataset<F>>,
    task: &TaskObjective<F>,
    x: &[F],
    n_d: usize,
    num_perms: usize,
    stream: RngStream,
) -> Result<F> {
    let n = private.len();
    let public_len = public_slice.map_or(0, Dataset::len);
    if n_d > n || public_len != n - n_d {
        return Err(Error::Config(format!(
            "public slice has {public_len} samples but n - n_d = {}",
            n.saturating_sub(n_d)
        )));
    }
    if num_perms == 0 {
        return Err(Error::Config("num_perms must be at least 1".into()));
    }
    check_dims(private.dim(), x.len())?;
    if let Some(p) = public_slice {
        check_dims(private.dim(), p.dim())?;
    }

    let grads = private
        .samples()
        .iter()
        .map(|s| task.grad(x, s))
        .collect::<Result<Vec<_>>>()?;

    // The public half does not depend on π̂.
    let mut tail = vec![F::zero(); x.len()];
    if let Some(p) = public_slice {
        for (j, s) in p.samples().iter().enumerate() {
            axpy_in_place(F::one(), &grads[n_d + j], &mut tail);
            axpy_in_place(-F::one(), &task.grad(x, s)?, &mut tail);
        }
    }

    let mut rng = stream.generator();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut weight = vec![0i64; n];
    let mut total = F::zero();
    for _ in 0..num_perms {
        perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
        rng.shuffle(&mut perm);
        weight.iter_mut().for_each(|w| *w = 0);
        for (j, &pj) in perm.iter().enumerate().take(n_d) {
            weight[j] += 1;
            weight[pj] -= 1;
        }
        let mut acc = tail.clone();
        for (g, &w) in grads.iter().zip(&weight) {
            if w != 0 {
                axpy_in_place(F::of(w as f64), g, &mut acc);
            }
        }
        total += norm(&acc);
    }
    Ok(total / F::of_usize(num_perms))
}
