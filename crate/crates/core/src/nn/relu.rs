use super::RealBatch;
use crate::Result;

pub fn relu_forward(x: &RealBatch) -> RealBatch {
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v = v.max(0.0);
    }
    out
}

/// Passes `grad_out` where the forward input was strictly positive.
pub fn relu_backward(x: &RealBatch, grad_out: &RealBatch) -> Result<RealBatch> {
    x.same_shape(grad_out, "relu backward")?;
    let mut grad = grad_out.clone();
    for (g, &v) in grad.as_mut_slice().iter_mut().zip(x.as_slice()) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(grad)
}
