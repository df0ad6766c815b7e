//! Record a small expression on the tape and differentiate it.

use maxup_lab::autodiff::Tape;
use maxup_lab::math::Tensor;

fn main() -> maxup_lab::Result<()> {
    let mut tape = Tape::new();
    let w = tape.leaf(Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.5, 0.4, -0.6])?);
    let x = tape.leaf(Tensor::matrix(3, 1, vec![1.0, 2.0, -1.0])?);

    // max of tanh(W x), then log-sum-exp of the pair for comparison
    let h = tape.matmul(w, x)?;
    let a = tape.tanh(h)?;
    let worst = tape.max_reduce(a)?;
    let smooth = tape.logsumexp(a)?;

    let grads = tape.backward(worst, &[w, x])?;
    println!("max  = {:.6}", tape.value(worst).item().unwrap());
    println!("dW   = {:?}", grads[0].data());
    println!("dx   = {:?}", grads[1].data());

    let grads = tape.backward(smooth, &[x])?;
    println!("lse  = {:.6}", tape.value(smooth).item().unwrap());
    println!("dx   = {:?}", grads[0].data());
    Ok(())
}
