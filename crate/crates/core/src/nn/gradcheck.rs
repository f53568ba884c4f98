//! Central finite-difference checks of analytic gradients.

use super::graph::{Graph, Var};
use super::params::{Bound, Params};
use super::tensor::Tensor;
use crate::error::{Error, Result};

fn relative_error(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / 1f64.max(fd.abs()).max(analytic.abs())
}

/// Max relative error between the analytic gradient of `f` at `theta` and
/// central differences with step `h`, over all coordinates.
pub fn grad_check<F>(f: F, theta: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    if h <= 0.0 {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let mut g = Graph::new();
    let x = g.leaf(theta.clone(), true);
    let y = f(&mut g, x)?;
    let analytic = g.backward(y)?.get_or_zeros(x, theta);

    let eval = |t: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let x = g.constant(t);
        let y = f(&mut g, x)?;
        Ok(g.scalar(y))
    };
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus.data_mut()[i] += h;
        let mut minus = theta.clone();
        minus.data_mut()[i] -= h;
        let fd = (eval(plus)? - eval(minus)?) / (2.0 * h);
        worst = worst.max(relative_error(fd, analytic.data()[i]));
    }
    Ok(worst)
}

/// Like [`grad_check`] over every coordinate of a parameter store. `f`
/// builds the scalar objective from bound parameters.
pub fn grad_check_params<F>(params: &Params, f: F, h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &Bound) -> Result<Var>,
{
    if h <= 0.0 {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let mut g = Graph::new();
    let bound = g.bind(params, true);
    let y = f(&mut g, &bound)?;
    let grads = g.backward(y)?;
    let analytic: Vec<Tensor> = bound
        .vars()
        .iter()
        .zip(params.tensors())
        .map(|(v, t)| grads.get_or_zeros(*v, t))
        .collect();

    let eval = |p: &Params| -> Result<f64> {
        let mut g = Graph::new();
        let bound = g.bind(p, false);
        let y = f(&mut g, &bound)?;
        Ok(g.scalar(y))
    };
    let mut work = params.clone();
    let mut worst = 0.0f64;
    for (k, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = work.tensors()[k].data()[i];
            work.tensors_mut()[k].data_mut()[i] = orig + h;
            let up = eval(&work)?;
            work.tensors_mut()[k].data_mut()[i] = orig - h;
            let down = eval(&work)?;
            work.tensors_mut()[k].data_mut()[i] = orig;
            worst = worst.max(relative_error((up - down) / (2.0 * h), grad.data()[i]));
        }
    }
    Ok(worst)
}
