use crate::error::{check_len, Result};
use crate::linalg::{affine, affine_backward_input, affine_backward_params, sigmoid};
use crate::scalar::Scalar;

/// Borrowed LSTM weights: `weights` is `4H x (input + H)` with gate blocks in
/// the order input, forget, output, candidate; `bias` has `4H` entries.
#[derive(Clone, Copy, Debug)]
pub struct LstmParams<'a, T> {
    pub weights: &'a [T],
    pub bias: &'a [T],
    pub input: usize,
    pub hidden: usize,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCache<T> {
    /// `[x; h_prev]`
    pub xh: Vec<T>,
    /// Activated gates `[i, f, o, g]`.
    pub gates: Vec<T>,
    pub c_prev: Vec<T>,
    pub tanh_c: Vec<T>,
}

/// One step of a peephole-free LSTM. Returns `(h', c')` and the cache.
pub fn lstm_cell<T: Scalar>(
    p: LstmParams<'_, T>,
    h: &[T],
    c: &[T],
    x: &[T],
) -> Result<(Vec<T>, Vec<T>, LstmCache<T>)> {
    let hd = p.hidden;
    check_len("lstm input", p.input, x.len())?;
    check_len("lstm hidden state", hd, h.len())?;
    check_len("lstm cell state", hd, c.len())?;
    check_len("lstm weights", 4 * hd * (p.input + hd), p.weights.len())?;
    check_len("lstm bias", 4 * hd, p.bias.len())?;

    let mut xh = Vec::with_capacity(p.input + hd);
    xh.extend_from_slice(x);
    xh.extend_from_slice(h);
    let mut gates = vec![T::zero(); 4 * hd];
    affine(p.weights, p.bias, &xh, &mut gates);
    for (k, z) in gates.iter_mut().enumerate() {
        *z = if k < 3 * hd { sigmoid(*z) } else { z.tanh() };
    }

    let mut c_new = vec![T::zero(); hd];
    let mut h_new = vec![T::zero(); hd];
    let mut tanh_c = vec![T::zero(); hd];
    for j in 0..hd {
        let (i, f, o, g) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
        c_new[j] = f * c[j] + i * g;
        tanh_c[j] = c_new[j].tanh();
        h_new[j] = o * tanh_c[j];
    }
    Ok((
        h_new,
        c_new,
        LstmCache {
            xh,
            gates,
            c_prev: c.to_vec(),
            tanh_c,
        },
    ))
}

/// Adjoint of [`lstm_cell`]. Accumulates weight and bias gradients and
/// returns `(dx, dh_prev, dc_prev)`.
pub fn lstm_cell_backward<T: Scalar>(
    p: LstmParams<'_, T>,
    cache: &LstmCache<T>,
    dh: &[T],
    dc: &[T],
    d_weights: &mut [T],
    d_bias: &mut [T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let hd = p.hidden;
    let one = T::one();
    let g = &cache.gates;
    let mut dz = vec![T::zero(); 4 * hd];
    let mut dc_prev = vec![T::zero(); hd];
    for j in 0..hd {
        let (i, f, o, cand) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
        let tc = cache.tanh_c[j];
        let dct = dc[j] + dh[j] * o * (one - tc * tc);
        dz[j] = dct * cand * i * (one - i);
        dz[hd + j] = dct * cache.c_prev[j] * f * (one - f);
        dz[2 * hd + j] = dh[j] * tc * o * (one - o);
        dz[3 * hd + j] = dct * i * (one - cand * cand);
        dc_prev[j] = dct * f;
    }
    affine_backward_params(&dz, &cache.xh, d_weights, d_bias);
    let mut dxh = vec![T::zero(); p.input + hd];
    affine_backward_input(p.weights, &dz, &mut dxh);
    let dh_prev = dxh.split_off(p.input);
    (dxh, dh_prev, dc_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_hidden() {
        let w = vec![0.0f64; 4 * 3 * 5];
        let b = vec![0.0; 12];
        let p = LstmParams { weights: &w, bias: &b, input: 2, hidden: 3 };
        let (h, _, _) = lstm_cell(p, &[0.0; 3], &[0.0; 3], &[1.5, -2.0]).unwrap();
        assert_eq!(h, vec![0.0; 3]);
    }

    #[test]
    fn forget_bias_keeps_sigmoid_one_of_cell() {
        let w = vec![0.0f64; 4 * 2 * 3];
        let mut b = vec![0.0; 8];
        b[2..4].iter_mut().for_each(|x| *x = 1.0);
        let p = LstmParams { weights: &w, bias: &b, input: 1, hidden: 2 };
        let (_, c, _) = lstm_cell(p, &[0.0; 2], &[1.0; 2], &[0.3]).unwrap();
        let expect = 1.0 / (1.0 + (-1.0f64).exp());
        for x in c {
            assert!((x - expect).abs() < 1e-15);
            assert!((x - 0.7311).abs() < 1e-4);
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let w = vec![0.0f64; 4 * 2 * 3];
        let b = vec![0.0; 8];
        let p = LstmParams { weights: &w, bias: &b, input: 1, hidden: 2 };
        assert!(lstm_cell(p, &[0.0; 2], &[0.0; 2], &[0.3, 0.1]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (input, hidden) = (3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut u = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect() };
        let w = u(4 * hidden * (input + hidden));
        let b = u(4 * hidden);
        let x = u(input);
        let h = u(hidden);
        let c = u(hidden);
        let wh = u(hidden);
        let wc = u(hidden);
        // L = wh . h' + wc . c'
        let loss = |w: &[f64], b: &[f64], x: &[f64], h: &[f64], c: &[f64]| -> f64 {
            let p = LstmParams { weights: w, bias: b, input, hidden };
            let (h2, c2, _) = lstm_cell(p, h, c, x).unwrap();
            h2.iter().zip(&wh).map(|(a, b)| a * b).sum::<f64>()
                + c2.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>()
        };
        let p = LstmParams { weights: &w, bias: &b, input, hidden };
        let (_, _, cache) = lstm_cell(p, &h, &c, &x).unwrap();
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; b.len()];
        let (dx, dh, dc) = lstm_cell_backward(p, &cache, &wh, &wc, &mut dw, &mut db);

        let eps = 1e-6;
        let fd = |f: &dyn Fn(f64) -> f64| (f(eps) - f(-eps)) / (2.0 * eps);
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-3);
        let mut worst = 0.0f64;
        for k in 0..w.len() {
            let n = fd(&|e| {
                let mut w2 = w.clone();
                w2[k] += e;
                loss(&w2, &b, &x, &h, &c)
            });
            worst = worst.max(rel(dw[k], n));
        }
        for k in 0..b.len() {
            let n = fd(&|e| {
                let mut b2 = b.clone();
                b2[k] += e;
                loss(&w, &b2, &x, &h, &c)
            });
            worst = worst.max(rel(db[k], n));
        }
        for (k, &a) in dx.iter().enumerate() {
            let n = fd(&|e| {
                let mut v = x.clone();
                v[k] += e;
                loss(&w, &b, &v, &h, &c)
            });
            worst = worst.max(rel(a, n));
        }
        for (k, &a) in dh.iter().enumerate() {
            let n = fd(&|e| {
                let mut v = h.clone();
                v[k] += e;
                loss(&w, &b, &x, &v, &c)
            });
            worst = worst.max(rel(a, n));
        }
        for (k, &a) in dc.iter().enumerate() {
            let n = fd(&|e| {
                let mut v = c.clone();
                v[k] += e;
                loss(&w, &b, &x, &h, &v)
            });
            worst = worst.max(rel(a, n));
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }
}
