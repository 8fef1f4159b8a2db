//! Directional primitives shared by the three structures.
//!
//! Every strength update and read is a traversal of the strength vector from
//! one end. Index 0 is the bottom of the structure (oldest stack entry, front
//! of the queue); the last index is the top. A stack pops and reads from the
//! top, a queue from the bottom, and a deque does both.

use crate::scalar::Scalar;

/// End of the strength vector a traversal starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Top,
    Bottom,
}

/// Branch of the backward rules whose contribution is sign-flipped.
///
/// Only used to demonstrate that the gradient checks pin every branch.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Pop: strengths further from the popping end feed the rows they shield.
    PopCarry,
    /// Pop: a surviving row passes its own adjoint straight through.
    PopDirect,
    /// Pop: the `-1` sensitivity of a partially popped row to the pop signal.
    PopSignal,
    /// Read: weight equal to the row strength.
    ReadDirect,
    /// Read: weight capped by the remaining read mass.
    ReadCarry,
}

impl Fault {
    pub const ALL: [Fault; 5] = [
        Fault::PopCarry,
        Fault::PopDirect,
        Fault::PopSignal,
        Fault::ReadDirect,
        Fault::ReadCarry,
    ];

    #[inline]
    fn sign<T: Scalar>(self, branch: Fault) -> T {
        if self == branch {
            -T::one()
        } else {
            T::one()
        }
    }
}

#[inline]
fn position(len: usize, k: usize, from: End) -> usize {
    match from {
        End::Top => len - 1 - k,
        End::Bottom => k,
    }
}

#[inline]
fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Removes `amount` of strength, starting at `from`.
///
/// Row `i` loses `max(0, amount - (strength strictly ahead of i))`, clamped at
/// zero. The running sum keeps this linear in the vector length.
pub fn pop<T: Scalar>(strengths: &[T], amount: T, from: End) -> Vec<T> {
    let n = strengths.len();
    let mut out = vec![T::zero(); n];
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let cut = relu(amount - ahead);
        out[i] = relu(strengths[i] - cut);
        ahead += strengths[i];
    }
    out
}

/// Read weights: a unit read mass handed out from `from` inwards.
pub fn read_weights<T: Scalar>(strengths: &[T], from: End) -> Vec<T> {
    let n = strengths.len();
    let mut out = vec![T::zero(); n];
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let cap = relu(T::one() - ahead);
        let s = strengths[i];
        out[i] = if s <= cap { s } else { cap };
        ahead += s;
    }
    out
}

/// Adjoint of [`pop`]. Returns the adjoint of the input strengths and of
/// `amount`. Ties take the derivative of the left argument of min/max.
pub fn pop_backward<T: Scalar>(
    strengths: &[T],
    amount: T,
    from: End,
    g_out: &[T],
    fault: Fault,
) -> (Vec<T>, T) {
    let n = strengths.len();
    let mut g_in = vec![T::zero(); n];
    let mut g_amount = T::zero();

    // (active, cutting) per traversal step
    let mut flags = Vec::with_capacity(n);
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let excess = amount - ahead;
        let cut = relu(excess);
        flags.push((strengths[i] - cut > T::zero(), excess > T::zero()));
        ahead += strengths[i];
    }

    let carry_sign: T = fault.sign(Fault::PopCarry);
    let direct_sign: T = fault.sign(Fault::PopDirect);
    let signal_sign: T = fault.sign(Fault::PopSignal);
    let mut carry = T::zero();
    for k in (0..n).rev() {
        let i = position(n, k, from);
        g_in[i] += carry;
        let (active, cutting) = flags[k];
        if active {
            g_in[i] += direct_sign * g_out[i];
            if cutting {
                g_amount -= signal_sign * g_out[i];
                carry += carry_sign * g_out[i];
            }
        }
    }
    (g_in, g_amount)
}

/// Adjoint of [`read_weights`] with respect to the strengths.
pub fn read_weights_backward<T: Scalar>(
    strengths: &[T],
    from: End,
    g_weights: &[T],
    fault: Fault,
) -> Vec<T> {
    let n = strengths.len();
    let mut g_in = vec![T::zero(); n];

    // 0: weight is the strength, 1: weight is the positive remaining mass, 2: zero
    let mut branch = Vec::with_capacity(n);
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let remaining = T::one() - ahead;
        let s = strengths[i];
        branch.push(if s <= relu(remaining) {
            0u8
        } else if remaining > T::zero() {
            1
        } else {
            2
        });
        ahead += s;
    }

    let direct_sign: T = fault.sign(Fault::ReadDirect);
    let carry_sign: T = fault.sign(Fault::ReadCarry);
    let mut carry = T::zero();
    for k in (0..n).rev() {
        let i = position(n, k, from);
        g_in[i] += carry;
        match branch[k] {
            0 => g_in[i] += direct_sign * g_weights[i],
            1 => carry -= carry_sign * g_weights[i],
            _ => {}
        }
    }
    g_in
}

/// Smallest distance of any pop decision to a min/max tie. Rows whose strength
/// is exactly zero with nothing to remove are pinned and do not count.
pub fn pop_margin<T: Scalar>(strengths: &[T], amount: T, from: End) -> T {
    let n = strengths.len();
    let mut margin = T::infinity();
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let s = strengths[i];
        let excess = amount - ahead;
        if !(s == T::zero() && excess <= T::zero()) {
            margin = margin.min(excess.abs());
            margin = margin.min((s - relu(excess)).abs());
        }
        ahead += s;
    }
    margin
}

/// Smallest distance of any read decision to a min/max tie.
pub fn read_margin<T: Scalar>(strengths: &[T], from: End) -> T {
    let n = strengths.len();
    let mut margin = T::infinity();
    let mut ahead = T::zero();
    for k in 0..n {
        let i = position(n, k, from);
        let s = strengths[i];
        let remaining = T::one() - ahead;
        if s != T::zero() {
            margin = margin.min((s - relu(remaining)).abs());
            margin = margin.min(remaining.abs());
        } else if remaining > T::zero() {
            margin = margin.min(remaining);
        }
        ahead += s;
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pop_from_top_walks_downwards() {
        let s = pop(&[0.7f64, 0.5], 0.9, End::Top);
        assert!((s[0] - 0.3).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn pop_from_bottom_walks_upwards() {
        let s = pop(&[0.6f64, 0.9], 0.5, End::Bottom);
        assert!((s[0] - 0.1).abs() < 1e-15);
        assert_eq!(s[1], 0.9);
    }

    #[test]
    fn pop_on_empty_is_noop() {
        assert!(pop::<f64>(&[], 0.7, End::Top).is_empty());
    }

    #[test]
    fn read_weights_hand_out_unit_mass() {
        let w = read_weights(&[0.3f64, 0.0, 0.9], End::Top);
        assert!((w[2] - 0.9).abs() < 1e-15);
        assert_eq!(w[1], 0.0);
        assert!((w[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn backward_of_zero_adjoint_is_zero() {
        let (g, gu) = pop_backward(&[0.4f64, 0.3, 0.2], 0.45, End::Top, &[0.0; 3], Fault::None);
        assert!(g.iter().all(|&x| x == 0.0));
        assert_eq!(gu, 0.0);
        let g = read_weights_backward(&[0.4f64, 0.3, 0.5], End::Bottom, &[0.0; 3], Fault::None);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pop_backward_matches_hand_derivative() {
        // s = [0.7, 0.5], u = 0.9 from top: s' = [0.7 - (0.9 - 0.5), 0]
        // ds'[0]/ds[0] = 1, ds'[0]/ds[1] = 1, ds'[0]/du = -1
        let (g, gu) = pop_backward(&[0.7f64, 0.5], 0.9, End::Top, &[1.0, 0.0], Fault::None);
        assert_eq!(g, vec![1.0, 1.0]);
        assert_eq!(gu, -1.0);
    }

    #[test]
    fn margins_see_ties() {
        assert_eq!(pop_margin(&[0.5f64, 0.5], 0.5, End::Top), 0.0);
        assert!(pop_margin(&[0.7f64, 0.5], 0.9, End::Top) > 0.29);
        assert_eq!(read_margin(&[0.5f64, 0.5], End::Top), 0.0);
        assert!(read_margin(&[0.3f64, 0.0, 0.9], End::Top) > 0.09);
    }
}
