//! Exhaustive search over every cut set and every order-preserving clamp
//! sequence. Only for tiny instances; used to check the table solver.

use crate::dissimilarity::CostOracle;
use crate::error::{Error, Result};

use super::{evaluate_assignment, Mode, Outcome, RefitInstance};

pub const BRUTE_MAX_POINTS: usize = 12;
pub const BRUTE_MAX_CUTS: usize = 3;

/// Calls `visit` with every strictly increasing sequence of `len` values
/// drawn from `lo..hi`, in lexicographic order.
pub(crate) fn for_each_increasing(
    len: usize,
    lo: usize,
    hi: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    fn rec(
        buf: &mut Vec<usize>,
        len: usize,
        lo: usize,
        hi: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if buf.len() == len {
            visit(buf);
            return;
        }
        let need = len - buf.len();
        for v in lo..hi {
            if hi - v < need {
                break;
            }
            buf.push(v);
            rec(buf, len, v + 1, hi, visit);
            buf.pop();
        }
    }
    rec(&mut Vec::with_capacity(len), len, lo, hi, visit);
}

pub fn brute_force(inst: &RefitInstance) -> Result<Outcome> {
    if inst.mode() != Mode::NoRearrangement {
        return Err(Error::InvalidInstance(
            "use the rearrangement brute force for the rearrangement mode".into(),
        ));
    }
    let (n, m, k) = (inst.deformed().len(), inst.ideal().len(), inst.k());
    if n > BRUTE_MAX_POINTS || m > BRUTE_MAX_POINTS || k > BRUTE_MAX_CUTS {
        return Err(Error::SizeGuard(format!(
            "|P| = {n}, |Q| = {m}, k = {k}; limits are {BRUTE_MAX_POINTS} points and {BRUTE_MAX_CUTS} cuts"
        )));
    }
    let oracle = inst.oracle();
    search(&oracle, inst.delta(), k)
}

fn search(oracle: &CostOracle, delta: f64, k: usize) -> Result<Outcome> {
    let (n, m) = (oracle.deformed().len(), oracle.ideal().len());
    let mut best = Outcome::Infeasible;
    let mut err = None;
    for_each_increasing(k, 1, n - 1, &mut |cuts| {
        for_each_increasing(k + 2, 0, m, &mut |marks| {
            if err.is_some() {
                return;
            }
            let clamps: Vec<(usize, usize)> = marks.windows(2).map(|w| (w[0], w[1])).collect();
            match evaluate_assignment(oracle, delta, cuts, &clamps) {
                Ok(o) => {
                    if o.objective() < best.objective() {
                        best = o;
                    }
                }
                Err(e) => err = Some(e),
            }
        });
    });
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}
