use serde::Serialize;

use crate::error::{Error, Result};
use crate::stochastics::FinitePmf;

/// Largest number of outcomes the oracle will enumerate.
pub const ORACLE_STATE_LIMIT: f64 = 1e7;

/// Exact ANOVA quantities for an i.i.d. input sequence on a finite support.
///
/// Tables are indexed by support position: `h_table[x * m + y]`,
/// `s_table[(x * m + y) * m + z]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub support: Vec<f64>,
    pub e0h: f64,
    pub h_table: Vec<f64>,
    pub r_table: Vec<f64>,
    pub var_r: f64,
    pub xi2: f64,
    /// Empty when `T < 3`.
    pub s_table: Vec<f64>,
    pub var_s: f64,
}

impl OracleResult {
    pub fn xi1(&self) -> f64 {
        self.var_r.max(0.0).sqrt()
    }
}

/// Enumerates all `m^T` outcomes of an i.i.d. `pmf` sequence.
///
/// `H(x,y) = Σ_{t=2}^T E[h | X_{t−1}=x, X_t=y]`, `R` is its two-way
/// interaction, `Ξ₂ = Σ_{s<t} E[R(X_{s−1},X_s) R(X_{t−1},X_t) h] / Var(R)`
/// (zero when `Var(R)` vanishes), and `S` is the interaction in `(x, z)` of
/// `Σ_{t=3}^T E[h | X_{t−2}=x, X_{t−1}=y, X_t=z]` at fixed `y`.
pub fn enumeration_oracle(pmf: &FinitePmf, cost: impl Fn(&[f64]) -> f64, horizon: usize) -> Result<OracleResult> {
    let m = pmf.len();
    if horizon < 2 {
        return Err(Error::config("the oracle needs a horizon of at least 2"));
    }
    let size = (m as f64).powi(horizon as i32);
    if size > ORACLE_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            size,
            limit: ORACLE_STATE_LIMIT,
        });
    }
    let outcomes = size as usize;
    let p = pmf.probs();
    let vals = pmf.values();

    let mut digits = vec![0usize; horizon];
    let mut path = vec![0.0; horizon];
    let mut hs = Vec::with_capacity(outcomes);
    let mut probs = Vec::with_capacity(outcomes);
    let mut e0h = 0.0;
    let mut pair_acc = vec![0.0; m * m];
    let mut triple_acc = vec![0.0; m * m * m];
    for _ in 0..outcomes {
        let mut pr = 1.0;
        for (t, &d) in digits.iter().enumerate() {
            path[t] = vals[d];
            pr *= p[d];
        }
        let h = cost(&path);
        let ph = pr * h;
        e0h += ph;
        for t in 1..horizon {
            pair_acc[digits[t - 1] * m + digits[t]] += ph;
        }
        for t in 2..horizon {
            triple_acc[(digits[t - 2] * m + digits[t - 1]) * m + digits[t]] += ph;
        }
        hs.push(h);
        probs.push(pr);
        advance(&mut digits, m);
    }

    let mut h_table = vec![0.0; m * m];
    for x in 0..m {
        for y in 0..m {
            let w = p[x] * p[y];
            h_table[x * m + y] = if w > 0.0 { pair_acc[x * m + y] / w } else { 0.0 };
        }
    }
    let r_table = interaction(&h_table, p, m);
    let mut var_r = 0.0;
    for x in 0..m {
        for y in 0..m {
            var_r += p[x] * p[y] * r_table[x * m + y].powi(2);
        }
    }

    let scale = hs.iter().zip(&probs).map(|(h, pr)| pr * h * h).sum::<f64>();
    let xi2 = if var_r > 1e-24 * (1.0 + scale) {
        digits.iter_mut().for_each(|d| *d = 0);
        let mut acc = 0.0;
        for (h, pr) in hs.iter().zip(&probs) {
            let (mut sum, mut sq) = (0.0, 0.0);
            for t in 1..horizon {
                let r = r_table[digits[t - 1] * m + digits[t]];
                sum += r;
                sq += r * r;
            }
            acc += pr * h * 0.5 * (sum * sum - sq);
            advance(&mut digits, m);
        }
        acc / var_r
    } else {
        0.0
    };

    let (s_table, var_s) = if horizon >= 3 {
        let mut g3 = vec![0.0; m * m * m];
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    let w = p[x] * p[y] * p[z];
                    let k = (x * m + y) * m + z;
                    g3[k] = if w > 0.0 { triple_acc[k] / w } else { 0.0 };
                }
            }
        }
        let mut s = vec![0.0; m * m * m];
        let mut var_s = 0.0;
        let mut slice = vec![0.0; m * m];
        for y in 0..m {
            for x in 0..m {
                for z in 0..m {
                    slice[x * m + z] = g3[(x * m + y) * m + z];
                }
            }
            let r = interaction(&slice, p, m);
            for x in 0..m {
                for z in 0..m {
                    let v = r[x * m + z];
                    s[(x * m + y) * m + z] = v;
                    var_s += p[x] * p[y] * p[z] * v * v;
                }
            }
        }
        (s, var_s)
    } else {
        (Vec::new(), 0.0)
    };

    Ok(OracleResult {
        support: vals.to_vec(),
        e0h,
        h_table,
        r_table,
        var_r,
        xi2,
        s_table,
        var_s,
    })
}

fn advance(digits: &mut [usize], m: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return;
        }
        *d = 0;
    }
}

/// `a(x,y) − E a(x,Y) − E a(X,y) + E a(X,Y)` under weights `p` on both axes.
fn interaction(a: &[f64], p: &[f64], m: usize) -> Vec<f64> {
    let row: Vec<f64> = (0..m).map(|x| (0..m).map(|y| p[y] * a[x * m + y]).sum()).collect();
    let col: Vec<f64> = (0..m).map(|y| (0..m).map(|x| p[x] * a[x * m + y]).sum()).collect();
    let grand: f64 = (0..m).map(|x| p[x] * row[x]).sum();
    let mut out = vec![0.0; m * m];
    for x in 0..m {
        for y in 0..m {
            out[x * m + y] = a[x * m + y] - row[x] - col[y] + grand;
        }
    }
    out
}
