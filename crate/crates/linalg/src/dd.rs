//! Double-double arithmetic (~32 significant digits) and a symmetric
//! Jacobi eigensolver built on it.
//!
//! Dephasing decoherence matrices `Λ_ij = exp(−γ_ij t)` are very close to
//! the all-ones matrix for short snapshot times; their small eigenvalues,
//! which carry the high-order Kraus operators, lie far below double
//! precision relative to the leading one. A cyclic Jacobi sweep in
//! double-double arithmetic resolves them reliably.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Nearest double.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        // One Newton step from the double approximation doubles the digits.
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - DD { hi: p, lo: e }).to_f64();
        let (s, t) = quick_two_sum(x, r / (2.0 * x));
        DD { hi: s, lo: t }
    }

    /// `exp(x)` by `ln 2` range reduction, argument halving and a Taylor series.
    pub fn exp(self) -> Self {
        const LN2: DD = DD { hi: 6.931471805599452862e-01, lo: 2.319046813846299558e-17 };
        if self.hi == 0.0 && self.lo == 0.0 {
            return DD::ONE;
        }
        let m = (self.hi / LN2.hi).round();
        let mut r = self - LN2 * DD::from_f64(m);
        // |r| ≤ ln2/2; four halvings bring it below 1/46.
        const HALVINGS: i32 = 4;
        r = r * DD::from_f64(1.0 / 16.0);
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for n in 1..=30 {
            term = term * r / DD::from_f64(n as f64);
            sum += term;
            if term.hi.abs() < 1e-36 * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..HALVINGS {
            sum = sum * sum;
        }
        let scale = 2f64.powi(m as i32);
        DD { hi: sum.hi * scale, lo: sum.lo * scale }
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> Self {
        DD::from_f64(x)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DD { hi, lo }
    }
}

impl AddAssign for DD {
    fn add_assign(&mut self, o: DD) {
        *self = *self + o;
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        // Long division: three quotient digits.
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, o: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            ord => ord,
        }
    }
}

/// `exp(−x)` in double-double precision for `x` given exactly as an `f64`.
pub fn exp_neg(x: f64) -> DD {
    (-DD::from_f64(x)).exp()
}

/// Dense symmetric matrix stored row-major as `n × n` double-doubles.
#[derive(Clone, Debug)]
pub struct SymDD {
    n: usize,
    a: Vec<DD>,
}

impl SymDD {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![DD::ZERO; n * n] }
    }

    /// Build from the upper triangle `f(i, j)`, `i ≤ j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> DD) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> DD {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: DD) {
        self.a[i * self.n + j] = v;
    }

    fn off_norm2(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).hi.powi(2);
                }
            }
        }
        s
    }

    fn diag_norm2(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).hi.powi(2)).sum()
    }
}

/// Eigen-decomposition of a symmetric double-double matrix by cyclic Jacobi.
///
/// Returns `(eigenvalues, eigenvectors)` where `eigenvectors[k]` is the
/// k-th eigenvector; the ordering is descending in eigenvalue and each
/// eigenvector has its first non-negligible component positive.
pub fn jacobi_eigh(m: &SymDD) -> (Vec<DD>, Vec<Vec<DD>>) {
    let n = m.dim();
    let mut a = m.clone();
    let one = DD::ONE;
    // v[i][k]: component i of eigenvector k
    let mut v: Vec<Vec<DD>> = (0..n)
        .map(|i| (0..n).map(|k| if i == k { one } else { DD::ZERO }).collect())
        .collect();
    let scale = a.diag_norm2() + a.off_norm2();
    for _sweep in 0..100 {
        if a.off_norm2() <= 1e-64 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                if apq.hi.abs() <= 1e-40 * (app.hi.abs() + aqq.hi.abs()) {
                    a.set(p, q, DD::ZERO);
                    a.set(q, p, DD::ZERO);
                    continue;
                }
                let theta = (aqq - app) / (DD::from_f64(2.0) * apq);
                let t = if theta.hi.abs() > 1e30 {
                    DD::from_f64(0.5) / theta
                } else {
                    let r = (theta * theta + one).sqrt();
                    let s = if theta.hi >= 0.0 { one } else { -one };
                    s / (theta.abs() + r)
                };
                let cs = one / (t * t + one).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, cs * akp - sn * akq);
                    a.set(k, q, sn * akp + cs * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, cs * apk - sn * aqk);
                    a.set(q, k, sn * apk + cs * aqk);
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = cs * vp - sn * vq;
                    row[q] = sn * vp + cs * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a.get(y, y).partial_cmp(&a.get(x, x)).unwrap_or(Ordering::Equal));
    let vals = order.iter().map(|&k| a.get(k, k)).collect();
    let vecs = order
        .iter()
        .map(|&k| {
            let mut col: Vec<DD> = (0..n).map(|i| v[i][k]).collect();
            let big = col.iter().map(|x| x.hi.abs()).fold(0.0, f64::max);
            if let Some(first) = col.iter().find(|x| x.hi.abs() > 1e-10 * big).copied() {
                if first.hi < 0.0 {
                    for x in col.iter_mut() {
                        *x = -*x;
                    }
                }
            }
            col
        })
        .collect();
    (vals, vecs)
}
