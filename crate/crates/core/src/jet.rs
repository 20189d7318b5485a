//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the normalized Taylor coefficients `∂^α f(x) / α!` of a
//! function of `n` variables for every multi-index with `|α| ≤ order`.
//! Monomials are ordered by total degree, so the coefficient table of a
//! lower-order jet is a prefix of the higher-order table.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use smallvec::SmallVec;

use crate::error::{GeomError, Result};
use crate::scalar::{c, Real};

pub const MAX_ORDER: usize = 4;
pub const MAX_VARS: usize = 8;

type Coeffs<T> = SmallVec<[T; 32]>;

/// Monomial table for `n` variables up to [`MAX_ORDER`].
pub struct Layout {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    degree: Vec<u8>,
    /// `count[k]` = number of monomials of degree ≤ k.
    count: [usize; MAX_ORDER + 1],
    /// Product table `(i, j, k)`: monomial i times monomial j is monomial k,
    /// sorted by the degree of k.
    mul: Vec<(u16, u16, u16)>,
    /// `mul_cut[k]` = number of product entries whose result has degree ≤ k.
    mul_cut: [usize; MAX_ORDER + 1],
    /// Per variable: `(source, target, factor)` with `x_v ∂_v` lowering source to target.
    deriv: Vec<Vec<(u16, u16, u8)>>,
    /// Monomial index of `x_v`.
    linear: Vec<usize>,
    index: HashMap<[u8; MAX_VARS], usize>,
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        for deg in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            push_degree(nvars, 0, deg, &mut cur, &mut exps);
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut count = [0usize; MAX_ORDER + 1];
        for (k, slot) in count.iter_mut().enumerate() {
            *slot = degree.iter().filter(|&&d| d as usize <= k).count();
        }
        let index: HashMap<[u8; MAX_VARS], usize> =
            exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degree[i] + degree[j] > MAX_ORDER as u8 {
                    continue;
                }
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = ei[v] + ej[v];
                }
                mul.push((i as u16, j as u16, index[&s] as u16));
            }
        }
        mul.sort_by_key(|&(i, j, k)| (degree[k as usize], i, j));
        let mut mul_cut = [0usize; MAX_ORDER + 1];
        for (k, slot) in mul_cut.iter_mut().enumerate() {
            *slot = mul.iter().filter(|&&(_, _, m)| degree[m as usize] as usize <= k).count();
        }

        let mut deriv = vec![Vec::new(); nvars];
        for (v, table) in deriv.iter_mut().enumerate() {
            for (k, e) in exps.iter().enumerate() {
                if e[v] > 0 {
                    let mut t = *e;
                    t[v] -= 1;
                    table.push((k as u16, index[&t] as u16, e[v]));
                }
            }
        }
        let linear = (0..nvars)
            .map(|v| {
                let mut e = [0u8; MAX_VARS];
                e[v] = 1;
                index[&e]
            })
            .collect();
        Layout { nvars, exps, degree, count, mul, mul_cut, deriv, linear, index }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exps[k][..self.nvars]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.degree[k] as usize
    }

    /// Index of the monomial with the given exponent vector.
    pub fn monomial(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.nvars {
            return None;
        }
        let mut e = [0u8; MAX_VARS];
        e[..self.nvars].copy_from_slice(exps);
        self.index.get(&e).copied()
    }
}

fn push_degree(n: usize, v: usize, left: usize, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if v + 1 == n {
        cur[v] = left as u8;
        out.push(*cur);
        cur[v] = 0;
        return;
    }
    if n == 0 {
        if left == 0 {
            out.push(*cur);
        }
        return;
    }
    for a in (0..=left).rev() {
        cur[v] = a as u8;
        push_degree(n, v + 1, left - a, cur, out);
    }
    cur[v] = 0;
}

/// Interned layout for `nvars` variables.
pub fn layout(nvars: usize) -> &'static Layout {
    static CACHE: OnceLock<Mutex<Vec<Option<&'static Layout>>>> = OnceLock::new();
    assert!(nvars <= MAX_VARS, "jets support at most {MAX_VARS} variables");
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; MAX_VARS + 1]));
    let mut guard = cache.lock().expect("layout cache poisoned");
    if let Some(l) = guard[nvars] {
        return l;
    }
    let l: &'static Layout = Box::leak(Box::new(Layout::build(nvars)));
    guard[nvars] = Some(l);
    l
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet<T> {
    layout: &'static Layout,
    order: u8,
    c: Coeffs<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(nvars: usize, order: usize, value: T) -> Jet<T> {
        let layout = layout(nvars);
        let mut c: Coeffs<T> = SmallVec::from_elem(T::zero(), layout.len(order));
        c[0] = value;
        Jet { layout, order: order as u8, c }
    }

    /// The coordinate function `x_var` expanded at `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: T) -> Jet<T> {
        let mut j = Jet::constant(nvars, order, value);
        if order > 0 {
            let k = j.layout.linear[var];
            j.c[k] = T::one();
        }
        j
    }

    /// Coordinate jets `x_0, …, x_{n-1}` expanded at `point`.
    pub fn variables(point: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        if order > MAX_ORDER {
            return Err(GeomError::OrderTooHigh(order));
        }
        let n = point.len();
        Ok((0..n).map(|v| Jet::variable(n, order, v, point[v])).collect())
    }

    pub fn constant_like(&self, value: T) -> Jet<T> {
        let mut c: Coeffs<T> = SmallVec::from_elem(T::zero(), self.c.len());
        c[0] = value;
        Jet { layout: self.layout, order: self.order, c }
    }

    pub fn zero_like(&self) -> Jet<T> {
        self.constant_like(T::zero())
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    /// Normalized Taylor coefficients in layout order.
    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// Normalized Taylor coefficient of the monomial with exponents `exps`.
    pub fn coeff(&self, exps: &[u8]) -> T {
        match self.layout.monomial(exps) {
            Some(k) if k < self.c.len() => self.c[k],
            _ => T::zero(),
        }
    }

    /// Mixed partial derivative `∂_{vars[0]} ∂_{vars[1]} …` at the base point.
    pub fn partial(&self, vars: &[usize]) -> T {
        if vars.len() > self.order() {
            return T::zero();
        }
        let mut e = [0u8; MAX_VARS];
        for &v in vars {
            e[v] += 1;
        }
        let k = self.layout.index[&e];
        let mut fact = T::one();
        for &a in &e[..self.layout.nvars] {
            for m in 2..=a {
                fact *= T::from_u8(m).unwrap();
            }
        }
        self.c[k] * fact
    }

    /// Partial derivative in variable `var` as a jet of one lower order.
    pub fn derivative(&self, var: usize) -> Jet<T> {
        assert!(self.order > 0, "derivative of an order-0 jet");
        let order = self.order - 1;
        let len = self.layout.len(order as usize);
        let mut c: Coeffs<T> = SmallVec::from_elem(T::zero(), len);
        for &(src, dst, f) in &self.layout.deriv[var] {
            let src = src as usize;
            if src < self.c.len() {
                c[dst as usize] += self.c[src] * T::from_u8(f).unwrap();
            }
        }
        Jet { layout: self.layout, order, c }
    }

    pub fn truncate(&self, order: usize) -> Jet<T> {
        let order = order.min(self.order());
        let len = self.layout.len(order);
        Jet { layout: self.layout, order: order as u8, c: SmallVec::from_slice(&self.c[..len]) }
    }

    fn check(&self, other: &Jet<T>) {
        debug_assert!(std::ptr::eq(self.layout, other.layout), "jets over different variable sets");
    }

    fn binary_order(&self, other: &Jet<T>) -> u8 {
        self.check(other);
        self.order.min(other.order)
    }

    fn mul_ref(&self, other: &Jet<T>) -> Jet<T> {
        let order = self.binary_order(other);
        let len = self.layout.len(order as usize);
        let mut c: Coeffs<T> = SmallVec::from_elem(T::zero(), len);
        let table = &self.layout.mul[..self.layout.mul_cut[order as usize]];
        let (a, b) = (&self.c[..], &other.c[..]);
        for &(i, j, k) in table {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { layout: self.layout, order, c }
    }

    fn zip_with(&self, other: &Jet<T>, f: impl Fn(T, T) -> T) -> Jet<T> {
        let order = self.binary_order(other);
        let len = self.layout.len(order as usize);
        let c = (0..len).map(|k| f(self.c[k], other.c[k])).collect();
        Jet { layout: self.layout, order, c }
    }

    /// `s − self`.
    pub fn rsub(&self, s: T) -> Jet<T> {
        -self + s
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        Jet { layout: self.layout, order: self.order, c: self.c.iter().map(|&x| x * s).collect() }
    }

    /// Composes a univariate function given its normalized Taylor
    /// coefficients `d[k] = f^{(k)}(u₀)/k!` at the base value `u₀`.
    pub fn compose(&self, d: &[T]) -> Jet<T> {
        let k = self.order();
        let mut h = self.clone();
        h.c[0] = T::zero();
        let mut r = self.constant_like(d[k]);
        for j in (0..k).rev() {
            r = r.mul_ref(&h);
            r.c[0] += d[j];
        }
        r
    }

    pub fn exp(&self) -> Jet<T> {
        let e = self.value().exp();
        let d = series(self.order(), |k| e / factorial::<T>(k));
        self.compose(&d)
    }

    pub fn ln(&self) -> Jet<T> {
        let u = self.value();
        let d = series(self.order(), |k| {
            if k == 0 {
                u.ln()
            } else {
                let s = if k % 2 == 1 { T::one() } else { -T::one() };
                s / (T::from_usize(k).unwrap() * u.powi(k as i32))
            }
        });
        self.compose(&d)
    }

    pub fn powf(&self, a: T) -> Jet<T> {
        let u = self.value();
        let d = series(self.order(), |k| binomial(a, k) * u.powf(a - T::from_usize(k).unwrap()));
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet<T> {
        self.powf(c(0.5))
    }

    pub fn recip(&self) -> Jet<T> {
        let u = self.value();
        let d = series(self.order(), |k| {
            let s = if k % 2 == 0 { T::one() } else { -T::one() };
            s / u.powi(k as i32 + 1)
        });
        self.compose(&d)
    }

    pub fn powi(&self, n: i32) -> Jet<T> {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = self.constant_like(T::one());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        result
    }

    pub fn square(&self) -> Jet<T> {
        self.mul_ref(self)
    }

    pub fn sin(&self) -> Jet<T> {
        let (s, co) = self.value().sin_cos();
        let cyc = [s, co, -s, -co];
        let d = series(self.order(), |k| cyc[k % 4] / factorial::<T>(k));
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet<T> {
        let (s, co) = self.value().sin_cos();
        let cyc = [co, -s, -co, s];
        let d = series(self.order(), |k| cyc[k % 4] / factorial::<T>(k));
        self.compose(&d)
    }

    pub fn sinh(&self) -> Jet<T> {
        let u = self.value();
        let (s, co) = (u.sinh(), u.cosh());
        let d = series(self.order(), |k| (if k % 2 == 0 { s } else { co }) / factorial::<T>(k));
        self.compose(&d)
    }

    pub fn cosh(&self) -> Jet<T> {
        let u = self.value();
        let (s, co) = (u.sinh(), u.cosh());
        let d = series(self.order(), |k| (if k % 2 == 0 { co } else { s }) / factorial::<T>(k));
        self.compose(&d)
    }

    pub fn tanh(&self) -> Jet<T> {
        // y' = 1 - y²
        let k = self.order();
        let mut y = vec![T::zero(); k + 1];
        y[0] = self.value().tanh();
        for m in 0..k {
            let mut s = if m == 0 { T::one() } else { T::zero() };
            for i in 0..=m {
                s -= y[i] * y[m - i];
            }
            y[m + 1] = s / T::from_usize(m + 1).unwrap();
        }
        self.compose(&y)
    }

    pub fn atan(&self) -> Jet<T> {
        // atan'(u₀ + t) = 1 / (1 + u₀² + 2u₀t + t²)
        let k = self.order();
        let u = self.value();
        let q = [T::one() + u * u, u + u, T::one()];
        let mut r = vec![T::zero(); k.max(1)];
        for m in 0..r.len() {
            let mut s = if m == 0 { T::one() } else { T::zero() };
            for i in 1..=m.min(2) {
                s -= q[i] * r[m - i];
            }
            r[m] = s / q[0];
        }
        let mut d = vec![T::zero(); k + 1];
        d[0] = u.atan();
        for m in 1..=k {
            d[m] = r[m - 1] / T::from_usize(m).unwrap();
        }
        self.compose(&d)
    }
}

impl<T: Real> Jet<T> {
    /// Four-quadrant angle of the point (`x`, `self`), in (−π, π].
    ///
    /// Expanded as the base angle plus the angle between the base vector and
    /// the perturbed one, which stays smooth across the branch cut.
    pub fn atan2(&self, x: &Jet<T>) -> Jet<T> {
        let (y0, x0) = (self.value(), x.value());
        let num = x * y0;
        let num = &(self * x0) - &num;
        let den = &(x * x0) + &(self * y0);
        let mut r = (num / den).atan();
        r.c[0] = y0.atan2(x0);
        r
    }
}

fn series<T: Real>(order: usize, f: impl Fn(usize) -> T) -> SmallVec<[T; MAX_ORDER + 1]> {
    (0..=order).map(f).collect()
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, m| acc * T::from_usize(m).unwrap())
}

fn binomial<T: Real>(a: T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, m| acc * (a - T::from_usize(m).unwrap()) / T::from_usize(m + 1).unwrap())
}

impl<T: Real> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.order)
            .field("coeffs", &&self.c[..])
            .finish()
    }
}

macro_rules! jet_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<T: Real> $tr<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Real> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Real> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Real> $tr<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_ref(b));
jet_binop!(Div, div, |a, b| a.mul_ref(&b.recip()));

macro_rules! jet_scalar_op {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<T: Real> $tr<T> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: T) -> Jet<T> {
                let f: fn(&Jet<T>, T) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Real> $tr<T> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: T) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
    };
}

jet_scalar_op!(Add, add, |a, s| {
    let mut r = a.clone();
    r.c[0] += s;
    r
});
jet_scalar_op!(Sub, sub, |a, s| {
    let mut r = a.clone();
    r.c[0] -= s;
    r
});
jet_scalar_op!(Mul, mul, |a, s| a.scale(s));
jet_scalar_op!(Div, div, |a, s| a.scale(T::one() / s));

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(mut self) -> Jet<T> {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -(self.clone())
    }
}

impl<T: Real> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        let order = self.binary_order(rhs);
        if order < self.order {
            *self = self.truncate(order as usize);
        }
        for (a, &b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
    }
}

impl<T: Real> AddAssign<Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: Jet<T>) {
        *self += &rhs;
    }
}

impl<T: Real> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        let order = self.binary_order(rhs);
        if order < self.order {
            *self = self.truncate(order as usize);
        }
        for (a, &b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
    }
}

impl<T: Real> SubAssign<Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: Jet<T>) {
        *self -= &rhs;
    }
}

impl<T: Real> MulAssign<T> for Jet<T> {
    fn mul_assign(&mut self, s: T) {
        for x in self.c.iter_mut() {
            *x *= s;
        }
    }
}

macro_rules! scalar_lhs {
    ($t:ty) => {
        impl Add<Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn add(self, rhs: Jet<$t>) -> Jet<$t> {
                rhs + self
            }
        }
        impl Add<&Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn add(self, rhs: &Jet<$t>) -> Jet<$t> {
                rhs + self
            }
        }
        impl Sub<Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn sub(self, rhs: Jet<$t>) -> Jet<$t> {
                -rhs + self
            }
        }
        impl Sub<&Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn sub(self, rhs: &Jet<$t>) -> Jet<$t> {
                -rhs + self
            }
        }
        impl Mul<Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn mul(self, rhs: Jet<$t>) -> Jet<$t> {
                rhs.scale(self)
            }
        }
        impl Mul<&Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn mul(self, rhs: &Jet<$t>) -> Jet<$t> {
                rhs.scale(self)
            }
        }
        impl Div<Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn div(self, rhs: Jet<$t>) -> Jet<$t> {
                rhs.recip().scale(self)
            }
        }
        impl Div<&Jet<$t>> for $t {
            type Output = Jet<$t>;
            fn div(self, rhs: &Jet<$t>) -> Jet<$t> {
                rhs.recip().scale(self)
            }
        }
    };
}

scalar_lhs!(f32);
scalar_lhs!(f64);

/// Sum of jets sharing one layout; `zero` supplies the layout for empty input.
pub fn jet_sum<T: Real>(zero: &Jet<T>, terms: impl IntoIterator<Item = Jet<T>>) -> Jet<T> {
    let mut acc = zero.zero_like();
    for t in terms {
        acc += &t;
    }
    acc
}
