//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] is the Taylor polynomial of a smooth function of `n` variables
//! about a base point, truncated at total degree `order`. Arithmetic and the
//! elementary functions propagate every mixed partial derivative up to that
//! order at once, so a metric written as an ordinary closure over jets yields
//! its exact first, second, third (and fourth) derivatives.
//!
//! Coefficients are stored in graded order: the constant term, then all
//! monomials of degree one, then degree two, and so on. A jet of order `r`
//! is therefore a prefix of the coefficient table of any higher order, which
//! makes truncation free and lets mixed-order arithmetic work on prefixes.
//!
//! ```
//! use soliton_core::jet::Jet;
//!
//! // f(x, y) = x^2 y + sin(y) about (1, 0), to order 3.
//! let p = Jet::seed(&[1.0, 0.0], 3);
//! let f = &p[0] * &p[0] * &p[1] + p[1].sin();
//! assert_eq!(f.value(), 0.0);
//! assert!((f.partial(&[1]) - 2.0).abs() < 1e-15); // x^2 + cos y
//! assert!((f.partial(&[0, 1]) - 2.0).abs() < 1e-15); // 2x
//! assert!((f.partial(&[1, 1, 1]) + 1.0).abs() < 1e-15); // -cos y
//! ```

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use smallvec::{smallvec, SmallVec};

/// Highest total degree any jet can carry.
pub const MAX_ORDER: usize = 5;
/// Largest number of independent variables.
pub const MAX_VARS: usize = 8;

type Exponents = SmallVec<[u8; MAX_VARS]>;

/// Monomial bookkeeping shared by every jet in `nvars` variables.
pub struct JetSpace {
    nvars: usize,
    exponents: Vec<Exponents>,
    /// `degree_end[d]` = number of monomials of degree `<= d`.
    degree_end: Vec<usize>,
    /// `(i, j, k)`: monomial i times monomial j is monomial k; sorted by deg k.
    products: Vec<(u32, u32, u32)>,
    /// `product_end[d]` = number of products whose result has degree `<= d`.
    product_end: Vec<usize>,
    /// `shifts[v][m]` = index of `m + e_v`, for monomials of degree `< MAX_ORDER`.
    shifts: Vec<Vec<u32>>,
    /// `alpha!` for every monomial.
    factorials: Vec<f64>,
}

impl JetSpace {
    fn build(nvars: usize) -> JetSpace {
        let mut exponents: Vec<Exponents> = Vec::new();
        let mut degree_end = Vec::with_capacity(MAX_ORDER + 1);
        for d in 0..=MAX_ORDER {
            let mut current: Exponents = smallvec![0; nvars];
            push_monomials(nvars, 0, d, &mut current, &mut exponents);
            degree_end.push(exponents.len());
        }
        let index_of = |e: &[u8]| -> Option<usize> {
            let deg: usize = e.iter().map(|&k| k as usize).sum();
            if deg > MAX_ORDER {
                return None;
            }
            let start = if deg == 0 { 0 } else { degree_end[deg - 1] };
            exponents[start..degree_end[deg]]
                .iter()
                .position(|m| m.as_slice() == e)
                .map(|p| p + start)
        };

        let degree = |m: &Exponents| -> usize { m.iter().map(|&k| k as usize).sum() };
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            for (j, b) in exponents.iter().enumerate() {
                if degree(a) + degree(b) > MAX_ORDER {
                    continue;
                }
                let sum: Exponents = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                let k = index_of(&sum).expect("product monomial in range");
                products.push((i as u32, j as u32, k as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| degree(&exponents[k as usize]));
        let product_end = (0..=MAX_ORDER)
            .map(|d| {
                products
                    .iter()
                    .take_while(|&&(_, _, k)| degree(&exponents[k as usize]) <= d)
                    .count()
            })
            .collect();

        let shifts = (0..nvars)
            .map(|v| {
                exponents[..degree_end[MAX_ORDER - 1]]
                    .iter()
                    .map(|m| {
                        let mut up = m.clone();
                        up[v] += 1;
                        index_of(&up).expect("shifted monomial in range") as u32
                    })
                    .collect()
            })
            .collect();

        let factorials = exponents
            .iter()
            .map(|m| m.iter().map(|&k| factorial(k as usize)).product())
            .collect();

        JetSpace {
            nvars,
            exponents,
            degree_end,
            products,
            product_end,
            shifts,
            factorials,
        }
    }

    /// Shared space for `nvars` variables, built on first use.
    pub fn get(nvars: usize) -> &'static JetSpace {
        assert!(
            (1..=MAX_VARS).contains(&nvars),
            "jets support 1..={MAX_VARS} variables, got {nvars}"
        );
        static SPACES: OnceLock<Mutex<Vec<Option<&'static JetSpace>>>> = OnceLock::new();
        let table = SPACES.get_or_init(|| Mutex::new(vec![None; MAX_VARS + 1]));
        let mut guard = table.lock().expect("jet space table poisoned");
        guard[nvars].get_or_insert_with(|| Box::leak(Box::new(JetSpace::build(nvars))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    fn index_of(&self, e: &[u8]) -> Option<usize> {
        let deg: usize = e.iter().map(|&k| k as usize).sum();
        if deg > MAX_ORDER {
            return None;
        }
        let start = if deg == 0 { 0 } else { self.degree_end[deg - 1] };
        self.exponents[start..self.degree_end[deg]]
            .iter()
            .position(|m| m.as_slice() == e)
            .map(|p| p + start)
    }
}

fn push_monomials(nvars: usize, var: usize, remaining: usize, cur: &mut Exponents, out: &mut Vec<Exponents>) {
    if var == nvars - 1 {
        cur[var] = remaining as u8;
        out.push(cur.clone());
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_monomials(nvars, var + 1, remaining - k, cur, out);
    }
    cur[var] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Truncated Taylor polynomial about a base point.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    order: u8,
    coeffs: SmallVec<[f64; 4]>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.space.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs.as_slice())
            .finish()
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let space = JetSpace::get(nvars);
        let mut coeffs = smallvec![0.0; space.len(order)];
        coeffs[0] = value;
        Jet {
            space,
            order: order as u8,
            coeffs,
        }
    }

    /// The coordinate function `x_index` expanded about `value`.
    pub fn variable(nvars: usize, order: usize, index: usize, value: f64) -> Jet {
        assert!(index < nvars);
        let mut jet = Jet::constant(nvars, order, value);
        if order >= 1 {
            jet.coeffs[1 + index] = 1.0;
        }
        jet
    }

    /// All coordinate functions expanded about `point`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(n, order, i, v))
            .collect()
    }

    /// A constant living in the same space and order as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        Jet::constant(self.space.nvars, self.order(), value)
    }

    pub fn zero_like(&self) -> Jet {
        self.constant_like(0.0)
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Mixed partial derivative at the base point; `vars` lists the
    /// differentiation variables with repetition (`[0, 0, 1]` is ∂x∂x∂y).
    /// Returns 0 beyond the jet's order.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut e: Exponents = smallvec![0; self.space.nvars];
        for &v in vars {
            e[v] += 1;
        }
        if vars.len() > self.order() {
            return 0.0;
        }
        let k = self.space.index_of(&e).expect("monomial in range");
        self.coeffs[k] * self.space.factorials[k]
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars()).map(|v| self.partial(&[v])).collect()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        Jet {
            space: self.space,
            order: order as u8,
            coeffs: SmallVec::from_slice(&self.coeffs[..self.space.len(order)]),
        }
    }

    /// Partial derivative in variable `v`; the order drops by one.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order() - 1;
        let len = self.space.len(order);
        let shift = &self.space.shifts[v];
        let coeffs = (0..len)
            .map(|m| {
                let up = shift[m] as usize;
                let mult = self.space.exponents[up][v] as f64;
                mult * self.coeffs[up]
            })
            .collect();
        Jet {
            space: self.space,
            order: order as u8,
            coeffs,
        }
    }

    fn check_space(&self, other: &Jet) {
        assert!(
            std::ptr::eq(self.space, other.space),
            "mixing jets in {} and {} variables",
            self.space.nvars,
            other.space.nvars
        );
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let len = self.space.len(order as usize);
        let coeffs = (0..len).map(|k| op(self.coeffs[k], other.coeffs[k])).collect();
        Jet {
            space: self.space,
            order,
            coeffs,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        if order == 0 {
            return Jet {
                space: self.space,
                order,
                coeffs: smallvec![self.coeffs[0] * other.coeffs[0]],
            };
        }
        let space = self.space;
        let mut out: SmallVec<[f64; 4]> = smallvec![0.0; space.len(order as usize)];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &space.products[..space.product_end[order as usize]] {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            space,
            order,
            coeffs: out,
        }
    }

    fn map_coeffs(&self, op: impl Fn(f64) -> f64) -> Jet {
        Jet {
            space: self.space,
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| op(c)).collect(),
        }
    }

    /// `g(self)` where `series[k] = g^(k)(self.value()) / k!`.
    pub fn compose(&self, series: &[f64]) -> Jet {
        let order = self.order();
        assert!(series.len() > order, "series too short for order {order}");
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.constant_like(series[order]);
        for k in (0..order).rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    fn series_from_derivatives(&self, derivs: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..=self.order()).map(|k| derivs(k) / factorial(k)).collect()
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let series: Vec<f64> = (0..=self.order())
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
            .collect();
        self.compose(&series)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series = self.series_from_derivatives(|_| e);
        self.compose(&series)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let series: Vec<f64> = (0..=self.order())
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.compose(&series)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let series = self.series_from_derivatives(|k| [s, c, -s, -c][k % 4]);
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let series = self.series_from_derivatives(|k| [c, -s, -c, s][k % 4]);
        self.compose(&series)
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let series = self.series_from_derivatives(|k| if k % 2 == 0 { s } else { c });
        self.compose(&series)
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let series = self.series_from_derivatives(|k| if k % 2 == 0 { c } else { s });
        self.compose(&series)
    }

    pub fn tanh(&self) -> Jet {
        self.sinh() / self.cosh()
    }

    /// `self^p` for real `p`; the base value must be positive unless `p` is
    /// a non-negative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            series.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&series)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, k: i32) -> Jet {
        let mut acc = self.constant_like(1.0);
        for _ in 0..k.unsigned_abs() {
            acc = acc.product(self);
        }
        if k < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn square(&self) -> Jet {
        self.product(self)
    }
}

macro_rules! binary_ops {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binary_ops!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
binary_ops!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
binary_ops!(Mul, mul, |a, b| a.product(b));
binary_ops!(Div, div, |a, b| a.product(&b.recip()));

macro_rules! scalar_ops {
    ($t:ty) => {
        impl Add<f64> for $t {
            type Output = Jet;
            fn add(self, rhs: f64) -> Jet {
                let mut out = self.clone();
                out.coeffs[0] += rhs;
                out
            }
        }
        impl Sub<f64> for $t {
            type Output = Jet;
            fn sub(self, rhs: f64) -> Jet {
                let mut out = self.clone();
                out.coeffs[0] -= rhs;
                out
            }
        }
        impl Mul<f64> for $t {
            type Output = Jet;
            fn mul(self, rhs: f64) -> Jet {
                self.map_coeffs(|c| c * rhs)
            }
        }
        impl Div<f64> for $t {
            type Output = Jet;
            fn div(self, rhs: f64) -> Jet {
                self.map_coeffs(|c| c / rhs)
            }
        }
        impl Add<$t> for f64 {
            type Output = Jet;
            fn add(self, rhs: $t) -> Jet {
                rhs + self
            }
        }
        impl Sub<$t> for f64 {
            type Output = Jet;
            fn sub(self, rhs: $t) -> Jet {
                -(rhs - self)
            }
        }
        impl Mul<$t> for f64 {
            type Output = Jet;
            fn mul(self, rhs: $t) -> Jet {
                rhs * self
            }
        }
        impl Div<$t> for f64 {
            type Output = Jet;
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn div(self, rhs: $t) -> Jet {
                rhs.recip() * self
            }
        }
        impl Neg for $t {
            type Output = Jet;
            fn neg(self) -> Jet {
                self.map_coeffs(|c| -c)
            }
        }
    };
}

scalar_ops!(Jet);
scalar_ops!(&Jet);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.check_space(rhs);
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(self.space.len(self.order as usize));
        }
        for (c, r) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *c += r;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.check_space(rhs);
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(self.space.len(self.order as usize));
        }
        for (c, r) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *c -= r;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

impl Jet {
    /// `self += a * b` without an intermediate allocation for order 0.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        if self.order == 0 || a.order == 0 || b.order == 0 {
            self.coeffs.truncate(1);
            self.order = 0;
            self.coeffs[0] += a.coeffs[0] * b.coeffs[0];
        } else {
            *self += a.product(b);
        }
    }
}
