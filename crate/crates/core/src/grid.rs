//! Periodic grid, nodal fields and Fourier multipliers.
//!
//! Every derivative is taken spectrally. Coefficients follow the usual FFT
//! ordering, with index `j` carrying wavenumber `2 pi j' / L` where
//! `j' = j` for `j < n/2` and `j' = j - n` otherwise, so the unpaired
//! Nyquist mode sits at `-n/2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid on `[0, L)`.
pub struct Grid<T: Real> {
    length: T,
    n: usize,
    wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl<T: Real> Grid<T> {
    /// Builds a grid with `n` nodes (even, at least 16) on a period `length`.
    pub fn new(length: T, n: usize) -> Result<Arc<Self>> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 16")));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length = {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base = T::lit(2.0) * T::PI() / length;
        let wavenumbers = (0..n)
            .map(|j| base * T::lit(signed_index(j, n) as f64))
            .collect();
        Ok(Arc::new(Grid {
            length,
            n,
            wavenumbers,
            forward,
            inverse,
        }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn dx(&self) -> T {
        self.length / T::count(self.n)
    }

    /// Node coordinates `x_i = i dx`.
    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        let dx = self.dx();
        (0..self.n).map(move |i| T::count(i) * dx)
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Largest resolved wavenumber magnitude (the Nyquist wavenumber).
    pub fn k_max(&self) -> T {
        T::PI() / self.dx()
    }

    /// Index of the Nyquist coefficient.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Highest mode index kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        (self.n - 1) / 3
    }

    /// Normalized forward transform: `c_j = (1/n) sum_i f_i e^{-i k_j x_i}`.
    pub fn transform(&self, values: &[T]) -> Vec<Complex<T>> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        let scale = T::one() / T::count(self.n);
        for c in &mut buf {
            *c = c.scale(scale);
        }
        buf
    }

    /// Inverse of [`Grid::transform`], keeping the real part.
    pub fn synthesize(&self, mut coeffs: Vec<Complex<T>>) -> Vec<T> {
        debug_assert_eq!(coeffs.len(), self.n);
        self.inverse.process(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }
}

pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real nodal values on a periodic grid.
#[derive(Clone)]
pub struct Field<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl<T: Real> PartialEq for Field<T> {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl<T: Real> Field<T> {
    pub fn from_values(grid: &Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("field values must be finite".into()));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().map(f).collect();
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Arc<Grid<T>>, c: T) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    /// Builds a field from FFT-ordered coefficients (normalized as in [`Grid::transform`]).
    pub fn from_spectrum(grid: &Arc<Grid<T>>, coeffs: Vec<Complex<T>>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: grid.synthesize(coeffs),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn spectrum(&self) -> Vec<Complex<T>> {
        self.grid.transform(&self.values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.same_grid(other), "fields live on different grids");
        Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: T, other: &Self) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().fold(T::zero(), |a, b| a + b) / T::count(self.values.len())
    }

    /// Discrete `L^2` inner product `sum f_i g_i dx`.
    pub fn inner(&self, other: &Self) -> T {
        assert!(self.same_grid(other), "fields live on different grids");
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        s * self.grid.dx()
    }

    pub fn l2_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    /// Applies a real even Fourier symbol `k -> m(k)`.
    pub fn multiplier(&self, symbol: impl Fn(T) -> T) -> Self {
        let mut c = self.spectrum();
        for (cj, &k) in c.iter_mut().zip(self.grid.wavenumbers()) {
            *cj = cj.scale(symbol(k));
        }
        Field::from_spectrum(&self.grid, c)
    }

    /// Applies `(i k)^order`; odd orders annihilate the Nyquist mode.
    fn derivative(&self, order: u32) -> Self {
        let mut c = self.spectrum();
        let nyq = self.grid.nyquist();
        for (j, (cj, &k)) in c.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            if order % 2 == 1 && j == nyq {
                *cj = Complex::new(T::zero(), T::zero());
                continue;
            }
            let ik = Complex::new(T::zero(), k);
            let mut factor = Complex::new(T::one(), T::zero());
            for _ in 0..order {
                factor = factor * ik;
            }
            *cj = *cj * factor;
        }
        Field::from_spectrum(&self.grid, c)
    }

    pub fn ddx(&self) -> Self {
        self.derivative(1)
    }

    pub fn ddx2(&self) -> Self {
        self.derivative(2)
    }

    pub fn ddx3(&self) -> Self {
        self.derivative(3)
    }

    /// Bessel potential `Lambda^s = (1 - d_xx)^{s/2}`.
    pub fn lambda_s(&self, s: T) -> Self {
        if s == T::zero() {
            return self.clone();
        }
        let half = s / T::lit(2.0);
        self.multiplier(|k| (T::one() + k * k).powf(half))
    }

    /// 2/3-rule filter: zeroes every mode above [`Grid::dealias_cutoff`].
    pub fn dealias(&self) -> Self {
        let cut = self.grid.dealias_cutoff() as i64;
        let n = self.grid.len();
        let mut c = self.spectrum();
        for (j, cj) in c.iter_mut().enumerate() {
            if signed_index(j, n).abs() > cut {
                *cj = Complex::new(T::zero(), T::zero());
            }
        }
        Field::from_spectrum(&self.grid, c)
    }

    /// Exact translation `x -> f(x - a)` by modal phase factors.
    ///
    /// The Nyquist coefficient is multiplied by `cos(k a)`, the real part of its
    /// phase factor, which keeps the output real.
    pub fn shift(&self, a: T) -> Self {
        let mut c = self.spectrum();
        let nyq = self.grid.nyquist();
        for (j, (cj, &k)) in c.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            let phase = -k * a;
            if j == nyq {
                *cj = cj.scale(phase.cos());
            } else {
                *cj = *cj * Complex::new(phase.cos(), phase.sin());
            }
        }
        Field::from_spectrum(&self.grid, c)
    }

    /// `|Lambda^s f|_{L^2}` evaluated through Parseval.
    pub fn sobolev_norm(&self, s: T) -> T {
        let c = self.spectrum();
        let sum = c
            .iter()
            .zip(self.grid.wavenumbers())
            .fold(T::zero(), |acc, (cj, &k)| acc + (T::one() + k * k).powf(s) * cj.norm_sqr());
        (sum * self.grid.length()).sqrt()
    }

    /// `sqrt(|f|^2 + mu |f_x|^2)`.
    pub fn h1mu_norm(&self, mu: T) -> T {
        let dx = self.ddx();
        (self.inner(self) + mu * dx.inner(&dx)).sqrt()
    }

    /// Writes `x,value` rows with 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(out, "{},{}", fmt17(x), fmt17(*v))?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

impl<'a, T: Real> Add<&'a Field<T>> for &'a Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: &'a Field<T>) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a, T: Real> Sub<&'a Field<T>> for &'a Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: &'a Field<T>) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<'a, T: Real> Mul<&'a Field<T>> for &'a Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: &'a Field<T>) -> Field<T> {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|v| -v)
    }
}

/// Model unknowns: interface deformation and shear mean velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T: Real> {
    pub zeta: Field<T>,
    pub v: Field<T>,
}

impl<T: Real> State<T> {
    pub fn new(zeta: Field<T>, v: Field<T>) -> Result<Self> {
        if !zeta.same_grid(&v) {
            return Err(Error::GridMismatch);
        }
        Ok(State { zeta, v })
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        State {
            zeta: Field::zeros(grid),
            v: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.zeta.grid()
    }

    pub fn add_scaled(&self, a: T, other: &Self) -> Self {
        State {
            zeta: self.zeta.add_scaled(a, &other.zeta),
            v: self.v.add_scaled(a, &other.v),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        State {
            zeta: self.zeta.scale(a),
            v: self.v.scale(a),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-T::one(), other)
    }

    /// `|U|_{X^s}^2 = |zeta|_{H^s}^2 + |v|_{H^s}^2 + mu |v_x|_{H^s}^2`.
    pub fn xs_norm(&self, s: T, mu: T) -> T {
        let [a, b, c] = self.xs_terms(s, mu);
        (a + b + c).sqrt()
    }

    /// The three squared contributions of [`State::xs_norm`].
    pub fn xs_terms(&self, s: T, mu: T) -> [T; 3] {
        let z = self.zeta.sobolev_norm(s);
        let v = self.v.sobolev_norm(s);
        let vx = self.v.ddx().sobolev_norm(s);
        [z * z, v * v, mu * vx * vx]
    }

    pub fn max_abs(&self) -> T {
        self.zeta.max_abs().max(self.v.max_abs())
    }
}
