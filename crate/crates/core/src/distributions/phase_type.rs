use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::ClaimLaw;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, Complex, Matrix, Vector};

/// Absorption time of a terminating Markov chain with initial law `alpha`
/// and subintensity matrix `t`.
#[derive(Debug, Clone)]
pub struct PhaseType {
    alpha: Vector,
    t: Matrix,
    exit: Vector,
    mean: f64,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
struct Sampler {
    initial_cdf: Vec<f64>,
    rates: Vec<f64>,
    /// Per state, cumulative jump probabilities; the last slot is absorption.
    jump_cdf: Vec<Vec<f64>>,
}

impl PhaseType {
    pub fn new(alpha: Vector, t: Matrix) -> Result<Self> {
        let n = alpha.len();
        if n == 0 || t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "alpha has {} entries, T is {}x{}",
                n,
                t.nrows(),
                t.ncols()
            )));
        }
        if alpha.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite PH entry".into()));
        }
        let sum: f64 = alpha.iter().sum();
        if alpha.iter().any(|&a| a < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NonStochasticAlpha { sum });
        }
        let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            if t[(i, i)] >= 0.0 {
                return Err(Error::InvalidSubintensity(format!(
                    "diagonal entry {i} is {} (must be negative)",
                    t[(i, i)]
                )));
            }
            for j in 0..n {
                if i != j && t[(i, j)] < 0.0 {
                    return Err(Error::InvalidSubintensity(format!(
                        "off-diagonal entry ({i},{j}) is negative"
                    )));
                }
            }
            let row: f64 = t.row(i).iter().sum();
            if row > 1e-12 * scale {
                return Err(Error::InvalidSubintensity(format!("row {i} sums to {row} > 0")));
            }
        }
        let lu = t.clone().lu();
        let ones = DVector::from_element(n, 1.0);
        let x = lu
            .solve(&ones)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::InvalidSubintensity("T is singular".into()))?;
        let mean = -alpha.dot(&x);
        if !(mean > 0.0) || lu.determinant().abs() < 1e-300 {
            return Err(Error::InvalidSubintensity("T is singular".into()));
        }
        let exit = -(&t * &ones);
        let exit = exit.map(|v| v.max(0.0));
        let sampler = Sampler::build(&alpha, &t, &exit);
        Ok(Self {
            alpha,
            t,
            exit,
            mean,
            sampler,
        })
    }

    /// Convenience constructor from nested slices.
    pub fn from_rows(alpha: &[f64], rows: &[Vec<f64>]) -> Result<Self> {
        let n = alpha.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("T must be square and match alpha".into()));
        }
        let t = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(DVector::from_column_slice(alpha), t)
    }

    pub fn exponential(rate: f64) -> Self {
        Self::from_rows(&[1.0], &[vec![-rate]]).expect("positive rate")
    }

    pub fn erlang(k: usize, rate: f64) -> Self {
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = -rate;
            if i + 1 < k {
                t[(i, i + 1)] = rate;
            }
        }
        let mut a = DVector::zeros(k);
        a[0] = 1.0;
        Self::new(a, t).expect("valid Erlang")
    }

    pub fn alpha(&self) -> &Vector {
        &self.alpha
    }

    pub fn subintensity(&self) -> &Matrix {
        &self.t
    }

    pub fn exit(&self) -> &Vector {
        &self.exit
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha e^{T x}`.
    pub fn state_at(&self, x: f64) -> Vector {
        let e = (&self.t * x).exp();
        e.transpose() * &self.alpha
    }

    /// `E[X^k] = k! alpha (-T)^{-k} 1`.
    pub fn moment(&self, k: u32) -> f64 {
        let lu = (-&self.t).lu();
        let mut v = DVector::from_element(self.phases(), 1.0);
        let mut fact = 1.0;
        for j in 1..=k {
            v = lu.solve(&v).expect("T invertible");
            fact *= j as f64;
        }
        fact * self.alpha.dot(&v)
    }

    /// `alpha (sI - T)^{-1} t`.
    pub fn lst(&self, s: Complex) -> Result<Complex> {
        let m = self.resolvent(s)?;
        let a = self.alpha.map(|v| Complex::new(v, 0.0));
        Ok(a.dot(&m))
    }

    /// `(sI - T)^{-1} t`, or `(sI - T)^{-k} t` for `power = k`.
    fn resolvent_power(&self, s: Complex, power: usize) -> Result<CVector> {
        let n = self.phases();
        let m = CMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { s } else { Complex::new(0.0, 0.0) };
            d - self.t[(i, j)]
        });
        let lu = m.lu();
        let mut v = self.exit.map(|x| Complex::new(x, 0.0));
        for _ in 0..power {
            v = lu
                .solve(&v)
                .filter(|x| x.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
                .ok_or_else(|| Error::SingularResolvent(s.to_string()))?;
        }
        Ok(v)
    }

    fn resolvent(&self, s: Complex) -> Result<CVector> {
        self.resolvent_power(s, 1)
    }

    /// Derivative of [`PhaseType::lst`]: `-alpha (sI - T)^{-2} t`.
    pub fn lst_derivative(&self, s: Complex) -> Result<Complex> {
        let v = self.resolvent_power(s, 2)?;
        let a = self.alpha.map(|v| Complex::new(v, 0.0));
        Ok(-a.dot(&v))
    }

    /// Equilibrium law `PH(pi, T)` with `pi = alpha (-T)^{-1} / mean`.
    pub fn equilibrium(&self) -> PhaseType {
        let lu = (-self.t.transpose()).lu();
        let pi = lu.solve(&self.alpha).expect("T invertible") / self.mean;
        let pi = pi.map(|v| v.max(0.0));
        let pi = &pi / pi.sum();
        PhaseType::new(pi, self.t.clone()).expect("equilibrium of a valid PH is valid")
    }
}

impl ClaimLaw for PhaseType {
    fn mean(&self) -> f64 {
        self.mean
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        1.0 - self.tail(x)
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.state_at(x).sum().clamp(0.0, 1.0)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.state_at(x).dot(&self.exit).max(0.0)
    }

    fn equilibrium_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        // ∫_x^∞ alpha e^{Ty} 1 dy = alpha e^{Tx} (-T)^{-1} 1
        let lu = (-&self.t).lu();
        let w = lu
            .solve(&DVector::from_element(self.phases(), 1.0))
            .expect("T invertible");
        (self.state_at(x).dot(&w) / self.mean).clamp(0.0, 1.0)
    }

    fn equilibrium_lst(&self, s: Complex) -> Result<Complex> {
        self.equilibrium().lst(s)
    }

    fn equilibrium_lst_derivative(&self, s: Complex) -> Result<Complex> {
        self.equilibrium().lst_derivative(s)
    }

    fn tilted_density_integral(&self, s: f64, z: f64) -> Result<f64> {
        // alpha e^{Tz} (sI - T)^{-1} t
        let v = self.resolvent(Complex::new(s, 0.0))?;
        let st = self.state_at(z.max(0.0));
        Ok(st.iter().zip(v.iter()).map(|(a, b)| a * b.re).sum())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler.draw(rng)
    }

    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.equilibrium().sample(rng)
    }
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl Sampler {
    fn build(alpha: &Vector, t: &Matrix, exit: &Vector) -> Self {
        let n = alpha.len();
        let mut acc = 0.0;
        let initial_cdf = alpha
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect();
        let rates: Vec<f64> = (0..n).map(|i| -t[(i, i)]).collect();
        let jump_cdf = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                let mut row: Vec<f64> = (0..n)
                    .map(|j| {
                        if j != i {
                            acc += t[(i, j)] / rates[i];
                        }
                        acc
                    })
                    .collect();
                acc += exit[i] / rates[i];
                row.push(acc);
                row
            })
            .collect();
        Self {
            initial_cdf,
            rates,
            jump_cdf,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.rates.len();
        let mut state = pick(&self.initial_cdf, rng.random::<f64>() * self.initial_cdf[n - 1]);
        let mut x = 0.0;
        loop {
            let u: f64 = rng.random();
            x -= (1.0 - u).ln() / self.rates[state];
            if n == 1 {
                return x;
            }
            let row = &self.jump_cdf[state];
            let next = pick(row, rng.random::<f64>() * row[n]);
            if next == n || next == state {
                return x;
            }
            state = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Quadrature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_basics() {
        let e = PhaseType::exponential(1.0);
        assert_eq!(e.mean(), 1.0);
        assert!((e.cdf(2f64.ln()) - 0.5).abs() < 1e-14);
        assert!((e.lst(Complex::new(1.0, 0.0)).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn erlang_mean_and_density() {
        let e = PhaseType::from_rows(&[1.0, 0.0], &[vec![-2.0, 2.0], vec![0.0, -2.0]]).unwrap();
        assert!((e.mean() - 1.0).abs() < 1e-14);
        assert!((e.pdf(1.0) - 4.0 * (-2f64).exp()).abs() < 1e-12);
        assert!((e.moment(2) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let r = PhaseType::from_rows(&[0.5, 0.6], &[vec![-1.0, 0.0], vec![0.0, -1.0]]);
        assert!(matches!(r, Err(Error::NonStochasticAlpha { .. })));
        let r = PhaseType::from_rows(&[1.0], &[vec![1.0]]);
        assert!(matches!(r, Err(Error::InvalidSubintensity(_))));
        let r = PhaseType::from_rows(&[1.0, 0.0], &[vec![-1.0, -0.5], vec![0.0, -1.0]]);
        assert!(matches!(r, Err(Error::InvalidSubintensity(_))));
        let r = PhaseType::from_rows(&[1.0, 0.0], &[vec![-1.0, 2.0], vec![0.0, -1.0]]);
        assert!(matches!(r, Err(Error::InvalidSubintensity(_))));
        let r = PhaseType::from_rows(&[1.0, 0.0], &[vec![-1.0, 1.0], vec![1.0, -1.0]]);
        assert!(matches!(r, Err(Error::InvalidSubintensity(_))));
    }

    #[test]
    fn equilibrium_of_erlang() {
        let e = PhaseType::erlang(2, 2.0);
        let eq = e.equilibrium();
        assert!((eq.alpha()[0] - 0.5).abs() < 1e-14 && (eq.alpha()[1] - 0.5).abs() < 1e-14);
        let want = e.moment(2) / (2.0 * e.mean());
        assert!((eq.mean() - want).abs() < 1e-12);
        for k in 0..50 {
            let x = 0.2 * k as f64;
            assert!((eq.pdf(x) * e.mean() - e.tail(x)).abs() < 1e-12);
            assert!((eq.tail(x) - e.equilibrium_tail(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn equilibrium_identity_against_quadrature() {
        let p = PhaseType::from_rows(
            &[0.3, 0.7, 0.0],
            &[vec![-3.0, 1.0, 0.5], vec![0.2, -1.5, 0.3], vec![0.0, 0.4, -0.9]],
        )
        .unwrap();
        let eq = p.equilibrium();
        let q = Quadrature::default();
        for k in 0..20 {
            let x = 0.5 * k as f64;
            let tail = q.integrate(|y| p.tail(y), x, f64::INFINITY).unwrap() / p.mean();
            assert!((eq.tail(x) - tail).abs() < 1e-8);
            assert!((eq.pdf(x) - p.tail(x) / p.mean()).abs() < 1e-8);
        }
    }

    #[test]
    fn tilted_density_closed_form() {
        let p = PhaseType::erlang(3, 1.5);
        let q = Quadrature::default();
        for (s, z) in [(0.5, 0.0), (1.0, 1.3), (2.0, 4.0)] {
            let num = q
                .integrate(|y: f64| (-s * y).exp() * p.pdf(z + y), 0.0, f64::INFINITY)
                .unwrap();
            assert!((p.tilted_density_integral(s, z).unwrap() - num).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = PhaseType::erlang(2, 2.0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| e.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - 1.0).abs() < 0.005);
        assert!((v - 0.5).abs() < 0.005);
    }
}
