//! The fixed smooth bump eta(s) = C * exp(-1/(s(1-s))) on (0,1) with unit
//! mass, its exact derivatives, and tabulated antiderivatives.
//!
//! The same bump serves three places: mollifying the stopped Brownian path,
//! mollifying the telegraph signal, and building the smooth step used by the
//! curvature cutoff. Derivatives are exact: eta^(k) = C exp(-1/p) Q_k / p^(2k)
//! with p(s) = s - s^2 and the polynomial recurrence
//! Q_{k+1} = Q_k' p^2 - 2k Q_k p' p + Q_k p'.

use crate::linalg::gl64;
use std::sync::OnceLock;

const MAX_ORDER: usize = 6;
const TAB_LEN: usize = 4096;

#[derive(Clone, Debug)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as f64 + 1.0) * c)
                .collect(),
        )
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|&c| c * s).collect())
    }

    fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, &c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }
}

pub struct Bump {
    norm: f64,
    /// Q_k polynomials of the derivative recurrence.
    q: Vec<Poly>,
    /// Tabulated E0(u) = int_0^u eta and E1(u) = int_0^u s eta(s) ds.
    e0: Vec<f64>,
    e1: Vec<f64>,
}

static BUMP: OnceLock<Bump> = OnceLock::new();

impl Bump {
    /// Shared instance; tables are built once.
    pub fn get() -> &'static Bump {
        BUMP.get_or_init(Bump::build)
    }

    fn build() -> Bump {
        let raw = |s: f64| -> f64 {
            if s <= 0.0 || s >= 1.0 {
                return 0.0;
            }
            let p = s * (1.0 - s);
            (-1.0 / p).exp()
        };
        let p = Poly(vec![0.0, 1.0, -1.0]);
        let p2 = p.mul(&p);
        let dp = Poly(vec![1.0, -2.0]);
        let mut q = vec![Poly(vec![1.0])];
        for k in 0..MAX_ORDER {
            let qk = &q[k];
            let next = qk
                .deriv()
                .mul(&p2)
                .add(&qk.mul(&dp).mul(&p).scale(-2.0 * k as f64))
                .add(&qk.mul(&dp));
            q.push(next);
        }

        // Cumulative tables of the raw bump; the mass from the same pass
        // defines the normalization, so antideriv(0, 1) is exactly 1.
        let mut e0 = vec![0.0; TAB_LEN + 1];
        let mut e1 = vec![0.0; TAB_LEN + 1];
        for i in 0..TAB_LEN {
            let a = i as f64 / TAB_LEN as f64;
            let b = (i + 1) as f64 / TAB_LEN as f64;
            e0[i + 1] = e0[i] + gl64(&raw, a, b);
            e1[i + 1] = e1[i] + gl64(&|s| s * raw(s), a, b);
        }
        let norm = 1.0 / e0[TAB_LEN];
        for v in e0.iter_mut() {
            *v *= norm;
        }
        for v in e1.iter_mut() {
            *v *= norm;
        }
        // x * (1/x) can land one ulp off.
        e0[TAB_LEN] = 1.0;
        Bump { norm, q, e0, e1 }
    }

    /// k-th derivative of the normalized bump at `s`; zero outside (0,1).
    pub fn eval(&self, k: usize, s: f64) -> f64 {
        assert!(k <= MAX_ORDER, "derivative order {k} not supported");
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let p = s * (1.0 - s);
        // exp(-1/p) underflows long before 1/p^(2k) overflows.
        if p < 1.5e-3 {
            return 0.0;
        }
        let core = (-1.0 / p).exp();
        self.norm * core * self.q[k].eval(s) / p.powi(2 * k as i32)
    }

    fn interp(table: &[f64], deriv: &dyn Fn(f64) -> f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return table[TAB_LEN];
        }
        let x = u * TAB_LEN as f64;
        let i = (x as usize).min(TAB_LEN - 1);
        let h = 1.0 / TAB_LEN as f64;
        let t = x - i as f64;
        let u0 = i as f64 * h;
        let f0 = table[i];
        let f1 = table[i + 1];
        let d0 = deriv(u0);
        let d1 = deriv(u0 + h);
        let t2 = t * t;
        let t3 = t2 * t;
        f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * d0 * (t3 - 2.0 * t2 + t)
            + f1 * (-2.0 * t3 + 3.0 * t2)
            + h * d1 * (t3 - t2)
    }

    /// Antiderivative int_0^u eta^(k). Closed form eta^(k-1)(u) for k >= 1.
    pub fn antideriv(&self, k: usize, u: f64) -> f64 {
        if k == 0 {
            Bump::interp(&self.e0, &|s| self.eval(0, s), u)
        } else {
            self.eval(k - 1, u)
        }
    }

    /// First-moment antiderivative int_0^u s * eta^(k)(s) ds.
    pub fn moment_antideriv(&self, k: usize, u: f64) -> f64 {
        let uc = u.clamp(0.0, 1.0);
        match k {
            0 => Bump::interp(&self.e1, &|s| s * self.eval(0, s), u),
            1 => uc * self.eval(0, uc) - self.antideriv(0, u),
            _ => uc * self.eval(k - 1, uc) - self.eval(k - 2, uc),
        }
    }

    /// Smooth step: 0 for u <= 0, 1 for u >= 1, strictly increasing between.
    pub fn smooth_step(&self, u: f64) -> f64 {
        self.antideriv(0, u).clamp(0.0, 1.0)
    }

    /// sup_s |eta^(k)(s)| by dense sampling.
    pub fn sup_norm(&self, k: usize) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| self.eval(k, i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Sum_{i<=k} sup |eta^(i)|.
    pub fn ck_norm(&self, k: usize) -> f64 {
        (0..=k).map(|i| self.sup_norm(i)).sum()
    }

    /// int_0^1 |eta^(k)| by dense trapezoid.
    pub fn l1_norm(&self, k: usize) -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let a = self.eval(k, i as f64 * h).abs();
            let b = self.eval(k, (i + 1) as f64 * h).abs();
            s += 0.5 * (a + b) * h;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_symmetry() {
        let b = Bump::get();
        assert!((b.antideriv(0, 1.0) - 1.0).abs() < 1e-10);
        for &s in &[0.1, 0.25, 0.4] {
            assert!((b.eval(0, s) - b.eval(0, 1.0 - s)).abs() < 1e-12);
        }
        assert_eq!(b.eval(0, -0.5), 0.0);
        assert_eq!(b.eval(0, 1.5), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = Bump::get();
        let h = 1e-5;
        for k in 0..=4usize {
            for &s in &[0.2, 0.35, 0.5, 0.65, 0.8] {
                let fd = (b.eval(k, s + h) - b.eval(k, s - h)) / (2.0 * h);
                let exact = b.eval(k + 1, s);
                let scale = 1.0 + exact.abs();
                assert!(
                    (fd - exact).abs() / scale < 1e-4,
                    "k={k} s={s} fd={fd} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn antiderivative_consistency() {
        let b = Bump::get();
        // d/du E1 = u eta(u).
        let u = 0.37;
        let h = 1e-6;
        let fd = (b.moment_antideriv(0, u + h) - b.moment_antideriv(0, u - h)) / (2.0 * h);
        assert!((fd - u * b.eval(0, u)).abs() < 1e-7);
        // Moment antiderivative for k=1 via parts.
        let fd1 = (b.moment_antideriv(1, u + h) - b.moment_antideriv(1, u - h)) / (2.0 * h);
        assert!((fd1 - u * b.eval(1, u)).abs() < 1e-6);
        // And for k=2.
        let fd2 = (b.moment_antideriv(2, u + h) - b.moment_antideriv(2, u - h)) / (2.0 * h);
        assert!((fd2 - u * b.eval(2, u)).abs() < 2e-4);
    }

    #[test]
    fn smooth_step_shape() {
        let b = Bump::get();
        assert_eq!(b.smooth_step(-1.0), 0.0);
        assert_eq!(b.smooth_step(2.0), 1.0);
        assert!((b.smooth_step(0.5) - 0.5).abs() < 1e-10);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = b.smooth_step(i as f64 / 100.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }
}
