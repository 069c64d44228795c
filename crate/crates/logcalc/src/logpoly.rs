//! Finite formal sums of monomials `x_1^{e_1} (log x_1)^{k_1} ...` with
//! coefficients in a finite-dimensional space over [`PolyScalar`].
//!
//! This is the materialized counterpart of the lazy [`crate::series`]
//! engine: every object here has finitely many terms, so all operator
//! manipulations (graded exponentials, `x^{±L(0)}`, phase substitutions,
//! inversion of the variable) stay exact and total.

use std::collections::BTreeMap;

use crate::comb::factorial_scalar;
use crate::error::CalcError;
use crate::matrix::Matrix;
use crate::polyscalar::PolyScalar;
use crate::scalar::Scalar;

/// Per-variable (exponent, log power).
pub type MKey = Vec<(Scalar, u32)>;

#[derive(Clone, PartialEq)]
pub struct LogPoly {
    pub nvars: usize,
    pub dim: usize,
    pub terms: BTreeMap<MKey, Vec<PolyScalar>>,
}

fn vec_is_zero(v: &[PolyScalar]) -> bool {
    v.iter().all(|c| c.is_zero())
}

impl LogPoly {
    pub fn zero(nvars: usize, dim: usize) -> Self {
        LogPoly {
            nvars,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant_key(nvars: usize) -> MKey {
        vec![(Scalar::zero(), 0); nvars]
    }

    /// A single vector placed at the constant monomial.
    pub fn from_vec(nvars: usize, v: Vec<PolyScalar>) -> Self {
        let dim = v.len();
        let mut p = LogPoly::zero(nvars, dim);
        p.add_term(&LogPoly::constant_key(nvars), &v);
        p
    }

    pub fn from_scalar_vec(nvars: usize, v: &[Scalar]) -> Self {
        LogPoly::from_vec(
            nvars,
            v.iter().map(|s| PolyScalar::constant(s.clone())).collect(),
        )
    }

    /// Basis vector `e_i` at the constant monomial.
    pub fn basis(nvars: usize, dim: usize, i: usize) -> Self {
        let mut v = vec![PolyScalar::zero(); dim];
        v[i] = PolyScalar::one();
        LogPoly::from_vec(nvars, v)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: &MKey, v: &[PolyScalar]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(key.len(), self.nvars);
        if vec_is_zero(v) {
            return;
        }
        let entry = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| vec![PolyScalar::zero(); self.dim]);
        for (e, c) in entry.iter_mut().zip(v) {
            *e = e.clone() + c;
        }
        if vec_is_zero(entry) {
            self.terms.remove(key);
        }
    }

    pub fn coeff(&self, key: &MKey) -> Vec<PolyScalar> {
        self.terms
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![PolyScalar::zero(); self.dim])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k, v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LogPoly {
            nvars: self.nvars,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|c| -c.clone()).collect()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &PolyScalar) -> Self {
        if s.is_zero() {
            return LogPoly::zero(self.nvars, self.dim);
        }
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let sv: Vec<PolyScalar> = v.iter().map(|c| c.clone() * s).collect();
            out.add_term(k, &sv);
        }
        out
    }

    pub fn scale_scalar(&self, s: &Scalar) -> Self {
        self.scale(&PolyScalar::constant(s.clone()))
    }

    /// Apply an exact scalar matrix to every coefficient vector.
    pub fn apply(&self, m: &Matrix<Scalar>) -> Self {
        assert_eq!(m.cols, self.dim);
        let mut out = LogPoly::zero(self.nvars, m.rows);
        for (k, v) in &self.terms {
            let mut res = vec![PolyScalar::zero(); m.rows];
            for (j, c) in v.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for i in 0..m.rows {
                    let e = m.get(i, j);
                    if !e.is_zero() {
                        res[i] = res[i].clone() + &c.scale(e);
                    }
                }
            }
            out.add_term(k, &res);
        }
        out
    }

    /// Apply a matrix over PolyScalar.
    pub fn apply_poly(&self, m: &Matrix<PolyScalar>) -> Self {
        assert_eq!(m.cols, self.dim);
        let mut out = LogPoly::zero(self.nvars, m.rows);
        for (k, v) in &self.terms {
            let mut res = vec![PolyScalar::zero(); m.rows];
            for (j, c) in v.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for i in 0..m.rows {
                    let e = m.get(i, j);
                    if !e.is_zero() {
                        res[i] = res[i].clone() + &(c.clone() * e);
                    }
                }
            }
            out.add_term(k, &res);
        }
        out
    }

    /// Multiply by `x_var^{de} (log x_var)^{dk}`.
    pub fn mul_mono(&self, var: usize, de: &Scalar, dk: u32) -> Self {
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let mut key = k.clone();
            key[var].0 = &key[var].0 + de;
            key[var].1 += dk;
            out.add_term(&key, v);
        }
        out
    }

    /// Formal derivative in `var`, acting on both the power and the log.
    pub fn deriv(&self, var: usize) -> Self {
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let (e, l) = k[var].clone();
            // n x^{n-1} log^k
            let mut key = k.clone();
            key[var].0 = &e - &Scalar::one();
            let scaled: Vec<PolyScalar> = v.iter().map(|c| c.scale(&e)).collect();
            out.add_term(&key, &scaled);
            // k x^{n-1} log^{k-1}
            if l > 0 {
                let mut key2 = key.clone();
                key2[var].1 = l - 1;
                let s = Scalar::from_int(l as i64);
                let scaled: Vec<PolyScalar> = v.iter().map(|c| c.scale(&s)).collect();
                out.add_term(&key2, &scaled);
            }
        }
        out
    }

    /// Substitute `x_var -> x_var^{-1}`: `x^n -> x^{-n}`, `log x -> -log x`.
    pub fn invert_var(&self, var: usize) -> Self {
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let mut key = k.clone();
            key[var].0 = -&key[var].0;
            let sign = if key[var].1 % 2 == 0 {
                Scalar::one()
            } else {
                -&Scalar::one()
            };
            let scaled: Vec<PolyScalar> = v.iter().map(|c| c.scale(&sign)).collect();
            out.add_term(&key, &scaled);
        }
        out
    }

    /// Substitute `x_var -> e^{zeta} x_var` where `zeta = q_lam Λ + q_pi Π`
    /// (as exact rational multiples): `x^n -> e^{n zeta} x^n` with the
    /// reductions `e^{nΛ} -> z^n` (here kept symbolic: only `q_lam = 0` is
    /// supported in this routine) and `e^{nΠ} -> 1`, and
    /// `(log x)^k -> (zeta + log x)^k`.
    ///
    /// The phase `e^{n q_pi Π}` must land in {1, i, -1, -i}; otherwise the
    /// substitution is not exactly representable.
    pub fn subst_exp_phase(&self, var: usize, q_pi: &Scalar) -> Result<Self, CalcError> {
        let zeta = PolyScalar::monomial(0, 1, q_pi.clone());
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let (e, l) = k[var].clone();
            let phase = Scalar::quarter_phase(&(q_pi * &e))?;
            // (zeta + log x)^l = sum_j binom(l, j) zeta^j (log x)^{l-j}
            for j in 0..=l {
                let mut key = k.clone();
                key[var].1 = l - j;
                let b = crate::comb::binom_i(l as i64, j as u64);
                let factor = zeta.pow(j).scale(&(&b * &phase));
                let scaled: Vec<PolyScalar> = v.iter().map(|c| c.clone() * &factor).collect();
                out.add_term(&key, &scaled);
            }
        }
        Ok(out)
    }

    /// Substitute `x_var = e^{Λ + pΠ}` (that is, evaluate at z on branch p):
    /// `x^n -> z^n` for integer n (kept as an exact scalar power of z) and
    /// `(log x)^k -> (Λ + pΠ)^k`. The variable is removed from the key.
    pub fn eval_branch(&self, var: usize, z: &Scalar, p: i64) -> Result<Self, CalcError> {
        self.eval_branch_scaled(var, z, p, 1)
    }

    /// Substitute `x_var = e^{s (Λ + pΠ)}`: `x^n -> z^{sn}` for integer n
    /// (the reductions `e^{nΛ} -> z^n`, `e^{nΠ} -> 1`) and
    /// `(log x)^k -> (s(Λ + pΠ))^k`.
    pub fn eval_branch_scaled(
        &self,
        var: usize,
        z: &Scalar,
        p: i64,
        s: i64,
    ) -> Result<Self, CalcError> {
        if z.is_zero() {
            return Err(CalcError::Domain("z must be nonzero".into()));
        }
        let lp = (PolyScalar::lambda() + &PolyScalar::monomial(0, 1, Scalar::from_int(p)))
            .scale(&Scalar::from_int(s));
        let mut out = LogPoly::zero(self.nvars - 1, self.dim);
        for (k, v) in &self.terms {
            let (e, l) = k[var].clone();
            let Some(n) = e.to_i64() else {
                return Err(CalcError::ExactnessViolation(format!(
                    "cannot evaluate x^({e}) at z exactly: non-integer exponent"
                )));
            };
            let zn = z.powi(s * n)?;
            let factor = lp.pow(l).scale(&zn);
            let mut key = k.clone();
            key.remove(var);
            let scaled: Vec<PolyScalar> = v.iter().map(|c| c.clone() * &factor).collect();
            out.add_term(&key, &scaled);
        }
        Ok(out)
    }

    /// `e^{y T}` applied with the powers of `y` recorded in variable
    /// `y_var`; stops when `T^k` kills everything (requires nilpotent `T`)
    /// or at `max_order`.
    pub fn exp_matrix_in_var(
        &self,
        m: &Matrix<Scalar>,
        y_var: usize,
        max_order: u32,
    ) -> Self {
        let mut out = self.clone();
        let mut cur = self.clone();
        for k in 1..=max_order {
            cur = cur.apply(m);
            if cur.is_zero() {
                break;
            }
            let c = factorial_scalar(k as u64).inv().expect("factorial nonzero");
            out = out.add(&cur.mul_mono(y_var, &Scalar::from_int(k as i64), 0).scale_scalar(&c));
        }
        out
    }

    /// Extend to a larger variable list; new variables sit at the end with
    /// zero exponent and log power.
    pub fn promote(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        let mut out = LogPoly::zero(nvars, self.dim);
        for (k, v) in &self.terms {
            let mut key = k.clone();
            key.resize(nvars, (Scalar::zero(), 0));
            out.add_term(&key, v);
        }
        out
    }

    /// Restrict to terms whose coefficient vectors are supported on the
    /// given coordinate range (used for block projections).
    pub fn project_coords(&self, range: std::ops::Range<usize>) -> Self {
        let mut out = LogPoly::zero(self.nvars, self.dim);
        for (k, v) in &self.terms {
            let mut w = vec![PolyScalar::zero(); self.dim];
            let mut any = false;
            for i in range.clone() {
                if !v[i].is_zero() {
                    w[i] = v[i].clone();
                    any = true;
                }
            }
            if any {
                out.add_term(k, &w);
            }
        }
        out
    }

    /// Pair with a dual vector (functional given by coordinates): the result
    /// is a scalar-valued LogPoly of dimension 1.
    pub fn pair(&self, functional: &[Scalar]) -> LogPoly {
        assert_eq!(functional.len(), self.dim);
        let mut out = LogPoly::zero(self.nvars, 1);
        for (k, v) in &self.terms {
            let mut acc = PolyScalar::zero();
            for (c, f) in v.iter().zip(functional) {
                acc = acc + &c.scale(f);
            }
            out.add_term(k, &[acc]);
        }
        out
    }

    pub fn describe(&self, var_names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, v) in &self.terms {
            let mut mono = String::new();
            for (i, (e, l)) in k.iter().enumerate() {
                if !e.is_zero() {
                    mono.push_str(&format!("{}^({}) ", var_names[i], e));
                }
                if *l > 0 {
                    mono.push_str(&format!("(log {})^{} ", var_names[i], l));
                }
            }
            parts.push(format!("[{}] {}", mono.trim(), format_vec(v)));
        }
        parts.join(" + ")
    }
}

fn format_vec(v: &[PolyScalar]) -> String {
    let inner: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
    format!("({})", inner.join(", "))
}

impl std::fmt::Debug for LogPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.describe(&refs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deriv_and_mono() {
        // d/dx (x^2 log x) = 2x log x + x
        let p = LogPoly::basis(1, 1, 0).mul_mono(0, &Scalar::from_int(2), 1);
        let d = p.deriv(0);
        let k1: MKey = vec![(Scalar::one(), 1)];
        let k0: MKey = vec![(Scalar::one(), 0)];
        assert_eq!(d.coeff(&k1)[0], PolyScalar::from_int(2));
        assert_eq!(d.coeff(&k0)[0], PolyScalar::one());
    }

    #[test]
    fn nilpotent_exp_in_var() {
        // e^{yN} v for a 2x2 Jordan cell
        let n = Matrix::from_rows(vec![
            vec![Scalar::zero(), Scalar::one()],
            vec![Scalar::zero(), Scalar::zero()],
        ]);
        let v = LogPoly::basis(1, 2, 1);
        let e = v.exp_matrix_in_var(&n, 0, 10);
        let k0: MKey = vec![(Scalar::zero(), 0)];
        let k1: MKey = vec![(Scalar::one(), 0)];
        assert_eq!(e.coeff(&k0)[1], PolyScalar::one());
        assert_eq!(e.coeff(&k1)[0], PolyScalar::one());
    }

    #[test]
    fn phase_substitution() {
        // x^3 under x -> e^{(2r+1) pi i} x with r=0: factor (-1)^3 = -1
        let p = LogPoly::basis(1, 1, 0).mul_mono(0, &Scalar::from_int(3), 0);
        let q = p.subst_exp_phase(0, &Scalar::from_frac(1, 2)).unwrap();
        let k: MKey = vec![(Scalar::from_int(3), 0)];
        assert_eq!(q.coeff(&k)[0], PolyScalar::constant(-&Scalar::one()));
        // log x picks up the symbol: (log x + Pi/2)^1
        let p = LogPoly::basis(1, 1, 0).mul_mono(0, &Scalar::zero(), 1);
        let q = p.subst_exp_phase(0, &Scalar::from_frac(1, 2)).unwrap();
        let klog: MKey = vec![(Scalar::zero(), 1)];
        let kconst: MKey = vec![(Scalar::zero(), 0)];
        assert_eq!(q.coeff(&klog)[0], PolyScalar::one());
        assert_eq!(
            q.coeff(&kconst)[0],
            PolyScalar::monomial(0, 1, Scalar::from_frac(1, 2))
        );
    }

    #[test]
    fn branch_evaluation() {
        // x^2 (log x) at z on branch p=1: z^2 (Λ + Π)
        let p = LogPoly::basis(1, 1, 0).mul_mono(0, &Scalar::from_int(2), 1);
        let q = p.eval_branch(0, &Scalar::from_int(3), 1).unwrap();
        let k: MKey = vec![];
        let expect = (PolyScalar::lambda() + &PolyScalar::pi()).scale(&Scalar::from_int(9));
        assert_eq!(q.coeff(&k)[0], expect);
    }
}

impl LogPoly {
    /// Serialize a materialized series as a list of
    /// `{exponents, logpowers, coefficient}` records, sorted
    /// lexicographically for bit-exact diffs.
    pub fn to_json(&self, var_names: &[&str]) -> serde_json::Value {
        let mut records = Vec::new();
        for (key, v) in &self.terms {
            let exps: Vec<String> = key.iter().map(|(e, _)| e.to_string()).collect();
            let logs: Vec<u32> = key.iter().map(|(_, k)| *k).collect();
            let coeff: Vec<String> = v.iter().map(|c| c.to_string()).collect();
            records.push(serde_json::json!({
                "exponents": exps,
                "logpowers": logs,
                "coefficient": coeff,
            }));
        }
        serde_json::json!({
            "variables": var_names,
            "terms": records,
        })
    }
}
