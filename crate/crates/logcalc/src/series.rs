//! Lazy multi-variable formal series with complex exponents and log
//! variables.
//!
//! A series is a coefficient oracle over monomials `x^e (log x)^k` together
//! with a support descriptor that guarantees every requested coefficient is
//! a finite sum. Delta functions are doubly infinite, so nothing is ever
//! materialized; identities are compared on finite windows where both sides
//! are totally determined.
//!
//! Oracles return `Option<C>`: `None` marks a coefficient that cannot be
//! computed inside a truncation window (used by the degree-truncated
//! algebra instances), which comparison routines count as skips rather than
//! failures.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::comb::{factorial_scalar, gbinom};
use crate::error::CalcError;
use crate::scalar::Scalar;

/// Coefficient spaces the engine can work over: exact, with scalar action.
pub trait Coeff: Clone + PartialEq + Send + Sync + 'static {
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, s: &Scalar) -> Self;
}

impl Coeff for Scalar {
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s
    }
}

impl Coeff for crate::polyscalar::PolyScalar {
    fn is_zero(&self) -> bool {
        crate::polyscalar::PolyScalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self.clone() + other
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn scale(&self, s: &Scalar) -> Self {
        crate::polyscalar::PolyScalar::scale(self, s)
    }
}

/// Coefficient vectors (elements of a finite-dimensional space).
#[derive(Clone, PartialEq, Debug)]
pub struct Vect<T>(pub Vec<T>);

impl<T: Coeff> Coeff for Vect<T> {
    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.0.len(), other.0.len());
        Vect(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }
    fn neg(&self) -> Self {
        Vect(self.0.iter().map(|c| c.neg()).collect())
    }
    fn scale(&self, s: &Scalar) -> Self {
        Vect(self.0.iter().map(|c| c.scale(s)).collect())
    }
}

/// Support shape of one base variable.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Shape {
    PolyBounded,
    LowerTruncated,
    UpperTruncated,
    Unbounded,
}

/// One congruence class of exponents modulo 1 together with the integer
/// bounds required by the shape.
#[derive(Clone, PartialEq, Debug)]
pub struct Coset {
    /// Canonical residue: real part in [0, 1).
    pub residue: Scalar,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct VarSupport {
    pub shape: Shape,
    pub cosets: Vec<Coset>,
}

impl VarSupport {
    pub fn poly(lo: i64, hi: i64) -> Self {
        VarSupport {
            shape: Shape::PolyBounded,
            cosets: vec![Coset {
                residue: Scalar::zero(),
                lo: Some(lo),
                hi: Some(hi),
            }],
        }
    }

    pub fn lower(lo: i64) -> Self {
        VarSupport {
            shape: Shape::LowerTruncated,
            cosets: vec![Coset {
                residue: Scalar::zero(),
                lo: Some(lo),
                hi: None,
            }],
        }
    }

    pub fn upper(hi: i64) -> Self {
        VarSupport {
            shape: Shape::UpperTruncated,
            cosets: vec![Coset {
                residue: Scalar::zero(),
                lo: None,
                hi: Some(hi),
            }],
        }
    }

    pub fn unbounded() -> Self {
        VarSupport {
            shape: Shape::Unbounded,
            cosets: vec![Coset {
                residue: Scalar::zero(),
                lo: None,
                hi: None,
            }],
        }
    }

    pub fn constant() -> Self {
        VarSupport::poly(0, 0)
    }

    /// Whether an exponent can carry a nonzero coefficient.
    pub fn admits(&self, e: &Scalar) -> bool {
        for c in &self.cosets {
            let diff = e - &c.residue;
            if let Some(n) = diff.to_i64() {
                let lo_ok = c.lo.map_or(true, |lo| n >= lo);
                let hi_ok = c.hi.map_or(true, |hi| n <= hi);
                if lo_ok && hi_ok {
                    return true;
                }
            }
        }
        false
    }

    fn shift(&self, d: i64) -> Self {
        VarSupport {
            shape: self.shape,
            cosets: self
                .cosets
                .iter()
                .map(|c| Coset {
                    residue: c.residue.clone(),
                    lo: c.lo.map(|x| x + d),
                    hi: c.hi.map(|x| x + d),
                })
                .collect(),
        }
    }

    /// Support of a sum: union of cosets, weakest shape wins.
    fn join(&self, other: &Self) -> Self {
        use Shape::*;
        let shape = match (self.shape, other.shape) {
            (PolyBounded, s) | (s, PolyBounded) => s,
            (a, b) if a == b => a,
            _ => Unbounded,
        };
        let mut cosets = self.cosets.clone();
        for c in &other.cosets {
            if let Some(existing) = cosets.iter_mut().find(|x| x.residue == c.residue) {
                existing.lo = match (existing.lo, c.lo) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    _ => None,
                };
                existing.hi = match (existing.hi, c.hi) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            } else {
                cosets.push(c.clone());
            }
        }
        let mut joined = VarSupport { shape, cosets };
        // a weakened shape must drop the bounds it can no longer promise
        for c in &mut joined.cosets {
            match joined.shape {
                Unbounded => {
                    c.lo = None;
                    c.hi = None;
                }
                LowerTruncated => c.hi = None,
                UpperTruncated => c.lo = None,
                PolyBounded => {}
            }
        }
        joined
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct BaseVar {
    pub name: String,
    /// Maximum power of `log <name>`; 0 means log-free.
    pub log_cap: u32,
    pub support: VarSupport,
}

impl BaseVar {
    pub fn new(name: &str, log_cap: u32, support: VarSupport) -> Self {
        BaseVar {
            name: name.to_string(),
            log_cap,
            support,
        }
    }
}

/// A monomial: per base variable an exponent and a log power.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono {
    pub exps: Vec<Scalar>,
    pub logs: Vec<u32>,
}

impl Mono {
    pub fn constant(nvars: usize) -> Self {
        Mono {
            exps: vec![Scalar::zero(); nvars],
            logs: vec![0; nvars],
        }
    }

    pub fn describe(&self, vars: &[BaseVar]) -> String {
        let mut parts = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            if !self.exps[i].is_zero() {
                parts.push(format!("{}^({})", v.name, self.exps[i]));
            }
            if self.logs[i] > 0 {
                parts.push(format!("(log {})^{}", v.name, self.logs[i]));
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }
}

type Oracle<C> = Arc<dyn Fn(&Mono) -> Option<C> + Send + Sync>;

/// A lazy formal series.
#[derive(Clone)]
pub struct Series<C: Coeff> {
    pub vars: Vec<BaseVar>,
    pub zero: C,
    oracle: Oracle<C>,
}

impl<C: Coeff> Series<C> {
    pub fn new(
        vars: Vec<BaseVar>,
        zero: C,
        oracle: impl Fn(&Mono) -> Option<C> + Send + Sync + 'static,
    ) -> Self {
        Series {
            vars,
            zero,
            oracle: Arc::new(oracle),
        }
    }

    pub fn var_index(&self, name: &str) -> usize {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .unwrap_or_else(|| panic!("unknown variable {name}"))
    }

    /// The coefficient of a monomial; zero outside the support descriptor,
    /// `None` when the underlying data is truncated at this monomial.
    pub fn coeff(&self, mono: &Mono) -> Option<C> {
        assert_eq!(mono.exps.len(), self.vars.len(), "monomial arity");
        for (i, v) in self.vars.iter().enumerate() {
            if mono.logs[i] > v.log_cap || !v.support.admits(&mono.exps[i]) {
                return Some(self.zero.clone());
            }
        }
        (self.oracle)(mono)
    }

    pub fn zero_series(vars: Vec<BaseVar>, zero: C) -> Self {
        let z = zero.clone();
        Series::new(vars, zero, move |_| Some(z.clone()))
    }

    /// Materialized finite series from explicit terms.
    pub fn from_terms(mut vars: Vec<BaseVar>, zero: C, terms: Vec<(Mono, C)>) -> Self {
        // recompute supports from the terms
        for (i, v) in vars.iter_mut().enumerate() {
            let mut cosets: Vec<Coset> = Vec::new();
            let mut cap = 0;
            for (m, _) in &terms {
                let (res, off) = m.exps[i].coset_split();
                cap = cap.max(m.logs[i]);
                if let Some(c) = cosets.iter_mut().find(|c| c.residue == res) {
                    c.lo = Some(c.lo.unwrap().min(off));
                    c.hi = Some(c.hi.unwrap().max(off));
                } else {
                    cosets.push(Coset {
                        residue: res,
                        lo: Some(off),
                        hi: Some(off),
                    });
                }
            }
            if cosets.is_empty() {
                cosets.push(Coset {
                    residue: Scalar::zero(),
                    lo: Some(0),
                    hi: Some(0),
                });
            }
            v.log_cap = cap;
            v.support = VarSupport {
                shape: Shape::PolyBounded,
                cosets,
            };
        }
        let z = zero.clone();
        Series::new(vars, zero, move |m| {
            let mut acc = z.clone();
            for (tm, c) in &terms {
                if tm == m {
                    acc = acc.add(c);
                }
            }
            Some(acc)
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.vars.len(), other.vars.len(), "variable lists differ");
        let vars = self
            .vars
            .iter()
            .zip(&other.vars)
            .map(|(a, b)| {
                assert_eq!(a.name, b.name, "variable lists differ");
                BaseVar {
                    name: a.name.clone(),
                    log_cap: a.log_cap.max(b.log_cap),
                    support: a.support.join(&b.support),
                }
            })
            .collect();
        let (a, b) = (self.clone(), other.clone());
        Series::new(vars, self.zero.clone(), move |m| {
            Some(a.coeff(m)?.add(&b.coeff(m)?))
        })
    }

    pub fn neg(&self) -> Self {
        let a = self.clone();
        Series::new(self.vars.clone(), self.zero.clone(), move |m| {
            Some(a.coeff(m)?.neg())
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let a = self.clone();
        let s = s.clone();
        Series::new(self.vars.clone(), self.zero.clone(), move |m| {
            Some(a.coeff(m)?.scale(&s))
        })
    }

    /// Multiply by the monomial `prod_i var_i^shift_i`.
    pub fn mul_mono(&self, shifts: &[i64]) -> Self {
        assert_eq!(shifts.len(), self.vars.len());
        let mut vars = self.vars.clone();
        for (v, &d) in vars.iter_mut().zip(shifts) {
            v.support = v.support.shift(d);
        }
        let a = self.clone();
        let shifts = shifts.to_vec();
        Series::new(vars, self.zero.clone(), move |m| {
            let mut inner = m.clone();
            for (e, &d) in inner.exps.iter_mut().zip(&shifts) {
                *e = &*e - &Scalar::from_int(d);
            }
            a.coeff(&inner)
        })
    }

    /// Map every coefficient through a linear function.
    pub fn map<D: Coeff>(&self, zero: D, f: impl Fn(&C) -> D + Send + Sync + 'static) -> Series<D> {
        let a = self.clone();
        Series::new(self.vars.clone(), zero, move |m| Some(f(&a.coeff(m)?)))
    }

    /// Memoizing wrapper; transparent except for speed.
    pub fn cached(&self) -> Self
    where
        C: 'static,
    {
        let a = self.clone();
        let cache: std::sync::Mutex<std::collections::HashMap<Mono, Option<C>>> =
            std::sync::Mutex::new(std::collections::HashMap::new());
        Series::new(self.vars.clone(), self.zero.clone(), move |m| {
            if let Some(hit) = cache.lock().unwrap().get(m) {
                return hit.clone();
            }
            let val = a.coeff(m);
            cache.lock().unwrap().insert(m.clone(), val.clone());
            val
        })
    }

    /// The formal derivative in base variable `x`, acting on `x` and `log x`
    /// simultaneously: the coefficient of `x^n (log x)^m` in the result is
    /// `(n+1) c_{n+1,m} + (m+1) c_{n+1,m+1}`.
    pub fn deriv(&self, x: usize) -> Self {
        let mut vars = self.vars.clone();
        vars[x].support = vars[x].support.shift(-1);
        let a = self.clone();
        Series::new(vars, self.zero.clone(), move |m| {
            let mut up = m.clone();
            up.exps[x] = &up.exps[x] + &Scalar::one();
            let n1 = up.exps[x].clone();
            let first = a.coeff(&up)?.scale(&n1);
            let mut up2 = up.clone();
            up2.logs[x] += 1;
            let second = a
                .coeff(&up2)?
                .scale(&Scalar::from_int((m.logs[x] + 1) as i64));
            Some(first.add(&second))
        })
    }

    /// The coefficient of `x^{-1}` (with zero log power in `x`), as a series
    /// in the remaining variables.
    pub fn residue(&self, x: usize) -> Self {
        let mut vars = self.vars.clone();
        vars.remove(x);
        let a = self.clone();
        Series::new(vars, self.zero.clone(), move |m| {
            let mut inner = m.clone();
            inner.exps.insert(x, Scalar::from_int(-1));
            inner.logs.insert(x, 0);
            a.coeff(&inner)
        })
    }

    /// Check per-variable product admissibility against another series.
    pub fn product_admissible<D: Coeff>(&self, other: &Series<D>) -> Result<(), CalcError> {
        use Shape::*;
        assert_eq!(self.vars.len(), other.vars.len(), "variable lists differ");
        for (a, b) in self.vars.iter().zip(&other.vars) {
            let ok = matches!(
                (a.support.shape, b.support.shape),
                (PolyBounded, _)
                    | (_, PolyBounded)
                    | (LowerTruncated, LowerTruncated)
                    | (UpperTruncated, UpperTruncated)
            );
            if !ok {
                return Err(CalcError::NonComputableProduct(format!(
                    "variable {}: shapes {:?} x {:?} would need an infinite coefficient sum",
                    a.name, a.support.shape, b.support.shape
                )));
            }
        }
        Ok(())
    }

    /// Product with an arbitrary bilinear pairing on coefficients. Each
    /// requested coefficient is a finite sum over factorizations, finiteness
    /// being guaranteed by the admissibility precondition.
    pub fn mul_with<D: Coeff, E: Coeff>(
        &self,
        other: &Series<D>,
        zero: E,
        pair: impl Fn(&C, &D) -> E + Send + Sync + 'static,
    ) -> Result<Series<E>, CalcError> {
        self.product_admissible(other)?;
        let vars: Vec<BaseVar> = self
            .vars
            .iter()
            .zip(&other.vars)
            .map(|(a, b)| BaseVar {
                name: a.name.clone(),
                log_cap: a.log_cap + b.log_cap,
                support: product_support(&a.support, &b.support),
            })
            .collect();
        let a = self.clone();
        let b = other.clone();
        let avars = self.vars.clone();
        let bvars = other.vars.clone();
        Series::new(vars, zero.clone(), move |m| {
            // per-variable candidate exponent splits
            let mut splits: Vec<Vec<(Scalar, Scalar)>> = Vec::with_capacity(m.exps.len());
            for i in 0..m.exps.len() {
                splits.push(exponent_splits(
                    &m.exps[i],
                    &avars[i].support,
                    &bvars[i].support,
                ));
            }
            // per-variable log splits
            let mut log_splits: Vec<Vec<(u32, u32)>> = Vec::with_capacity(m.logs.len());
            for i in 0..m.logs.len() {
                let k = m.logs[i];
                log_splits.push(
                    (0..=k.min(avars[i].log_cap))
                        .filter(|ka| k - ka <= bvars[i].log_cap)
                        .map(|ka| (ka, k - ka))
                        .collect(),
                );
            }
            let mut acc = zero.clone();
            let mut idx = vec![0usize; splits.len()];
            let mut lidx = vec![0usize; log_splits.len()];
            if splits.iter().any(|s| s.is_empty()) || log_splits.iter().any(|s| s.is_empty()) {
                return Some(acc);
            }
            loop {
                // assemble the two factor monomials for the current choice
                let mut ma = Mono::constant(splits.len());
                let mut mb = Mono::constant(splits.len());
                for i in 0..splits.len() {
                    let (ea, eb) = &splits[i][idx[i]];
                    ma.exps[i] = ea.clone();
                    mb.exps[i] = eb.clone();
                    let (ka, kb) = log_splits[i][lidx[i]];
                    ma.logs[i] = ka;
                    mb.logs[i] = kb;
                }
                let ca = a.coeff(&ma)?;
                if !ca.is_zero() {
                    let cb = b.coeff(&mb)?;
                    if !cb.is_zero() {
                        acc = acc.add(&pair(&ca, &cb));
                    }
                }
                // advance the odometer over (idx, lidx)
                let mut pos = 0;
                loop {
                    if pos < splits.len() {
                        idx[pos] += 1;
                        if idx[pos] < splits[pos].len() {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    } else if pos < splits.len() + log_splits.len() {
                        let lp = pos - splits.len();
                        lidx[lp] += 1;
                        if lidx[lp] < log_splits[lp].len() {
                            break;
                        }
                        lidx[lp] = 0;
                        pos += 1;
                    } else {
                        return Some(acc);
                    }
                }
            }
        })
        .pipe(Ok)
    }
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

/// Same-coefficient-space product (coefficients must form an algebra under
/// the supplied pairing, e.g. scalars).
impl Series<Scalar> {
    pub fn mul(&self, other: &Self) -> Result<Self, CalcError> {
        self.mul_with(other, Scalar::zero(), |a, b| a * b)
    }
}

impl Series<crate::polyscalar::PolyScalar> {
    pub fn mul(&self, other: &Self) -> Result<Self, CalcError> {
        self.mul_with(other, crate::polyscalar::PolyScalar::zero(), |a, b| {
            a.clone() * b
        })
    }
}

fn product_support(a: &VarSupport, b: &VarSupport) -> VarSupport {
    use Shape::*;
    let shape = match (a.shape, b.shape) {
        (PolyBounded, s) | (s, PolyBounded) => s,
        (LowerTruncated, LowerTruncated) => LowerTruncated,
        (UpperTruncated, UpperTruncated) => UpperTruncated,
        _ => Unbounded,
    };
    let mut cosets = Vec::new();
    for ca in &a.cosets {
        for cb in &b.cosets {
            let sum = &ca.residue + &cb.residue;
            let (res, carry) = sum.coset_split();
            let lo = match (ca.lo, cb.lo) {
                (Some(x), Some(y)) => Some(x + y + carry),
                _ => None,
            };
            let hi = match (ca.hi, cb.hi) {
                (Some(x), Some(y)) => Some(x + y + carry),
                _ => None,
            };
            if let Some(c) = cosets.iter_mut().find(|c: &&mut Coset| c.residue == res) {
                c.lo = match (c.lo, lo) {
                    (Some(p), Some(q)) => Some(p.min(q)),
                    _ => None,
                };
                c.hi = match (c.hi, hi) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    _ => None,
                };
            } else {
                cosets.push(Coset {
                    residue: res,
                    lo,
                    hi,
                });
            }
        }
    }
    let mut sup = VarSupport { shape, cosets };
    for c in &mut sup.cosets {
        match sup.shape {
            Unbounded => {
                c.lo = None;
                c.hi = None;
            }
            LowerTruncated => c.hi = None,
            UpperTruncated => c.lo = None,
            PolyBounded => {}
        }
    }
    sup
}

/// All splits e = ea + eb compatible with the two supports; finite whenever
/// the shape pair is admissible.
fn exponent_splits(e: &Scalar, a: &VarSupport, b: &VarSupport) -> Vec<(Scalar, Scalar)> {
    let mut out = Vec::new();
    for ca in &a.cosets {
        for cb in &b.cosets {
            let total = &ca.residue + &cb.residue;
            // ea = ca.residue + i, eb = cb.residue + j, need i + j = e - total
            let target = e - &total;
            let Some(t) = target.to_i64() else { continue };
            // bounds on i from both supports
            let mut lo = ca.lo;
            let mut hi = ca.hi;
            if let Some(bl) = cb.lo {
                // j = t - i >= bl  =>  i <= t - bl
                hi = Some(hi.map_or(t - bl, |h| h.min(t - bl)));
            }
            if let Some(bh) = cb.hi {
                // j = t - i <= bh  =>  i >= t - bh
                lo = Some(lo.map_or(t - bh, |l| l.max(t - bh)));
            }
            let (Some(lo), Some(hi)) = (lo, hi) else {
                panic!("non-admissible product slipped past the shape check");
            };
            for i in lo..=hi {
                out.push((
                    &ca.residue + &Scalar::from_int(i),
                    &cb.residue + &Scalar::from_int(t - i),
                ));
            }
        }
    }
    out
}

/// An axis-aligned comparison window: per variable integer offsets
/// [lo, hi] around every coset residue, plus a log-power cap.
#[derive(Clone, Debug)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    pub log_cap: u32,
    /// Optional per-variable overrides (by name).
    pub overrides: Vec<(String, i64, i64, u32)>,
}

impl Window {
    pub fn symmetric(w: i64, log_cap: u32) -> Self {
        Window {
            lo: -w,
            hi: w,
            log_cap,
            overrides: Vec::new(),
        }
    }

    pub fn with_var(mut self, name: &str, lo: i64, hi: i64, log_cap: u32) -> Self {
        self.overrides.push((name.to_string(), lo, hi, log_cap));
        self
    }

    pub fn bounds_for(&self, name: &str) -> (i64, i64, u32) {
        for (n, lo, hi, cap) in &self.overrides {
            if n == name {
                return (*lo, *hi, *cap);
            }
        }
        (self.lo, self.hi, self.log_cap)
    }
}

/// Result of a window comparison.
#[derive(Clone, Debug)]
pub struct WindowCmp {
    pub equal: bool,
    pub checked: usize,
    pub skipped: usize,
    pub witness: Option<String>,
}

/// Enumerate all monomials of the window for the given variables, using the
/// union of the two series' coset residues per variable.
fn window_monos(vars_a: &[BaseVar], vars_b: &[BaseVar], window: &Window) -> Vec<Mono> {
    let mut per_var: Vec<Vec<(Scalar, u32)>> = Vec::new();
    for (va, vb) in vars_a.iter().zip(vars_b) {
        let (lo, hi, cap) = window.bounds_for(&va.name);
        let mut residues: BTreeSet<Scalar> = BTreeSet::new();
        for c in va.support.cosets.iter().chain(&vb.support.cosets) {
            residues.insert(c.residue.clone());
        }
        if residues.is_empty() {
            residues.insert(Scalar::zero());
        }
        let cap = cap.min(va.log_cap.max(vb.log_cap));
        let mut cands = Vec::new();
        for r in residues {
            for n in lo..=hi {
                for k in 0..=cap {
                    cands.push((&r + &Scalar::from_int(n), k));
                }
            }
        }
        per_var.push(cands);
    }
    let mut out = vec![Mono {
        exps: Vec::new(),
        logs: Vec::new(),
    }];
    for cands in per_var {
        let mut next = Vec::with_capacity(out.len() * cands.len());
        for m in &out {
            for (e, k) in &cands {
                let mut m2 = m.clone();
                m2.exps.push(e.clone());
                m2.logs.push(*k);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Compare two series on a window; reports the first discrepancy.
pub fn window_equal<C: Coeff + std::fmt::Debug>(
    s1: &Series<C>,
    s2: &Series<C>,
    window: &Window,
) -> WindowCmp {
    assert_eq!(s1.vars.len(), s2.vars.len(), "variable lists differ");
    let mut checked = 0;
    let mut skipped = 0;
    for m in window_monos(&s1.vars, &s2.vars, window) {
        match (s1.coeff(&m), s2.coeff(&m)) {
            (Some(a), Some(b)) => {
                checked += 1;
                if a != b {
                    return WindowCmp {
                        equal: false,
                        checked,
                        skipped,
                        witness: Some(format!(
                            "at {}: left = {:?}, right = {:?}",
                            m.describe(&s1.vars),
                            a,
                            b
                        )),
                    };
                }
            }
            _ => skipped += 1,
        }
    }
    WindowCmp {
        equal: true,
        checked,
        skipped,
        witness: None,
    }
}

/// Check a series vanishes on a window.
pub fn window_zero<C: Coeff + std::fmt::Debug>(s: &Series<C>, window: &Window) -> WindowCmp {
    let z = Series::zero_series(s.vars.clone(), s.zero.clone());
    window_equal(s, &z, window)
}

// ---------------------------------------------------------------------------
// delta-function constructors
// ---------------------------------------------------------------------------

/// A slot of the three-slot delta expression: a (signed) variable or a
/// nonzero constant.
#[derive(Clone, Debug)]
pub enum Slot {
    Var { index: usize, sign: i64 },
    Const(Scalar),
}

impl Slot {
    pub fn var(index: usize) -> Self {
        Slot::Var { index, sign: 1 }
    }
    pub fn neg_var(index: usize) -> Self {
        Slot::Var { index, sign: -1 }
    }
}

/// The expansion of `C^{-1} delta((A + B)/C) = sum_n (A+B)^n C^{-n-1}`, with
/// `(A+B)^n` expanded in nonnegative integral powers of the second slot.
///
/// Variable slots consume the exponents of the named variables; constant
/// slots turn powers into scalar factors. When `b` is absent the expression
/// is `C^{-1} delta(A/C)`.
pub fn delta_expansion(
    vars: Vec<BaseVar>,
    a: Slot,
    b: Option<Slot>,
    c: Slot,
) -> Series<Scalar> {
    let n_vars = vars.len();
    let a2 = a.clone();
    let b2 = b.clone();
    let c2 = c.clone();
    Series::new(vars, Scalar::zero(), move |m: &Mono| {
        if m.logs.iter().any(|&k| k > 0) {
            return Some(Scalar::zero());
        }
        // exponent bookkeeping: A carries n - m_pow, B carries m_pow, C carries -n-1
        let var_exp = |slot: &Slot| -> Option<Option<i64>> {
            // outer None: not a variable; inner None: non-integer exponent
            match slot {
                Slot::Var { index, .. } => Some(m.exps[*index].to_i64()),
                Slot::Const(_) => None,
            }
        };
        // all exponents sitting on slot variables must be integers
        for slot in [Some(&a2), b2.as_ref(), Some(&c2)].into_iter().flatten() {
            if let Some(None) = var_exp(slot) {
                return Some(Scalar::zero());
            }
        }
        // variables not owned by a slot must have exponent zero
        let mut used = vec![false; n_vars];
        for slot in [Some(&a2), b2.as_ref(), Some(&c2)].into_iter().flatten() {
            if let Slot::Var { index, .. } = slot {
                used[*index] = true;
            }
        }
        for i in 0..n_vars {
            if !used[i] && !m.exps[i].is_zero() {
                return Some(Scalar::zero());
            }
        }
        let a_exp = var_exp(&a2).map(|x| x.unwrap());
        let b_exp = b2.as_ref().and_then(|s| var_exp(s).map(|x| x.unwrap()));
        let c_exp = var_exp(&c2).map(|x| x.unwrap());

        let term = |n: i64, mpow: i64| -> Scalar {
            if mpow < 0 {
                return Scalar::zero();
            }
            let mut coeff = crate::comb::binom_i(n, mpow as u64);
            coeff = &coeff * &slot_factor(&a2, n - mpow);
            if let Some(bs) = &b2 {
                coeff = &coeff * &slot_factor(bs, mpow);
            }
            coeff = &coeff * &slot_factor(&c2, -n - 1);
            coeff
        };

        // Pin (n, m_pow) from the variable slots present.
        match (&b2, b_exp) {
            // B is a variable: m_pow is its exponent
            (Some(Slot::Var { .. }), Some(mp)) => {
                if mp < 0 {
                    return Some(Scalar::zero());
                }
                let n = match (c_exp, a_exp) {
                    (Some(ce), _) => {
                        let n = -ce - 1;
                        if let Some(ae) = a_exp {
                            if ae != n - mp {
                                return Some(Scalar::zero());
                            }
                        }
                        n
                    }
                    (None, Some(ae)) => ae + mp,
                    (None, None) => return None,
                };
                Some(term(n, mp))
            }
            (Some(Slot::Var { .. }), None) => unreachable!("integer exponent checked above"),
            // no B slot: m_pow = 0 forced
            (None, _) => {
                let n = match (c_exp, a_exp) {
                    (Some(ce), _) => {
                        let n = -ce - 1;
                        if let Some(ae) = a_exp {
                            if ae != n {
                                return Some(Scalar::zero());
                            }
                        }
                        n
                    }
                    (None, Some(ae)) => ae,
                    (None, None) => return None,
                };
                Some(term(n, 0))
            }
            // B is a constant: m_pow is free, constrained by A and C
            (Some(Slot::Const(_)), _) => match (a_exp, c_exp) {
                (Some(ae), Some(ce)) => {
                    let n = -ce - 1;
                    Some(term(n, n - ae))
                }
                (Some(_), None) => None, // n and m_pow both free: infinite sum
                (None, Some(ce)) => {
                    // A const too: sum over m_pow, finite only for n >= 0
                    let n = -ce - 1;
                    if n >= 0 {
                        let mut acc = Scalar::zero();
                        for mp in 0..=n {
                            acc = &acc + &term(n, mp);
                        }
                        Some(acc)
                    } else {
                        None
                    }
                }
                (None, None) => None,
            },
        }
    })
}

fn slot_factor(slot: &Slot, power: i64) -> Scalar {
    match slot {
        Slot::Var { sign, .. } => {
            if *sign >= 0 {
                Scalar::one()
            } else if power.rem_euclid(2) == 0 {
                Scalar::one()
            } else {
                -&Scalar::one()
            }
        }
        Slot::Const(z) => z.powi(power).expect("nonzero constant slot"),
    }
}

/// delta(x) = sum over all integers n of x^n.
pub fn delta_plain(vars: Vec<BaseVar>, x: usize) -> Series<Scalar> {
    let n = vars.len();
    Series::new(vars, Scalar::zero(), move |m: &Mono| {
        if m.logs.iter().any(|&k| k > 0) {
            return Some(Scalar::zero());
        }
        for i in 0..n {
            if i != x && !m.exps[i].is_zero() {
                return Some(Scalar::zero());
            }
        }
        Some(if m.exps[x].to_i64().is_some() {
            Scalar::one()
        } else {
            Scalar::zero()
        })
    })
}

/// delta(a/c) = sum over n of a^n c^{-n}.
pub fn delta_ratio(vars: Vec<BaseVar>, a: usize, c: usize) -> Series<Scalar> {
    let n_vars = vars.len();
    Series::new(vars, Scalar::zero(), move |m: &Mono| {
        if m.logs.iter().any(|&k| k > 0) {
            return Some(Scalar::zero());
        }
        for i in 0..n_vars {
            if i != a && i != c && !m.exps[i].is_zero() {
                return Some(Scalar::zero());
            }
        }
        let (Some(p), Some(q)) = (m.exps[a].to_i64(), m.exps[c].to_i64()) else {
            return Some(Scalar::zero());
        };
        Some(if p == -q { Scalar::one() } else { Scalar::zero() })
    })
}

// ---------------------------------------------------------------------------
// substitutions and the logarithmic Taylor machinery
// ---------------------------------------------------------------------------

/// Coefficients of `(log(1+u))^j = sum_{s>=j} c_{j,s} u^s`.
pub fn log_pow_coeff(j: u32, s: u32) -> Scalar {
    if j == 0 {
        return if s == 0 { Scalar::one() } else { Scalar::zero() };
    }
    if s < j {
        return Scalar::zero();
    }
    // c_{j,s} = sum over i=1..s-j+1 of (-1)^{i-1}/i * c_{j-1, s-i}
    let mut acc = Scalar::zero();
    for i in 1..=(s - j + 1) {
        let sign = if i % 2 == 1 {
            Scalar::one()
        } else {
            -&Scalar::one()
        };
        let term = &(&sign / &Scalar::from_int(i as i64)) * &log_pow_coeff(j - 1, s - i);
        acc = &acc + &term;
    }
    acc
}

impl<C: Coeff> Series<C> {
    /// `f(x) -> f(x+y)` with `log x -> log x + log(1 + y/x)` expanded per the
    /// binomial expansion convention; `y` is appended as a fresh variable.
    pub fn subst_shift(&self, x: usize, y_name: &str) -> Self {
        let mut vars = self.vars.clone();
        let kx = vars[x].log_cap;
        // x support is smeared downward by arbitrary y-orders
        vars[x].support = match vars[x].support.shape {
            Shape::PolyBounded | Shape::UpperTruncated => VarSupport {
                shape: Shape::UpperTruncated,
                cosets: vars[x]
                    .support
                    .cosets
                    .iter()
                    .map(|c| Coset {
                        residue: c.residue.clone(),
                        lo: None,
                        hi: c.hi,
                    })
                    .collect(),
            },
            _ => VarSupport {
                shape: Shape::Unbounded,
                cosets: vars[x]
                    .support
                    .cosets
                    .iter()
                    .map(|c| Coset {
                        residue: c.residue.clone(),
                        lo: None,
                        hi: None,
                    })
                    .collect(),
            },
        };
        vars.push(BaseVar::new(y_name, 0, VarSupport::lower(0)));
        let yi = vars.len() - 1;
        let a = self.clone();
        Series::new(vars, self.zero.clone(), move |m: &Mono| {
            if m.logs[yi] > 0 {
                return Some(a.zero.clone());
            }
            let Some(c_ord) = m.exps[yi].to_i64() else {
                return Some(a.zero.clone());
            };
            if c_ord < 0 {
                return Some(a.zero.clone());
            }
            let c_ord = c_ord as u32;
            let b_log = m.logs[x];
            // source exponent n = a_exp + c
            let n = &m.exps[x] + &Scalar::from_int(c_ord as i64);
            let mut acc = a.zero.clone();
            for j in 0..=kx.saturating_sub(b_log) {
                let mut src = m.clone();
                src.exps[x] = n.clone();
                src.logs[x] = b_log + j;
                src.exps.remove(yi);
                src.logs.remove(yi);
                let w = a.coeff(&src)?;
                if w.is_zero() {
                    continue;
                }
                let mut factor = Scalar::zero();
                for s in j..=c_ord {
                    let t = &gbinom(&n, (c_ord - s) as u64) * &log_pow_coeff(j, s);
                    factor = &factor + &t;
                }
                factor = &factor * &gbinom(&Scalar::from_int((b_log + j) as i64), j as u64);
                acc = acc.add(&w.scale(&factor));
            }
            Some(acc)
        })
    }

    /// `f(x) -> f(x e^y)`: `x^n -> x^n e^{ny}` (expanded in powers of `y`),
    /// `log x -> log x + y`.
    pub fn subst_exp(&self, x: usize, y_name: &str) -> Self {
        let mut vars = self.vars.clone();
        let kx = vars[x].log_cap;
        vars.push(BaseVar::new(y_name, 0, VarSupport::lower(0)));
        let yi = vars.len() - 1;
        let a = self.clone();
        Series::new(vars, self.zero.clone(), move |m: &Mono| {
            if m.logs[yi] > 0 {
                return Some(a.zero.clone());
            }
            let Some(c_ord) = m.exps[yi].to_i64() else {
                return Some(a.zero.clone());
            };
            if c_ord < 0 {
                return Some(a.zero.clone());
            }
            let c_ord = c_ord as u32;
            let b_log = m.logs[x];
            let n = m.exps[x].clone();
            let mut acc = a.zero.clone();
            for j in 0..=kx.saturating_sub(b_log).min(c_ord) {
                let mut src = m.clone();
                src.logs[x] = b_log + j;
                src.exps.remove(yi);
                src.logs.remove(yi);
                let w = a.coeff(&src)?;
                if w.is_zero() {
                    continue;
                }
                // binom(b+j, j) * n^{c-j}/(c-j)!
                let mut factor = gbinom(&Scalar::from_int((b_log + j) as i64), j as u64);
                let e = (c_ord - j) as u64;
                factor = &factor * &(&n.pow(e) / &factorial_scalar(e));
                acc = acc.add(&w.scale(&factor));
            }
            Some(acc)
        })
    }

    /// `f(x) -> f(xy)`: `x^n -> x^n y^n`, `log x -> log x + log y`; `y`
    /// (with its own log) is appended as a fresh variable.
    pub fn subst_prod(&self, x: usize, y_name: &str) -> Self {
        let mut vars = self.vars.clone();
        let kx = vars[x].log_cap;
        let x_supp = vars[x].support.clone();
        vars.push(BaseVar::new(y_name, kx, x_supp));
        let yi = vars.len() - 1;
        let a = self.clone();
        Series::new(vars, self.zero.clone(), move |m: &Mono| {
            if m.exps[x] != m.exps[yi] {
                return Some(a.zero.clone());
            }
            let b = m.logs[x];
            let d = m.logs[yi];
            if b + d > kx {
                return Some(a.zero.clone());
            }
            let mut src = m.clone();
            src.logs[x] = b + d;
            src.exps.remove(yi);
            src.logs.remove(yi);
            let w = a.coeff(&src)?;
            let factor = gbinom(&Scalar::from_int((b + d) as i64), d as u64);
            Some(w.scale(&factor))
        })
    }

    /// `sum_{k<=order} y^k T^k(f)/k!` for `T = p(x) d/dx` with Laurent
    /// polynomial `p`; `y` is appended as a fresh variable.
    pub fn exp_op(&self, x: usize, generator: &LaurentOp, y_name: &str, order: u32) -> Self {
        let mut powers: Vec<Series<C>> = vec![self.clone().cached()];
        for _ in 1..=order {
            let prev = powers.last().unwrap();
            powers.push(generator.apply(prev, x).cached());
        }
        let mut vars = self.vars.clone();
        // the generator may shift x-support up or down arbitrarily often
        vars[x].support = VarSupport {
            shape: Shape::Unbounded,
            cosets: vars[x]
                .support
                .cosets
                .iter()
                .map(|c| Coset {
                    residue: c.residue.clone(),
                    lo: None,
                    hi: None,
                })
                .collect(),
        };
        vars.push(BaseVar::new(y_name, 0, VarSupport::poly(0, order as i64)));
        let yi = vars.len() - 1;
        let zero = self.zero.clone();
        Series::new(vars, zero.clone(), move |m: &Mono| {
            if m.logs[yi] > 0 {
                return Some(zero.clone());
            }
            let Some(k) = m.exps[yi].to_i64() else {
                return Some(zero.clone());
            };
            if k < 0 || k > order as i64 {
                return Some(zero.clone());
            }
            let mut src = m.clone();
            src.exps.remove(yi);
            src.logs.remove(yi);
            let w = powers[k as usize].coeff(&src)?;
            Some(w.scale(&factorial_scalar(k as u64).inv().expect("nonzero factorial")))
        })
    }
}

/// A first-order operator `p(x) d/dx` with Laurent-polynomial `p`.
#[derive(Clone, Debug)]
pub struct LaurentOp {
    /// terms (coefficient, power): p(x) = sum coeff * x^power
    pub terms: Vec<(Scalar, i64)>,
}

impl LaurentOp {
    pub fn d_dx() -> Self {
        LaurentOp {
            terms: vec![(Scalar::one(), 0)],
        }
    }

    pub fn x_d_dx() -> Self {
        LaurentOp {
            terms: vec![(Scalar::one(), 1)],
        }
    }

    pub fn apply<C: Coeff>(&self, s: &Series<C>, x: usize) -> Series<C> {
        let d = s.deriv(x);
        let mut acc: Option<Series<C>> = None;
        for (c, p) in &self.terms {
            let mut shifts = vec![0i64; s.vars.len()];
            shifts[x] = *p;
            let term = d.mul_mono(&shifts).scale(c);
            acc = Some(match acc {
                None => term,
                Some(prev) => prev.add(&term),
            });
        }
        acc.unwrap_or_else(|| Series::zero_series(s.vars.clone(), s.zero.clone()))
    }
}

// ---------------------------------------------------------------------------
// named verification routines
// ---------------------------------------------------------------------------

/// A single-variable monomial series `x^n (log x)^k` (coefficient 1).
pub fn log_monomial(x_name: &str, n: &Scalar, k: u32) -> Series<Scalar> {
    let (res, off) = n.coset_split();
    let vars = vec![BaseVar::new(
        x_name,
        k,
        VarSupport {
            shape: Shape::PolyBounded,
            cosets: vec![Coset {
                residue: res,
                lo: Some(off),
                hi: Some(off),
            }],
        },
    )];
    let n = n.clone();
    Series::new(vars, Scalar::zero(), move |m: &Mono| {
        Some(if m.exps[0] == n && m.logs[0] == k {
            Scalar::one()
        } else {
            Scalar::zero()
        })
    })
}

/// Verifies the two formal Taylor identities for `f`:
/// `e^{y d/dx} f(x) = f(x+y)` and `e^{y x d/dx} f(x) = f(x e^y)`,
/// coefficient-exactly to the stated y-order.
pub fn verify_taylor(
    f: &Series<Scalar>,
    x: usize,
    order: u32,
    window: &Window,
) -> (WindowCmp, WindowCmp) {
    let y = "y";
    let additive = {
        let lhs = f.exp_op(x, &LaurentOp::d_dx(), y, order);
        let rhs = f.subst_shift(x, y);
        let w = window.clone().with_var(y, 0, order as i64, 0);
        window_equal(&lhs, &rhs, &w)
    };
    let multiplicative = {
        let lhs = f.exp_op(x, &LaurentOp::x_d_dx(), y, order);
        let rhs = f.subst_exp(x, y);
        let w = window.clone().with_var(y, 0, order as i64, 0);
        window_equal(&lhs, &rhs, &w)
    };
    (additive, multiplicative)
}

/// Outcome of the formal-ODE membership check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogOdeReport {
    pub solves: bool,
    pub in_expected_space: bool,
    pub top_coeff_nonzero: bool,
}

/// Checks `(x d/dx - a)^m f = 0` for a series `f` with fully bounded
/// support, and whether `f` lies in `span{x^a (log x)^k : k < m}` with a
/// nonzero top coefficient.
pub fn check_log_ode(f: &Series<Scalar>, x: usize, a: &Scalar, m: u32) -> LogOdeReport {
    // materialize over the (finite) support
    let v = &f.vars[x];
    assert!(
        v.support.shape == Shape::PolyBounded,
        "check_log_ode requires bounded support"
    );
    let mut terms: Vec<(Scalar, u32, Scalar)> = Vec::new(); // (exp, logpow, coeff)
    for c in &v.support.cosets {
        for n in c.lo.unwrap()..=c.hi.unwrap() {
            let e = &c.residue + &Scalar::from_int(n);
            for k in 0..=v.log_cap {
                let mono = Mono {
                    exps: vec![e.clone()],
                    logs: vec![k],
                };
                let w = f.coeff(&mono).expect("bounded series has total oracle");
                if !w.is_zero() {
                    terms.push((e.clone(), k, w));
                }
            }
        }
    }
    // apply (x d/dx - a) m times on the term list
    let mut cur = terms.clone();
    for _ in 0..m {
        let mut next: std::collections::BTreeMap<(Scalar, u32), Scalar> =
            std::collections::BTreeMap::new();
        for (e, k, w) in &cur {
            // x d/dx (w x^e log^k) = e w x^e log^k + k w x^e log^{k-1}
            let c1 = &(e - a) * w;
            let ent = next.entry((e.clone(), *k)).or_insert_with(Scalar::zero);
            *ent = &*ent + &c1;
            if *k > 0 {
                let c2 = &Scalar::from_int(*k as i64) * w;
                let ent = next.entry((e.clone(), *k - 1)).or_insert_with(Scalar::zero);
                *ent = &*ent + &c2;
            }
        }
        cur = next
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|((e, k), w)| (e, k, w))
            .collect();
    }
    let solves = cur.is_empty();
    let in_expected_space = terms.iter().all(|(e, k, _)| e == a && *k < m);
    let top_coeff_nonzero = terms
        .iter()
        .any(|(e, k, w)| e == a && *k == m - 1 && !w.is_zero());
    LogOdeReport {
        solves,
        in_expected_space,
        top_coeff_nonzero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str, sup: VarSupport) -> BaseVar {
        BaseVar::new(name, 0, sup)
    }

    fn mono1(e: i64) -> Mono {
        Mono {
            exps: vec![Scalar::from_int(e)],
            logs: vec![0],
        }
    }

    #[test]
    fn delta_has_all_integer_coefficients() {
        let d = delta_plain(vec![var("x", VarSupport::unbounded())], 0);
        for n in -5..=5 {
            assert_eq!(d.coeff(&mono1(n)), Some(Scalar::one()));
        }
        let half = Mono {
            exps: vec![Scalar::from_frac(1, 2)],
            logs: vec![0],
        };
        assert_eq!(d.coeff(&half), Some(Scalar::zero()));
    }

    #[test]
    fn binomial_convention_on_rational_powers() {
        // (x+y)^{1/2}: coefficient of x^{1/2-n} y^n is gbinom(1/2, n)
        let f = log_monomial("x", &Scalar::from_frac(1, 2), 0);
        let g = f.subst_shift(0, "y");
        for n in 0..5i64 {
            let m = Mono {
                exps: vec![
                    &Scalar::from_frac(1, 2) - &Scalar::from_int(n),
                    Scalar::from_int(n),
                ],
                logs: vec![0, 0],
            };
            assert_eq!(
                g.coeff(&m),
                Some(gbinom(&Scalar::from_frac(1, 2), n as u64))
            );
        }
    }

    #[test]
    fn f_delta_equals_f_at_one_delta() {
        // f(x) delta(x) = f(1) delta(x) for Laurent polynomial f = 2x^{-3} + x + 5
        let vars = vec![var("x", VarSupport::unbounded())];
        let f = Series::from_terms(
            vars.clone(),
            Scalar::zero(),
            vec![
                (mono1(-3), Scalar::from_int(2)),
                (mono1(1), Scalar::one()),
                (mono1(0), Scalar::from_int(5)),
            ],
        );
        let d = delta_plain(vars, 0);
        let lhs = f.mul(&d).unwrap();
        let rhs = d.scale(&Scalar::from_int(8));
        let cmp = window_equal(&lhs, &rhs, &Window::symmetric(6, 0));
        assert!(cmp.equal, "{:?}", cmp.witness);
    }

    #[test]
    fn delta_times_delta_is_rejected() {
        let vars = vec![var("x", VarSupport::unbounded())];
        let d = delta_plain(vars, 0);
        assert!(matches!(
            d.mul(&d),
            Err(CalcError::NonComputableProduct(_))
        ));
    }

    #[test]
    fn three_variable_delta_coefficients() {
        // x0^{-1} delta((x1-x2)/x0): coefficient of x0^{-n-1} x1^{n-m} x2^m
        // is (-1)^m binom(n, m)
        let vars = vec![
            var("x0", VarSupport::unbounded()),
            var("x1", VarSupport::unbounded()),
            var("x2", VarSupport::lower(0)),
        ];
        let d = delta_expansion(vars, Slot::var(1), Some(Slot::neg_var(2)), Slot::var(0));
        let at = |n: i64, m: i64| {
            d.coeff(&Mono {
                exps: vec![
                    Scalar::from_int(-n - 1),
                    Scalar::from_int(n - m),
                    Scalar::from_int(m),
                ],
                logs: vec![0, 0, 0],
            })
            .unwrap()
        };
        assert_eq!(at(0, 0), Scalar::one());
        assert_eq!(at(1, 0), Scalar::one());
        assert_eq!(at(1, 1), Scalar::from_int(-1));
        assert_eq!(at(-1, 2), Scalar::one()); // (-1)^2 binom(-1,2) = 1
        // negative x2 exponent: zero
        let neg = d.coeff(&Mono {
            exps: vec![
                Scalar::from_int(-1),
                Scalar::from_int(1),
                Scalar::from_int(-1),
            ],
            logs: vec![0, 0, 0],
        });
        assert_eq!(neg, Some(Scalar::zero()));
    }

    #[test]
    fn deriv_of_log_powers() {
        // d/dx (log x)^m = m x^{-1} (log x)^{m-1}
        let f = log_monomial("x", &Scalar::zero(), 3);
        let d = f.deriv(0);
        let m = Mono {
            exps: vec![Scalar::from_int(-1)],
            logs: vec![2],
        };
        assert_eq!(d.coeff(&m), Some(Scalar::from_int(3)));
        // d/dx x^n = n x^{n-1}
        let g = log_monomial("x", &Scalar::from_int(4), 0);
        assert_eq!(g.deriv(0).coeff(&mono1(3)), Some(Scalar::from_int(4)));
        // d/dx x^{1/2} log x = (1/2) x^{-1/2} log x + x^{-1/2}
        let h = log_monomial("x", &Scalar::from_frac(1, 2), 1);
        let dh = h.deriv(0);
        let at = |k: u32| {
            dh.coeff(&Mono {
                exps: vec![Scalar::from_frac(-1, 2)],
                logs: vec![k],
            })
            .unwrap()
        };
        assert_eq!(at(1), Scalar::from_frac(1, 2));
        assert_eq!(at(0), Scalar::one());
    }

    #[test]
    fn shift_of_log_x_is_the_log_expansion() {
        // log(x+y) = log x + y/x - y^2/2x^2 + y^3/3x^3 - ...
        let f = log_monomial("x", &Scalar::zero(), 1);
        let g = f.subst_shift(0, "y");
        let at = |xe: i64, xl: u32, ye: i64| {
            g.coeff(&Mono {
                exps: vec![Scalar::from_int(xe), Scalar::from_int(ye)],
                logs: vec![xl, 0],
            })
            .unwrap()
        };
        assert_eq!(at(0, 1, 0), Scalar::one());
        assert_eq!(at(-1, 0, 1), Scalar::one());
        assert_eq!(at(-2, 0, 2), Scalar::from_frac(-1, 2));
        assert_eq!(at(-3, 0, 3), Scalar::from_frac(1, 3));
        assert_eq!(at(-1, 1, 1), Scalar::zero());
    }

    #[test]
    fn shift_of_log_squared() {
        // (log(x+y))^2 to y-order 2:
        // (log x)^2 + 2 log x (y/x) + (y/x)^2 (1 - log x)
        let f = log_monomial("x", &Scalar::zero(), 2);
        let g = f.subst_shift(0, "y");
        let at = |xe: i64, xl: u32, ye: i64| {
            g.coeff(&Mono {
                exps: vec![Scalar::from_int(xe), Scalar::from_int(ye)],
                logs: vec![xl, 0],
            })
            .unwrap()
        };
        assert_eq!(at(0, 2, 0), Scalar::one());
        assert_eq!(at(-1, 1, 1), Scalar::from_int(2));
        assert_eq!(at(-2, 0, 2), Scalar::one());
        assert_eq!(at(-2, 1, 2), Scalar::from_int(-1));
        assert_eq!(at(-2, 2, 2), Scalar::zero());
    }

    #[test]
    fn prod_substitution_splits_logs() {
        // (log(xy))^2 = (log x)^2 + 2 log x log y + (log y)^2
        let f = log_monomial("x", &Scalar::zero(), 2);
        let g = f.subst_prod(0, "y");
        let at = |b: u32, d: u32| {
            g.coeff(&Mono {
                exps: vec![Scalar::zero(), Scalar::zero()],
                logs: vec![b, d],
            })
            .unwrap()
        };
        assert_eq!(at(2, 0), Scalar::one());
        assert_eq!(at(1, 1), Scalar::from_int(2));
        assert_eq!(at(0, 2), Scalar::one());
    }

    #[test]
    fn taylor_theorem_on_log_monomials() {
        let window = Window::symmetric(4, 3);
        for (n, k) in [
            (Scalar::from_int(0), 1u32),
            (Scalar::from_int(-1), 2),
            (Scalar::from_frac(1, 2), 2),
            (Scalar::from_int(3), 0),
        ] {
            let f = log_monomial("x", &n, k);
            let (add, mul) = verify_taylor(&f, 0, 5, &window);
            assert!(add.equal, "additive Taylor failed for x^({n}) log^{k}: {:?}", add.witness);
            assert!(mul.equal, "multiplicative Taylor failed for x^({n}) log^{k}: {:?}", mul.witness);
        }
    }

    #[test]
    fn exp_op_of_x_ddx_translates_log() {
        // e^{y x d/dx} log x = log x + y
        let f = log_monomial("x", &Scalar::zero(), 1);
        let g = f.exp_op(0, &LaurentOp::x_d_dx(), "y", 3);
        let at = |xl: u32, ye: i64| {
            g.coeff(&Mono {
                exps: vec![Scalar::zero(), Scalar::from_int(ye)],
                logs: vec![xl, 0],
            })
            .unwrap()
        };
        assert_eq!(at(1, 0), Scalar::one());
        assert_eq!(at(0, 1), Scalar::one());
        assert_eq!(at(0, 2), Scalar::zero());
        assert_eq!(at(1, 1), Scalar::zero());
    }

    #[test]
    fn residue_extracts_minus_one() {
        let vars = vec![var("x", VarSupport::unbounded())];
        let f = Series::from_terms(
            vars,
            Scalar::zero(),
            vec![(mono1(-1), Scalar::from_int(7)), (mono1(2), Scalar::one())],
        );
        let r = f.residue(0);
        let empty = Mono {
            exps: vec![],
            logs: vec![],
        };
        assert_eq!(r.coeff(&empty), Some(Scalar::from_int(7)));
    }

    #[test]
    fn log_ode_lemma_cases() {
        let a = Scalar::from_frac(1, 2);
        // f = x^a: solves with m = 1
        let f = log_monomial("x", &a, 0);
        let rep = check_log_ode(&f, 0, &a, 1);
        assert_eq!(
            rep,
            LogOdeReport {
                solves: true,
                in_expected_space: true,
                top_coeff_nonzero: true
            }
        );
        // f = x^a log x does not solve with m = 1
        let g = log_monomial("x", &a, 1);
        let rep = check_log_ode(&g, 0, &a, 1);
        assert!(!rep.solves);
        // f = x^a + x^a (log x)^2 solves with m = 3
        let h = log_monomial("x", &a, 0).add(&log_monomial("x", &a, 2));
        let rep = check_log_ode(&h, 0, &a, 3);
        assert_eq!(
            rep,
            LogOdeReport {
                solves: true,
                in_expected_space: true,
                top_coeff_nonzero: true
            }
        );
    }

    #[test]
    fn delta_identities_2_6_and_2_7() {
        let vars = || {
            vec![
                var("x0", VarSupport::unbounded()),
                var("x1", VarSupport::unbounded()),
                var("x2", VarSupport::unbounded()),
            ]
        };
        let mut v26l = vars();
        v26l[0].support = VarSupport::lower(0);
        // (2.6): x2^{-1} delta((x1-x0)/x2) = x1^{-1} delta((x2+x0)/x1)
        let lhs = delta_expansion(v26l.clone(), Slot::var(1), Some(Slot::neg_var(0)), Slot::var(2));
        let rhs = delta_expansion(v26l, Slot::var(2), Some(Slot::var(0)), Slot::var(1));
        let cmp = window_equal(&lhs, &rhs, &Window::symmetric(6, 0));
        assert!(cmp.equal, "(2.6): {:?}", cmp.witness);
        // (2.7): delta3(x1-x2; x0) - delta3(-(x2)+x1 variant; x0) = delta3(x1-x0; x2)
        let mut v_a = vars();
        v_a[2].support = VarSupport::lower(0);
        let a = delta_expansion(v_a, Slot::var(1), Some(Slot::neg_var(2)), Slot::var(0));
        let mut v_b = vars();
        v_b[1].support = VarSupport::lower(0);
        let b = delta_expansion(v_b, Slot::neg_var(2), Some(Slot::var(1)), Slot::var(0));
        let mut v_c = vars();
        v_c[0].support = VarSupport::lower(0);
        let c = delta_expansion(v_c, Slot::var(1), Some(Slot::neg_var(0)), Slot::var(2));
        let cmp = window_equal(&a.sub(&b), &c, &Window::symmetric(6, 0));
        assert!(cmp.equal, "(2.7): {:?}", cmp.witness);
        // the two left-hand terms are unequal, with a witness
        let cmp = window_equal(&a, &b, &Window::symmetric(6, 0));
        assert!(!cmp.equal);
        assert!(cmp.witness.is_some());
    }

    #[test]
    fn leibniz_on_window() {
        // d(fg) = (df)g + f(dg) for admissible f, g
        let vars = vec![var("x", VarSupport::unbounded())];
        let f = Series::from_terms(
            vars.clone(),
            Scalar::zero(),
            vec![(mono1(-2), Scalar::from_int(3)), (mono1(1), Scalar::one())],
        );
        let g = delta_plain(vars, 0);
        let prod = f.mul(&g).unwrap();
        let lhs = prod.deriv(0);
        let rhs = f.deriv(0).mul(&g).unwrap().add(&f.mul(&g.deriv(0)).unwrap());
        let cmp = window_equal(&lhs, &rhs, &Window::symmetric(5, 0));
        assert!(cmp.equal, "{:?}", cmp.witness);
    }
}
