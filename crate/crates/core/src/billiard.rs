//! Billiard in the ellipsoid `{x : xᵀ C⁻² x ≤ 1}`.
//!
//! A state `(x, y)` is a boundary point together with the unit direction
//! in which the ball leaves it. [`geometric_step`] is the elementary
//! oracle: follow the chord, then reflect in the tangent plane.
//!
//! [`mv_step`] computes the same map through the refactorization of the
//! quadratic matrix polynomial
//!
//! ```text
//! L(λ) = y⊗y + λ x∧y − λ² C² = (λC + y⊗ξ)(−λC + ξ⊗y),   ξ = C⁻¹x, ‖ξ‖ = 1.
//! ```
//!
//! Swapping the factors gives `(−λC + ξ⊗y)(λC + y⊗ξ)`. Writing it again as
//! `(λC + y'⊗ξ')(−λC + ξ'⊗y')` and matching coefficients forces
//! `y' = ξ` (sign fixed to +) and `ξ' = −y + α C⁻¹ξ`. The unit-norm
//! condition on `ξ'` is quadratic in `α`, with roots `0` and
//! `α = 2 yᵀC⁻²x / ‖C⁻²x‖²`; the nonzero root is the admissible one. Put
//! `φ(x, y) = (Cξ', y')`.
//!
//! Here `ξ' = −(y − α C⁻²x)` is minus the reflection of `y` in the tangent
//! plane at `x`. For a pair `(x₀, y₀)` with `y₀` *arriving* at `x₀`, the map
//! `Ψ = −φ∘φ` returns `(x₁, y₁)`: the next boundary point and the direction
//! of the chord between them. The states here carry the *leaving*
//! direction, so [`mv_step`] conjugates `Ψ` by the reflection
//! `R(x, y) = (x, y − α C⁻²x)`, which is read off the same refactorization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};

const BOUNDARY_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-12;
/// `|ŷ · n̂|` below this is treated as tangential motion.
const TANGENCY_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-8;

/// The ellipsoid with shape matrix `C` (symmetric positive definite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    c: DenseMatrix,
    c_inv: DenseMatrix,
    c_sq: DenseMatrix,
    /// `C⁻²`.
    a: DenseMatrix,
}

impl Ellipsoid {
    pub fn new(c: DenseMatrix) -> Result<Self> {
        let eig = symmetric_eigen(&c, 1e-12)?;
        if eig.values.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidInput("ellipsoid matrix must be positive definite".into()));
        }
        let c = c.symmetrized();
        Ok(Self {
            c_inv: eig.recompose(|l| 1.0 / l),
            c_sq: eig.recompose(|l| l * l),
            a: eig.recompose(|l| 1.0 / (l * l)),
            c,
        })
    }

    /// Axis-aligned ellipsoid with semi-axes `d`.
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_diagonal(d))
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn c(&self) -> &DenseMatrix {
        &self.c
    }

    pub fn c_inv(&self) -> &DenseMatrix {
        &self.c_inv
    }

    /// `xᵀ C⁻² x − 1`.
    pub fn boundary_residual(&self, x: &[f64]) -> f64 {
        dot(x, &self.a.matvec(x)) - 1.0
    }

    /// Reflection of `y` in the tangent plane at the boundary point `x`.
    pub fn reflect(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.a.matvec(x);
        let k = 2.0 * dot(y, &n) / dot(&n, &n);
        y.iter().zip(&n).map(|(yi, ni)| yi - k * ni).collect()
    }

    /// One Newton step for `xᵀC⁻²x = 1` along the gradient direction `C⁻²x`.
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let g = self.a.matvec(x);
        let res = dot(x, &g) - 1.0;
        let k = res / (2.0 * dot(&g, &g));
        x.iter().zip(&g).map(|(xi, gi)| xi - k * gi).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilliardState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl BilliardState {
    /// Validates boundary membership, unit direction and inward motion.
    pub fn new(e: &Ellipsoid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let st = Self { x, y };
        st.check(e)?;
        Ok(st)
    }

    pub fn check(&self, e: &Ellipsoid) -> Result<()> {
        if self.x.len() != e.dim() || self.y.len() != e.dim() {
            return Err(Error::InvalidInput("state dimension does not match the ellipsoid".into()));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("state entries must be finite".into()));
        }
        let r = e.boundary_residual(&self.x);
        if r.abs() > BOUNDARY_TOL {
            return Err(Error::InvalidInput(format!("x is not on the boundary (residual {r:e})")));
        }
        let norm = dot(&self.y, &self.y).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidInput(format!("direction is not a unit vector (norm {norm})")));
        }
        let n = e.a.matvec(&self.x);
        let cos = dot(&self.y, &n) / dot(&n, &n).sqrt();
        if cos.abs() <= TANGENCY_TOL {
            return Err(Error::DegenerateTrajectory("direction is tangent to the boundary".into()));
        }
        if cos > 0.0 {
            return Err(Error::InvalidInput("direction points out of the ellipsoid".into()));
        }
        Ok(())
    }

    /// Same point, travelling back along the chord that arrived here.
    pub fn reversed(&self, e: &Ellipsoid) -> Self {
        let r = e.reflect(&self.x, &self.y);
        Self {
            x: self.x.clone(),
            y: r.into_iter().map(|v| -v).collect(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Follow the chord from `x₀` along `y₀` to the boundary, then reflect.
pub fn geometric_step(e: &Ellipsoid, st: &BilliardState) -> Result<BilliardState> {
    let ax = e.a.matvec(&st.x);
    let ay = e.a.matvec(&st.y);
    let lin = dot(&st.y, &ax);
    let quad = dot(&st.y, &ay);
    if lin.abs() <= TANGENCY_TOL * dot(&ax, &ax).sqrt() {
        return Err(Error::DegenerateTrajectory("tangential chord".into()));
    }
    let tau = -2.0 * lin / quad;
    if !(tau > 1e-12) {
        return Err(Error::DegenerateTrajectory(format!("no forward intersection (tau = {tau:e})")));
    }
    let x1: Vec<f64> = st.x.iter().zip(&st.y).map(|(x, y)| x + tau * y).collect();
    let x1 = e.project(&x1);
    let y1 = normalized(e.reflect(&x1, &st.y));
    Ok(BilliardState { x: x1, y: y1 })
}

/// Coefficients of `L(λ) = l0 + λ l1 + λ² l2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvPolynomial {
    /// `y⊗y`.
    pub l0: DenseMatrix,
    /// `x∧y = x⊗y − y⊗x`.
    pub l1: DenseMatrix,
    /// `−C²`.
    pub l2: DenseMatrix,
}

impl MvPolynomial {
    pub fn eval(&self, lambda: f64) -> DenseMatrix {
        &(&self.l0 + &self.l1.scale(lambda)) + &self.l2.scale(lambda * lambda)
    }

    pub fn det(&self, lambda: f64) -> f64 {
        self.eval(lambda).determinant()
    }
}

fn outer(u: &[f64], v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(u.len(), |i, j| u[i] * v[j])
}

pub fn mv_polynomial(e: &Ellipsoid, st: &BilliardState) -> MvPolynomial {
    MvPolynomial {
        l0: outer(&st.y, &st.y),
        l1: &outer(&st.x, &st.y) - &outer(&st.y, &st.x),
        l2: e.c_sq.scale(-1.0),
    }
}

/// The two linear factors `(λC + y⊗ξ, −λC + ξ⊗y)` at a given `λ`.
pub fn mv_factors(e: &Ellipsoid, st: &BilliardState, lambda: f64) -> (DenseMatrix, DenseMatrix) {
    let xi = e.c_inv.matvec(&st.x);
    let left = &e.c.scale(lambda) + &outer(&st.y, &xi);
    let right = &e.c.scale(-lambda) + &outer(&xi, &st.y);
    (left, right)
}

/// Refactorization of the swapped product: returns `(y', ξ', α)`.
fn refactor(e: &Ellipsoid, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let xi = e.c_inv.matvec(x);
    let w = e.c_inv.matvec(&xi);
    // ‖−y + α w‖² = 1  ⇔  α (α ‖w‖² − 2 y·w) = 0 when ‖y‖ = 1
    let ww = dot(&w, &w);
    let yw = dot(y, &w);
    if yw.abs() <= TANGENCY_TOL * ww.sqrt() {
        return Err(Error::DegenerateTrajectory("refactorization has only the trivial root".into()));
    }
    let alpha = 2.0 * yw / ww;
    let xi_new: Vec<f64> = y.iter().zip(&w).map(|(yi, wi)| -yi + alpha * wi).collect();
    Ok((xi, xi_new, alpha))
}

/// `φ(x, y) = (C ξ', y')`.
fn phi(e: &Ellipsoid, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (y_new, xi_new, _) = refactor(e, x, y)?;
    Ok((e.c.matvec(&xi_new), y_new))
}

/// Reflection at `x` read off the refactorization: `y − α C⁻² x = −ξ'`.
fn mv_reflect(e: &Ellipsoid, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (_, xi_new, _) = refactor(e, x, y)?;
    Ok(xi_new.into_iter().map(|v| -v).collect())
}

/// Billiard step through the matrix-polynomial refactorization, without
/// comparing against the geometric oracle.
pub fn mv_step_unchecked(e: &Ellipsoid, st: &BilliardState) -> Result<BilliardState> {
    let arriving = mv_reflect(e, &st.x, &st.y)?;
    let (x_a, y_a) = phi(e, &st.x, &arriving)?;
    let (x_b, y_b) = phi(e, &x_a, &y_a)?;
    let x1: Vec<f64> = x_b.into_iter().map(|v| -v).collect();
    let chord: Vec<f64> = y_b.into_iter().map(|v| -v).collect();
    let x1 = e.project(&x1);
    let y1 = normalized(mv_reflect(e, &x1, &chord)?);
    Ok(BilliardState { x: x1, y: y1 })
}

/// [`mv_step_unchecked`] cross-checked against [`geometric_step`].
pub fn mv_step(e: &Ellipsoid, st: &BilliardState) -> Result<BilliardState> {
    let mv = mv_step_unchecked(e, st)?;
    let geo = geometric_step(e, st)?;
    let dev = max_diff(&mv.x, &geo.x).max(max_diff(&mv.y, &geo.y));
    if dev > ORACLE_TOL {
        return Err(Error::Consistency(format!("refactorization step deviates from the reflection by {dev:e}")));
    }
    Ok(mv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMethod {
    Geometric,
    MoserVeselov,
}

/// `bounces + 1` states starting with `st`.
pub fn orbit(e: &Ellipsoid, st: &BilliardState, bounces: usize, method: StepMethod) -> Result<Vec<BilliardState>> {
    st.check(e)?;
    let mut out = Vec::with_capacity(bounces + 1);
    out.push(st.clone());
    for _ in 0..bounces {
        let cur = out.last().expect("nonempty");
        let next = match method {
            StepMethod::Geometric => geometric_step(e, cur)?,
            StepMethod::MoserVeselov => mv_step_unchecked(e, cur)?,
        };
        out.push(next);
    }
    Ok(out)
}

/// CSV `k,x_1..x_n,y_1..y_n`.
pub fn write_orbit_csv<W: Write>(states: &[BilliardState], comment: Option<&str>, w: &mut W) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    let n = states.first().map_or(0, |s| s.x.len());
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("y_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for (k, s) in states.iter().enumerate() {
        let mut line = k.to_string();
        for v in s.x.iter().chain(&s.y) {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Random inward state with `|cos| ≥ 0.1` against the normal.
pub fn random_state(e: &Ellipsoid, rng: &mut crate::sample::Rng64) -> BilliardState {
    let n = e.dim();
    loop {
        let z = normalized((0..n).map(|_| rng.normal()).collect());
        let x = e.c.matvec(&z);
        let mut y = normalized((0..n).map(|_| rng.normal()).collect());
        let nrm = normalized(e.a.matvec(&x));
        let cos = dot(&y, &nrm);
        if cos.abs() < 0.1 {
            continue;
        }
        if cos > 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        if let Ok(st) = BilliardState::new(e, x, y) {
            return st;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_spd, Rng64};

    #[test]
    fn circle_diameter() {
        let e = Ellipsoid::diagonal(&[1.0, 1.0]).unwrap();
        let st = BilliardState::new(&e, vec![1.0, 0.0], vec![-1.0, 0.0]).unwrap();
        let g = geometric_step(&e, &st).unwrap();
        assert!(max_diff(&g.x, &[-1.0, 0.0]) < 1e-15 && max_diff(&g.y, &[1.0, 0.0]) < 1e-15);
        let m = mv_step(&e, &st).unwrap();
        assert!(max_diff(&m.x, &g.x) < 1e-15 && max_diff(&m.y, &g.y) < 1e-15);
    }

    #[test]
    fn circle_reflection_angle() {
        let e = Ellipsoid::diagonal(&[1.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let st = BilliardState::new(&e, vec![1.0, 0.0], vec![-h, h]).unwrap();
        let g = geometric_step(&e, &st).unwrap();
        assert!(max_diff(&g.x, &[0.0, 1.0]) < 1e-15);
        let incoming = dot(&st.y, &g.x);
        let outgoing = dot(&g.y, &g.x);
        assert!((incoming.abs() - outgoing.abs()).abs() < 1e-15 && outgoing < 0.0);
    }

    #[test]
    fn tangent_and_outward_rejected() {
        let e = Ellipsoid::diagonal(&[2.0, 1.0]).unwrap();
        assert!(matches!(
            BilliardState::new(&e, vec![2.0, 0.0], vec![0.0, 1.0]),
            Err(Error::DegenerateTrajectory(_))
        ));
        assert!(BilliardState::new(&e, vec![2.0, 0.0], vec![1.0, 0.0]).is_err());
        let bad = BilliardState { x: vec![2.0, 0.0], y: vec![0.0, 1.0] };
        assert!(matches!(geometric_step(&e, &bad), Err(Error::DegenerateTrajectory(_))));
        assert!(matches!(mv_step(&e, &bad), Err(Error::DegenerateTrajectory(_))));
    }

    #[test]
    fn factorization_identity() {
        let mut rng = Rng64::seeded(31);
        let e = Ellipsoid::new(random_spd(&mut rng, 3, 0.5, 2.0)).unwrap();
        let st = random_state(&e, &mut rng);
        let p = mv_polynomial(&e, &st);
        assert!((p.l0.trace() - 1.0).abs() < 1e-14);
        assert!(p.l1.max_abs() > 1e-3);
        for lambda in [-1.0, 0.5, 2.0] {
            let (l, r) = mv_factors(&e, &st, lambda);
            assert!(l.matmul(&r).max_abs_diff(&p.eval(lambda)) < 1e-10);
            let swapped = r.matmul(&l);
            assert!((swapped.determinant() - p.det(lambda)).abs() < 1e-10 * p.det(lambda).abs().max(1.0));
        }
    }

    #[test]
    fn ellipse_orbit_agrees_with_oracle() {
        let e = Ellipsoid::diagonal(&[2.0, 1.0]).unwrap();
        let mut rng = Rng64::seeded(32);
        let st = random_state(&e, &mut rng);
        let geo = orbit(&e, &st, 100, StepMethod::Geometric).unwrap();
        let mut cur = st.clone();
        let dets: Vec<f64> = [-2.0, -0.5, 0.3, 1.0, 1.7].iter().map(|&l| mv_polynomial(&e, &st).det(l)).collect();
        for g in geo.iter().skip(1) {
            cur = mv_step(&e, &cur).unwrap();
            assert!(max_diff(&cur.x, &g.x) < 1e-8 && max_diff(&cur.y, &g.y) < 1e-8);
            assert!((dot(&cur.y, &cur.y).sqrt() - 1.0).abs() < 1e-12);
            assert!(e.boundary_residual(&cur.x).abs() < 1e-10);
            let p = mv_polynomial(&e, &cur);
            for (k, &l) in [-2.0, -0.5, 0.3, 1.0, 1.7].iter().enumerate() {
                assert!((p.det(l) - dets[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reversibility() {
        let mut rng = Rng64::seeded(33);
        let e = Ellipsoid::new(random_spd(&mut rng, 3, 0.5, 2.0)).unwrap();
        let st = random_state(&e, &mut rng);
        let fwd = geometric_step(&e, &st).unwrap();
        let back = geometric_step(&e, &fwd.reversed(&e)).unwrap();
        assert!(max_diff(&back.x, &st.x) < 1e-8);
    }

    #[test]
    fn orbit_csv_layout() {
        let e = Ellipsoid::diagonal(&[1.0, 1.0]).unwrap();
        let st = BilliardState::new(&e, vec![1.0, 0.0], vec![-1.0, 0.0]).unwrap();
        let states = orbit(&e, &st, 2, StepMethod::MoserVeselov).unwrap();
        let mut buf = Vec::new();
        write_orbit_csv(&states, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "k,x_1,x_2,y_1,y_2");
        assert_eq!(text.lines().count(), 4);
    }
}
