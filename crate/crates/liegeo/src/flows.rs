//! Euler / reconstruction vector fields and a fixed-step RK4 integrator with
//! conservation monitoring.
//!
//! Every field produces both the momentum derivative `ẋ` and the angular
//! velocity `ω`, so the reconstruction equation `ġ = g·ω` can be integrated
//! alongside the Euler equation.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{bracket, polar_project, AlgebraElement, GroupElement};
use crate::filtration::Filtration;
use crate::manakov::ManakovData;
use crate::{map_batch, Error, Result};

/// A right-invariant Euler field on so(n): `ẋ` together with the angular
/// velocity `ω(x)`.
pub trait Flow: Sync {
    fn n(&self) -> usize;
    /// Returns `(ẋ, ω)`.
    fn rhs(&self, x: &AlgebraElement) -> (AlgebraElement, AlgebraElement);
}

/// The general Bogoyavlensky chain field: `ω = A_0(x_0) + Σ_{i≥1} s_i x_i`,
/// with `A_0 = s_0·id` unless an explicit symmetric operator on `g_0` is
/// supplied.
#[derive(Debug, Clone)]
pub struct ChainField {
    filtration: Filtration,
    s: Vec<f64>,
    /// Operator on `g_0` in the orthonormal `g_0` basis.
    a0: Option<DMatrix<f64>>,
}

impl ChainField {
    pub fn new(filtration: Filtration, s: Vec<f64>) -> Result<Self> {
        if s.len() != filtration.depth() + 1 {
            return Err(Error::DimensionMismatch(s.len(), filtration.depth() + 1));
        }
        Ok(ChainField {
            filtration,
            s,
            a0: None,
        })
    }

    pub fn with_a0(mut self, a0: DMatrix<f64>) -> Result<Self> {
        let k = self.filtration.level_dim(0);
        if a0.nrows() != k || a0.ncols() != k {
            return Err(Error::DimensionMismatch(a0.nrows(), k));
        }
        if (a0.clone() - a0.transpose()).norm() > 1e-12 {
            return Err(Error::InvalidParameters("A_0 must be symmetric".into()));
        }
        self.a0 = Some(a0);
        Ok(self)
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    fn apply_a0(&self, x0: &AlgebraElement) -> AlgebraElement {
        match &self.a0 {
            None => x0.scale(self.s[0]),
            Some(m) => {
                let basis = self.filtration.level(0);
                let coords =
                    DVector::from_iterator(basis.len(), basis.iter().map(|u| {
                        u.coeffs().dot(x0.coeffs())
                    }));
                let out = m * coords;
                let mut y = AlgebraElement::zero(x0.n());
                for (c, u) in basis.iter().enumerate() {
                    y = y.add(&u.scale(out[c]));
                }
                y
            }
        }
    }
}

impl Flow for ChainField {
    fn n(&self) -> usize {
        self.filtration.ambient().n()
    }

    fn rhs(&self, x: &AlgebraElement) -> (AlgebraElement, AlgebraElement) {
        let dec = self.filtration.decompose(x);
        let parts = dec.parts();
        let a0x0 = self.apply_a0(&parts[0]);
        let mut omega = a0x0.clone();
        for (i, xi) in parts.iter().enumerate().skip(1) {
            omega = omega.add(&xi.scale(self.s[i]));
        }
        // xdot_0 = [x_0, A_0(x_0)], xdot_i = [s_i x_0 - A_0(x_0) + sum_{j<i}(s_i - s_j)x_j, x_i]
        let mut xdot = bracket(&parts[0], &a0x0).expect("same n");
        for (i, xi) in parts.iter().enumerate().skip(1) {
            let mut lhs = parts[0].scale(self.s[i]).sub(&a0x0);
            for (j, xj) in parts.iter().enumerate().take(i).skip(1) {
                lhs = lhs.add(&xj.scale(self.s[i] - self.s[j]));
            }
            xdot = xdot.add(&bracket(&lhs, xi).expect("same n"));
        }
        (xdot, omega)
    }
}

/// The rank-two field on so(4) with `d = span{e_23 + e_34, e_12}`:
/// `ω = ν_1 (x_23 + x_34)(e_23 + e_34) + ν_2 x_12 e_12`.
#[derive(Debug, Clone, Copy)]
pub struct Rank2So4Field {
    pub nu1: f64,
    pub nu2: f64,
}

impl Rank2So4Field {
    pub fn new(nu1: f64, nu2: f64) -> Self {
        Rank2So4Field { nu1, nu2 }
    }

    /// `H_sR = (1/2)(ν_1 (x_23 + x_34)^2 + ν_2 x_12^2)`.
    pub fn hamiltonian(&self, x: &AlgebraElement) -> f64 {
        let p = x.coeff(2, 3) + x.coeff(3, 4);
        0.5 * (self.nu1 * p * p + self.nu2 * x.coeff(1, 2) * x.coeff(1, 2))
    }
}

impl Flow for Rank2So4Field {
    fn n(&self) -> usize {
        4
    }

    fn rhs(&self, x: &AlgebraElement) -> (AlgebraElement, AlgebraElement) {
        let (n1, n2) = (self.nu1, self.nu2);
        let (x12, x13, x14) = (x.coeff(1, 2), x.coeff(1, 3), x.coeff(1, 4));
        let (x23, x24, x34) = (x.coeff(2, 3), x.coeff(2, 4), x.coeff(3, 4));
        let p = x23 + x34;
        let mut xdot = AlgebraElement::zero(4);
        xdot.set_coeff(1, 2, -n1 * x13 * p);
        xdot.set_coeff(1, 3, n1 * (x12 - x14) * p - n2 * x12 * x23);
        xdot.set_coeff(1, 4, n1 * x13 * p - n2 * x12 * x24);
        xdot.set_coeff(2, 3, -n1 * x24 * p + n2 * x12 * x13);
        xdot.set_coeff(2, 4, n1 * (x23 - x34) * p + n2 * x12 * x14);
        xdot.set_coeff(3, 4, n1 * x24 * p);
        let mut omega = AlgebraElement::zero(4);
        omega.set_coeff(2, 3, n1 * p);
        omega.set_coeff(3, 4, n1 * p);
        omega.set_coeff(1, 2, n2 * x12);
        (xdot, omega)
    }
}

/// Regular or singular Manakov field `ẋ = [x, ad_a⁻¹ ad_b x]`.
#[derive(Debug, Clone)]
pub struct ManakovField {
    data: ManakovData,
}

impl ManakovField {
    pub fn new(data: ManakovData) -> Self {
        ManakovField { data }
    }

    pub fn data(&self) -> &ManakovData {
        &self.data
    }
}

impl Flow for ManakovField {
    fn n(&self) -> usize {
        self.data.n()
    }

    fn rhs(&self, x: &AlgebraElement) -> (AlgebraElement, AlgebraElement) {
        let omega = self.data.omega(x);
        // decomposed form (s0)/(s1): the so(n)_a part of x is frozen, the
        // rest moves by [x_a + x_v, omega(x_v)]; since omega annihilates
        // so(n)_b-blocks this equals the plain bracket [x, omega]
        let xdot = bracket(x, &omega).expect("same n");
        (xdot, omega)
    }
}

/// Closure type evaluated by a [`Monitor`] at each recorded state.
pub type MonitorFn = Box<dyn Fn(&GroupElement, &AlgebraElement) -> f64 + Sync + Send>;

/// A named conserved quantity evaluated along a trajectory.
pub struct Monitor {
    pub name: String,
    pub eval: MonitorFn,
}

impl Monitor {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&GroupElement, &AlgebraElement) -> f64 + Sync + Send + 'static,
    ) -> Self {
        Monitor {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

/// Integration options for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOpts {
    pub t_end: f64,
    pub step: f64,
    /// Record every k-th accepted step (1 = every step).
    pub record_every: usize,
    /// Polar re-orthonormalization of `g` after every step.
    pub reproject: bool,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            t_end: 1.0,
            step: 1e-3,
            record_every: 1,
            reproject: true,
        }
    }
}

/// A time-stamped trajectory with conserved-quantity logs.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<(GroupElement, AlgebraElement)>,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    /// Max − min of a monitor series.
    pub fn drift(&self, name: &str) -> Option<f64> {
        self.monitors.iter().find(|(n, _)| n == name).map(|(_, v)| {
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min
        })
    }

    pub fn max_drift(&self) -> f64 {
        self.monitors
            .iter()
            .filter_map(|(n, _)| self.drift(n))
            .fold(0.0, f64::max)
    }

    pub fn last_state(&self) -> &(GroupElement, AlgebraElement) {
        self.states.last().expect("nonempty trajectory")
    }

    /// State at the recorded time closest to `t`.
    pub fn state_at(&self, t: f64) -> &(GroupElement, AlgebraElement) {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        &self.states[idx]
    }
}

/// Classical RK4 on the coupled system `ẋ = f(x)`, `ġ = g·ω(x)`.
pub fn integrate(
    flow: &dyn Flow,
    g0: &GroupElement,
    x0: &AlgebraElement,
    opts: IntegrateOpts,
    monitors: &[Monitor],
) -> Result<Trajectory> {
    assert!(opts.step > 0.0, "step must be positive");
    assert!(opts.record_every >= 1);
    let n_steps = (opts.t_end / opts.step).round() as usize;
    let mut g = g0.matrix().clone();
    let mut x = x0.clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        monitors: monitors.iter().map(|m| (m.name.clone(), Vec::new())).collect(),
    };
    let record = |t: f64, g: &DMatrix<f64>, x: &AlgebraElement, traj: &mut Trajectory| {
        let ge = GroupElement::from_matrix_tol(g.clone(), 1e-6).expect("orthogonal state");
        for (mi, m) in monitors.iter().enumerate() {
            traj.monitors[mi].1.push((m.eval)(&ge, x));
        }
        traj.times.push(t);
        traj.states.push((ge, x.clone()));
    };
    record(0.0, &g, &x, &mut traj);

    let h = opts.step;
    for step_idx in 0..n_steps {
        let deriv = |xx: &AlgebraElement, gg: &DMatrix<f64>| {
            let (xd, om) = flow.rhs(xx);
            let gd = gg * om.matrix();
            (xd, gd)
        };
        let (k1x, k1g) = deriv(&x, &g);
        let x2 = x.add(&k1x.scale(h / 2.0));
        let g2 = &g + &k1g * (h / 2.0);
        let (k2x, k2g) = deriv(&x2, &g2);
        let x3 = x.add(&k2x.scale(h / 2.0));
        let g3 = &g + &k2g * (h / 2.0);
        let (k3x, k3g) = deriv(&x3, &g3);
        let x4 = x.add(&k3x.scale(h));
        let g4 = &g + &k3g * h;
        let (k4x, k4g) = deriv(&x4, &g4);

        x = x.add(
            &k1x.add(&k2x.scale(2.0))
                .add(&k3x.scale(2.0))
                .add(&k4x)
                .scale(h / 6.0),
        );
        g += (k1g + k2g * 2.0 + k3g * 2.0 + k4g) * (h / 6.0);
        if opts.reproject {
            g = polar_project(&g);
        }
        let t = (step_idx + 1) as f64 * h;
        if !x.coeffs().iter().all(|v| v.is_finite()) || !g.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationDiverged(step_idx as f64 * h));
        }
        if (step_idx + 1) % opts.record_every == 0 || step_idx + 1 == n_steps {
            record(t, &g, &x, &mut traj);
        }
    }
    Ok(traj)
}

/// Integrates many initial conditions against one flow; parallel across
/// trajectories when the `parallel` feature is on, sequential otherwise.
pub fn integrate_batch(
    flow: &dyn Flow,
    initials: &[(GroupElement, AlgebraElement)],
    opts: IntegrateOpts,
) -> Vec<Result<Trajectory>> {
    map_batch(initials, |(g0, x0)| integrate(flow, g0, x0, opts, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{expm, inner, SoBasis};
    use crate::filtration::catalog;
    use crate::testutil::random_element;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_parameters_freeze_momentum() {
        let entry = catalog("so2-so3-so4").unwrap();
        let field = ChainField::new(entry.filtration.clone(), vec![1.5, 1.5, 1.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_element(4, &mut rng);
        let (xdot, _) = field.rhs(&x);
        assert_abs_diff_eq!(xdot.norm(), 0.0, epsilon = 1e-13);
        // and the trajectory stays put
        let traj = integrate(
            &field,
            &GroupElement::identity(4),
            &x,
            IntegrateOpts {
                t_end: 0.5,
                step: 1e-2,
                ..Default::default()
            },
            &[],
        )
        .unwrap();
        let (_, xt) = traj.last_state();
        assert_abs_diff_eq!(xt.sub(&x).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn x0_is_frozen_for_scalar_a0() {
        let entry = catalog("u1-su2-u2-so4").unwrap();
        let field =
            ChainField::new(entry.filtration.clone(), vec![0.7, 1.3, -0.4, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = random_element(4, &mut rng);
        let (xdot, _) = field.rhs(&x);
        let p0 = entry.filtration.projector(0);
        assert_abs_diff_eq!((p0 * xdot.coeffs()).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn chain_rhs_equals_plain_bracket_with_omega() {
        let entry = catalog("su3-g2-so7").unwrap();
        let field =
            ChainField::new(entry.filtration.clone(), vec![0.3, 1.1, -0.8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let x = random_element(7, &mut rng);
            let (xdot, omega) = field.rhs(&x);
            let plain = bracket(&x, &omega).unwrap();
            assert_abs_diff_eq!(xdot.sub(&plain).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank2_component_equations_match_bracket_form() {
        let field = Rank2So4Field::new(1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..10 {
            let x = random_element(4, &mut rng);
            let (xdot, omega) = field.rhs(&x);
            let plain = bracket(&x, &omega).unwrap();
            assert_abs_diff_eq!(xdot.sub(&plain).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank2_invariant_subspace_and_fixed_point() {
        let field = Rank2So4Field::new(1.0, 0.5);
        let b = SoBasis::new(4);
        // x_12 = x_13 = x_14 = 0 stays in so(3)
        let x = b.element(2, 3).scale(0.4).add(&b.element(2, 4).scale(-0.9));
        let (xdot, _) = field.rhs(&x);
        assert_abs_diff_eq!(xdot.coeff(1, 2), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xdot.coeff(1, 3), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xdot.coeff(1, 4), 0.0, epsilon = 1e-15);
        // x = e_23 - e_34 is an equilibrium
        let x = b.element(2, 3).sub(&b.element(3, 4));
        let (xdot, _) = field.rhs(&x);
        assert_abs_diff_eq!(xdot.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rank2_matches_chain_restricted_to_so3() {
        // the rank2-so4 chain with s_1 = 0, s_0 = 2 nu_1 reproduces the
        // reduced system on so(3)
        let nu1 = 0.8;
        let field = Rank2So4Field::new(nu1, 0.5);
        let entry = catalog("rank2-so4").unwrap();
        let chain =
            ChainField::new(entry.filtration.clone(), vec![2.0 * nu1, 0.0, 0.3]).unwrap();
        let b = SoBasis::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..5 {
            let x = b
                .element(2, 3)
                .scale(rng.gen_range(-1.0..1.0f64))
                .add(&b.element(2, 4).scale(rng.gen_range(-1.0..1.0f64)))
                .add(&b.element(3, 4).scale(rng.gen_range(-1.0..1.0f64)));
            let (d1, _) = field.rhs(&x);
            let (d2, _) = chain.rhs(&x);
            assert_abs_diff_eq!(d1.sub(&d2).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_is_conserved_along_chain_flow() {
        let entry = catalog("so2-so2so2-so4").unwrap();
        let field = ChainField::new(entry.filtration.clone(), vec![0.0, 1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let x0 = random_element(4, &mut rng);
        let monitors = vec![Monitor::new("norm2", |_g: &GroupElement, x: &AlgebraElement| {
            inner(x, x).unwrap()
        })];
        let traj = integrate(
            &field,
            &GroupElement::identity(4),
            &x0,
            IntegrateOpts::default(),
            &monitors,
        )
        .unwrap();
        assert!(traj.drift("norm2").unwrap() <= 1e-10);
    }

    #[test]
    fn momentum_map_is_conserved() {
        let entry = catalog("so2-so3-so4").unwrap();
        let field = ChainField::new(entry.filtration.clone(), vec![0.4, 1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let x0 = random_element(4, &mut rng);
        let g0 = expm(&random_element(4, &mut rng));
        let phi0 = g0.adjoint(&x0).unwrap();
        let traj = integrate(&field, &g0, &x0, IntegrateOpts::default(), &[]).unwrap();
        let (gt, xt) = traj.last_state();
        let phit = gt.adjoint(xt).unwrap();
        assert!(phit.sub(&phi0).norm() <= 1e-8);
    }

    #[test]
    fn energy_drift_scales_like_step_to_the_fourth() {
        let field = Rank2So4Field::new(1.0, 0.5);
        let b = SoBasis::new(4);
        let mut x0 = AlgebraElement::zero(4);
        x0.set_coeff(1, 2, 1.0);
        x0.set_coeff(2, 3, 0.5);
        x0.set_coeff(3, 4, -0.5);
        x0.set_coeff(2, 4, 1.0 / 2f64.sqrt());
        let _ = b;
        let f2 = field;
        let drift_at = |step: f64| {
            let monitors = vec![Monitor::new("h", move |_: &GroupElement, x: &AlgebraElement| {
                f2.hamiltonian(x)
            })];
            integrate(
                &field,
                &GroupElement::identity(4),
                &x0,
                IntegrateOpts {
                    t_end: 1.0,
                    step,
                    record_every: 10,
                    reproject: true,
                },
                &monitors,
            )
            .unwrap()
            .drift("h")
            .unwrap()
        };
        let d1 = drift_at(4e-2);
        let d2 = drift_at(2e-2);
        let ratio = d1 / d2;
        assert!(
            (8.0..32.0).contains(&ratio),
            "expected ~16x drift reduction, got {ratio} ({d1} vs {d2})"
        );
    }

    use rand::Rng;
}
