//! Acceptance gate: one test per criterion, each printing a single pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`). All
//! tolerances are pinned here.

use liegeo::algebra::{bracket, AlgebraElement, GroupElement, SoBasis};
use liegeo::filtration::{catalog, lie_hull, Filtration, SrStructure};
use liegeo::flows::{integrate, ChainField, Flow, IntegrateOpts, ManakovField, Monitor, Rank2So4Field};
use liegeo::geodesics::{
    euler_solution, group_solution, homogeneous_geodesic, sr_geodesic, stiefel_representative,
};
use liegeo::integrals::{casimir_polys_so4, casimirs_so4, search_integrals, Poly, PolySystem};
use liegeo::manakov::ManakovData;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_x(n: usize, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let d = n * (n - 1) / 2;
    let coeffs = nalgebra::DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
    AlgebraElement::from_coeffs(n, coeffs).unwrap()
}

/// Random chain parameters with consecutive values kept apart.
fn random_s(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut s: Vec<f64> = Vec::with_capacity(len);
    for i in 0..len {
        loop {
            let v: f64 = rng.gen_range(-2.0..2.0);
            if i == 0 || (v - s[i - 1]).abs() > 0.1 {
                s.push(v);
                break;
            }
        }
    }
    s
}

fn verdict(criterion: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {criterion:2} {name:<28} {} ({detail})",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}): {detail}");
}

#[test]
fn criterion_01_closed_form_vs_ode() {
    let chains = [
        "so2-so3-so4",
        "so2-so2so2-so4",
        "u1-su2-u2-so4",
        "rank2-so4",
        "su3-g2-so7",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for name in chains {
        let entry = catalog(name).unwrap();
        let f = entry.filtration.clone();
        let n = f.ambient().n();
        let links = f.depth();
        for _ in 0..50 {
            let x0 = random_x(n, &mut rng);
            let s = random_s(links + 1, &mut rng);
            let g0 = GroupElement::identity(n);
            let field = ChainField::new(f.clone(), s.clone()).unwrap();
            let traj = integrate(
                &field,
                &g0,
                &x0,
                IntegrateOpts {
                    t_end: 1.0,
                    step: 1e-4,
                    record_every: 1000,
                    reproject: true,
                },
                &[],
            )
            .unwrap();
            for (t, (gt, xt)) in traj.times.iter().zip(&traj.states) {
                let xc = euler_solution(&f, &s, &x0, *t).unwrap();
                let gc = group_solution(&f, &s, &g0, &x0, *t).unwrap();
                worst = worst.max(xc.sub(xt).norm());
                worst = worst.max((gc.matrix() - gt.matrix()).norm());
            }
        }
    }
    verdict(
        1,
        "closed-form vs ode oracle",
        worst <= 1e-6,
        &format!("sup deviation {worst:.3e} <= 1e-6, 5 chains x 50 draws"),
    );
}

#[test]
fn criterion_02_plug_in_residual() {
    let chains = ["so2-so3-so4", "so2-so2so2-so4", "u1-su2-u2-so4", "rank2-so4"];
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for name in chains {
        let entry = catalog(name).unwrap();
        let f = entry.filtration.clone();
        let links = f.depth();
        for _ in 0..25 {
            let x0 = random_x(4, &mut rng);
            let s = random_s(links + 1, &mut rng);
            let field = ChainField::new(f.clone(), s.clone()).unwrap();
            let t = rng.gen_range(0.1..0.9);
            let plus = euler_solution(&f, &s, &x0, t + h).unwrap();
            let minus = euler_solution(&f, &s, &x0, t - h).unwrap();
            let fd = plus.sub(&minus).scale(1.0 / (2.0 * h));
            let xt = euler_solution(&f, &s, &x0, t).unwrap();
            let (want, _) = field.rhs(&xt);
            worst = worst.max(fd.sub(&want).norm());
        }
    }
    verdict(
        2,
        "closed-form plug-in residual",
        worst <= 1e-8,
        &format!("central difference residual {worst:.3e} <= 1e-8, 100 points"),
    );
}

#[test]
fn criterion_03_reference_levels_and_drift() {
    let mut first = AlgebraElement::zero(4);
    first.set_coeff(1, 2, 1.0);
    first.set_coeff(2, 3, 0.5);
    first.set_coeff(3, 4, -0.5);
    first.set_coeff(2, 4, 1.0 / 2.0_f64.sqrt());
    let mut second = AlgebraElement::zero(4);
    second.set_coeff(2, 3, 1.0 / 2.0_f64.sqrt());
    second.set_coeff(2, 4, 3.0_f64.sqrt() / 2.0_f64.sqrt());

    let (i1a, i2a) = casimirs_so4(&first).unwrap();
    let (i1b, i2b) = casimirs_so4(&second).unwrap();
    let levels_ok = (i1a - 2.0).abs() <= 1e-12
        && (i2a + 0.5).abs() <= 1e-12
        && (i1b - 2.0).abs() <= 1e-12
        && i2b.abs() <= 1e-12;

    let field = Rank2So4Field::new(1.0, 0.5);
    let mut worst_drift: f64 = 0.0;
    for x0 in [&first, &second] {
        let monitors = vec![
            Monitor::new("h", {
                let f = field;
                move |_: &GroupElement, x: &AlgebraElement| f.hamiltonian(x)
            }),
            Monitor::new("i1", |_: &GroupElement, x: &AlgebraElement| {
                casimirs_so4(x).unwrap().0
            }),
            Monitor::new("i2", |_: &GroupElement, x: &AlgebraElement| {
                casimirs_so4(x).unwrap().1
            }),
        ];
        let traj = integrate(
            &field,
            &GroupElement::identity(4),
            x0,
            IntegrateOpts {
                t_end: 1.0,
                step: 1e-3,
                record_every: 1,
                reproject: true,
            },
            &monitors,
        )
        .unwrap();
        worst_drift = worst_drift.max(traj.max_drift());
    }
    verdict(
        3,
        "reference casimir levels",
        levels_ok && worst_drift <= 1e-8,
        &format!(
            "I1 = 2, I2 = -1/2 / 0 to 1e-12; drift {worst_drift:.3e} <= 1e-8"
        ),
    );
}

#[test]
fn criterion_04_integral_search() {
    let b = SoBasis::new(4);
    let mut ok = true;
    let mut detail = String::new();

    for (nu1, nu2) in [(1.0, 0.5), (3.0 / 7.0, 2.0 / 5.0)] {
        let field = Rank2So4Field::new(nu1, nu2);
        let sys = PolySystem::quadratic_from_flow(&field).unwrap();
        let (i1, i2) = casimir_polys_so4();
        let mut h = Poly::zero();
        h.add_term(vec![b.flat(2, 3), b.flat(2, 3)], 0.5 * nu1);
        h.add_term(vec![b.flat(3, 4), b.flat(3, 4)], 0.5 * nu1);
        h.add_term(vec![b.flat(2, 3), b.flat(3, 4)], nu1);
        h.add_term(vec![b.flat(1, 2), b.flat(1, 2)], 0.5 * nu2);
        let report = search_integrals(&sys, 6, &[h, i1, i2]).unwrap();
        if !report.new_integrals.is_empty() {
            ok = false;
        }
        detail.push_str(&format!(
            "nu=({nu1:.3},{nu2:.3}): {} new; ",
            report.new_integrals.len()
        ));
    }

    let field = Rank2So4Field::new(1.0, 0.5);
    let sys = PolySystem::quadratic_from_flow(&field).unwrap();
    let sub = sys
        .restrict(&[b.flat(2, 3), b.flat(2, 4), b.flat(3, 4)])
        .unwrap();
    let restricted = search_integrals(&sub, 2, &[]).unwrap();
    let two = restricted.new_integrals.len() == 2
        && restricted.new_integrals[0].degree() == 1
        && restricted.new_integrals[1].degree() == 2;
    if !two {
        ok = false;
    }
    detail.push_str(&format!(
        "restricted d=2: {} generators of degrees {:?}",
        restricted.new_integrals.len(),
        restricted
            .new_integrals
            .iter()
            .map(|p| p.degree())
            .collect::<Vec<_>>()
    ));
    verdict(4, "polynomial integral search", ok, &detail);
}

#[test]
fn criterion_05_hull_generators() {
    let mut dims = Vec::new();
    let mut ok = true;
    for n in 3..=7 {
        let b = SoBasis::new(n);
        // v1 = sum of e_{k,k+1} for k >= 2, v2 = e_12
        let mut v1 = AlgebraElement::zero(n);
        for k in 2..n {
            v1 = v1.add(&b.element(k, k + 1));
        }
        let v2 = b.element(1, 2);
        let hull = lie_hull(b, &[v1, v2]);
        dims.push(hull.len());
        if hull.len() != n * (n - 1) / 2 {
            ok = false;
        }
    }
    verdict(
        5,
        "two-generator hulls",
        ok,
        &format!("dims {dims:?} == [3, 6, 10, 15, 21]"),
    );
}

#[test]
fn criterion_06_g2_chain() {
    let entry = catalog("su3-g2-so7").unwrap();
    let f = &entry.filtration;
    let dims = (0..=f.depth()).map(|i| f.level_dim(i)).collect::<Vec<_>>();
    let pdims = (1..=f.depth()).map(|i| f.complement_dim(i)).collect::<Vec<_>>();
    let mut ok = dims == [8, 14, 21] && pdims == [6, 7];

    // bracket closure of each level against its own projector
    let mut closure: f64 = 0.0;
    for i in 0..f.depth() {
        let level = f.level(i);
        let mut proj = nalgebra::DMatrix::<f64>::zeros(21, 21);
        for j in 0..=i {
            proj += f.projector(j);
        }
        for a in level {
            for c in level {
                let br = bracket(a, c).unwrap();
                let residual = br.coeffs() - &proj * br.coeffs();
                closure = closure.max(residual.norm());
            }
        }
    }
    if closure > 1e-10 {
        ok = false;
    }

    // orthonormality of the stored bases
    let mut defect: f64 = 0.0;
    let all: Vec<&AlgebraElement> = (0..=f.depth()).flat_map(|i| f.complement(i)).collect();
    for (i, a) in all.iter().enumerate() {
        for (j, c) in all.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((a.coeffs().dot(c.coeffs()) - want).abs());
        }
    }
    if defect > 1e-12 {
        ok = false;
    }
    verdict(
        6,
        "g2 chain structure",
        ok,
        &format!("dims {dims:?}, p-dims {pdims:?}, closure {closure:.2e}, gram defect {defect:.2e}"),
    );
}

#[test]
fn criterion_07_manakov_conservation() {
    let cases: Vec<(Vec<f64>, Vec<f64>, bool)> = vec![
        (vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 4.0, 9.0, 16.0], false),
        (vec![1.0, 1.0, 2.0, 2.0], vec![3.0, 3.0, 1.0, 1.0], true),
        (
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![1.0, 4.0, 9.0, 16.0, 25.0],
            false,
        ),
        (
            vec![1.0, 1.0, 2.0, 3.0, 3.0],
            vec![4.0, 4.0, 2.0, 1.0, 1.0],
            true,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst_lambda: f64 = 0.0;
    let mut worst_block: f64 = 0.0;
    for (a, b, singular) in cases {
        let data = ManakovData::new(a, b).unwrap();
        assert_eq!(data.is_singular(), singular);
        if singular {
            data.validate_singular().unwrap();
        }
        let n = data.n();
        let x0 = random_x(n, &mut rng);
        let field = ManakovField::new(data.clone());
        let labels: Vec<(usize, usize)> =
            data.integrals(&x0).iter().map(|(k, m, _)| (*k, *m)).collect();
        let monitors: Vec<Monitor> = labels
            .iter()
            .map(|&(k, m)| {
                let d = data.clone();
                Monitor::new(format!("lambda[{k},{m}]"), move |_: &GroupElement, x: &AlgebraElement| {
                    d.integrals(x)
                        .into_iter()
                        .find(|(kk, mm, _)| (*kk, *mm) == (k, m))
                        .unwrap()
                        .2
                })
            })
            .collect();
        let traj = integrate(
            &field,
            &GroupElement::identity(n),
            &x0,
            IntegrateOpts {
                t_end: 1.0,
                step: 1e-3,
                record_every: 10,
                reproject: true,
            },
            &monitors,
        )
        .unwrap();
        worst_lambda = worst_lambda.max(traj.max_drift());
        if singular {
            for (_, xt) in &traj.states {
                for &(i, j) in &data.so_n_a_pairs() {
                    worst_block = worst_block.max((xt.coeff(i, j) - x0.coeff(i, j)).abs());
                }
            }
        }
    }
    verdict(
        7,
        "manakov conservation",
        worst_lambda <= 1e-8 && worst_block <= 1e-10,
        &format!(
            "lambda drift {worst_lambda:.3e} <= 1e-8, singular block drift {worst_block:.3e} <= 1e-10"
        ),
    );
}

#[test]
fn criterion_08_metric_coincidence() {
    let (alpha1, alpha2, beta1, beta2) = (3.0, 1.0, 5.0, 1.0);
    let md4 = ManakovData::new(
        vec![alpha1, alpha1, alpha2, alpha2],
        vec![beta1, beta1, beta2, beta2],
    )
    .unwrap();
    let s1 = (beta1 - beta2) / (alpha1 - alpha2);
    let b4 = SoBasis::new(4);
    let chain4 = vec![vec![b4.element(1, 2), b4.element(3, 4)], b4.elements()];
    let f4 = Filtration::new(b4, &chain4).unwrap();
    let srs4 = SrStructure::new(f4.clone(), vec![1], vec![0.0, s1]).unwrap();
    let dev4 = md4.chain_coincidence(&srs4).unwrap();

    let (a1, a2, a3) = (4.0, 3.0, 2.0);
    let (b1, b2, b3) = (7.0, 5.0, 3.0);
    let md6 = ManakovData::new(
        vec![a1, a1, a2, a2, a3, a3],
        vec![b1, b1, b2, b2, b3, b3],
    )
    .unwrap();
    let b6 = SoBasis::new(6);
    let chain6 = vec![
        vec![b6.element(1, 2), b6.element(3, 4), b6.element(5, 6)],
        b6.elements(),
    ];
    let f6 = Filtration::new(b6, &chain6).unwrap();
    let srs6 = SrStructure::new(f6, vec![1], vec![0.0, (b1 - b2) / (a1 - a2)]).unwrap();
    let dev6 = md6.chain_coincidence(&srs6).unwrap();

    // perturbing a within a block must break the coincidence
    let md_bad = ManakovData::new(
        vec![alpha1, alpha1 + 0.3, alpha2, alpha2 + 0.2],
        vec![beta1, beta1, beta2, beta2],
    )
    .unwrap();
    let dev_bad = md_bad.chain_coincidence(&srs4).unwrap();

    verdict(
        8,
        "manakov-chain coincidence",
        dev4 <= 1e-12 && dev6 <= 1e-12 && dev_bad > 1e-3,
        &format!("so(4) {dev4:.2e}, so(6) {dev6:.2e}, perturbed {dev_bad:.2e} > 0"),
    );
}

#[test]
fn criterion_09_horizontality_and_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);

    // horizontal velocity on the u(2) chain
    let entry = catalog("u1-su2-u2-so4").unwrap();
    let srs = entry.sr_structure().unwrap();
    let x0 = random_x(4, &mut rng);
    let g0 = GroupElement::identity(4);
    let h = 1e-5;
    let mut leak: f64 = 0.0;
    for t in [0.25, 0.5, 0.75] {
        let plus = sr_geodesic(&srs, &g0, &x0, t + h).unwrap();
        let minus = sr_geodesic(&srs, &g0, &x0, t - h).unwrap();
        let here = sr_geodesic(&srs, &g0, &x0, t).unwrap();
        let vel = here.matrix().transpose() * (plus.matrix() - minus.matrix()) / (2.0 * h);
        let skew = (&vel - vel.transpose()) * 0.5;
        let v = AlgebraElement::from_matrix(&skew).unwrap();
        for i in 0..=srs.filtration().depth() {
            if !srs.index_set().contains(&i) {
                leak = leak.max((srs.filtration().projector(i) * v.coeffs()).norm());
            }
        }
    }

    // reduction on the Stiefel chain so(3) < so(4) < so(5)
    let entry = catalog("stiefel(5)").unwrap();
    let srs = entry.sr_structure().unwrap();
    let f = srs.filtration().clone();
    let raw = random_x(5, &mut rng);
    let xbar = raw.sub(f.decompose(&raw).part(0));
    let field = ChainField::new(f.clone(), srs.s().to_vec()).unwrap();
    let traj = integrate(
        &field,
        &GroupElement::identity(5),
        &xbar,
        IntegrateOpts {
            t_end: 1.0,
            step: 1e-3,
            record_every: 10,
            reproject: true,
        },
        &[],
    )
    .unwrap();
    let mut k_leak: f64 = 0.0;
    for (_, xt) in &traj.states {
        k_leak = k_leak.max((f.projector(0) * xt.coeffs()).norm());
    }
    let mut stiefel_dev: f64 = 0.0;
    for t in [0.0, 0.3, 0.6, 1.0] {
        let full = sr_geodesic(&srs, &GroupElement::identity(5), &xbar, t).unwrap();
        let reduced = homogeneous_geodesic(&srs, &xbar, t).unwrap();
        let a = stiefel_representative(2, &full).unwrap();
        let b = stiefel_representative(2, &reduced).unwrap();
        stiefel_dev = stiefel_dev.max((a - b).norm());
    }
    verdict(
        9,
        "horizontality and reduction",
        leak <= 1e-8 && k_leak <= 1e-10 && stiefel_dev <= 1e-8,
        &format!(
            "velocity leak {leak:.2e} <= 1e-8, pr_k drift {k_leak:.2e} <= 1e-10, quotient dev {stiefel_dev:.2e} <= 1e-8"
        ),
    );
}

#[test]
fn criterion_10_taming_limit() {
    let entry = catalog("u1-su2-u2-so4").unwrap();
    let f = entry.filtration.clone();
    let s_sr = entry.s.clone(); // zeros off the index set
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let x0 = random_x(4, &mut rng);
    let g0 = GroupElement::identity(4);

    let deviation = |eps: f64| -> f64 {
        let s_tamed: Vec<f64> = s_sr
            .iter()
            .enumerate()
            .map(|(i, &v)| if entry.index_set.contains(&i) { v } else { eps })
            .collect();
        let mut dev: f64 = 0.0;
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let sr = group_solution(&f, &s_sr, &g0, &x0, t).unwrap();
            let tamed = group_solution(&f, &s_tamed, &g0, &x0, t).unwrap();
            dev = dev.max((sr.matrix() - tamed.matrix()).norm());
        }
        dev
    };
    let d2 = deviation(1e-2);
    let d3 = deviation(1e-3);
    let ratio = d2 / d3;
    verdict(
        10,
        "taming limit",
        (5.0..=20.0).contains(&ratio),
        &format!("deviation(1e-2)/deviation(1e-3) = {ratio:.2} in [5, 20]"),
    );
}
