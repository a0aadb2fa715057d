//! Turns a parsed [`RunConfig`] into runtime objects: the flow, the
//! filtration, initial data and the monitor set.

use std::sync::Arc;

use liegeo::algebra::{inner, AlgebraElement, GroupElement, SoBasis};
use liegeo::filtration::{catalog, Filtration};
use liegeo::flows::{ChainField, Flow, ManakovField, Monitor, Rank2So4Field};
use liegeo::integrals::casimirs_so4;
use liegeo::manakov::ManakovData;

use crate::config::{parse_coord, CoeffMap, FieldSpec, FiltrationSpec, ManakovMode, RunConfig};
use crate::CliError;

pub struct Setup {
    pub flow: Arc<dyn Flow + Send + Sync>,
    pub n: usize,
    /// Present for chain-type fields; needed by the closed-form solutions.
    pub filtration: Option<Filtration>,
    pub s: Option<Vec<f64>>,
    pub manakov: Option<ManakovData>,
}

pub fn element_from_map(n: usize, map: &CoeffMap) -> Result<AlgebraElement, CliError> {
    let mut x = AlgebraElement::zero(n);
    for (key, &c) in map {
        let (i, j) = parse_coord(key).map_err(CliError::Config)?;
        if j > n {
            return Err(CliError::Config(format!("coordinate `{key}` exceeds n = {n}")));
        }
        x.set_coeff(i, j, c);
    }
    Ok(x)
}

pub fn build_filtration(spec: &FiltrationSpec) -> Result<Filtration, CliError> {
    match (&spec.catalog, &spec.levels) {
        (Some(name), None) => Ok(catalog(name).map_err(CliError::Lib)?.filtration),
        (None, Some(levels)) => {
            let n = spec
                .n
                .ok_or_else(|| CliError::Config("explicit filtration needs `n`".into()))?;
            let basis = SoBasis::new(n);
            let chain: Vec<Vec<AlgebraElement>> = levels
                .iter()
                .map(|lvl| lvl.iter().map(|m| element_from_map(n, m)).collect())
                .collect::<Result<_, _>>()?;
            Filtration::new(basis, &chain).map_err(CliError::Lib)
        }
        _ => Err(CliError::Config(
            "filtration needs exactly one of `catalog` or `levels`".into(),
        )),
    }
}

pub fn build_setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let field = cfg
        .field
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [field] section".into()))?;
    match field {
        FieldSpec::Chain { s } => {
            let spec = cfg
                .filtration
                .as_ref()
                .ok_or_else(|| CliError::Config("chain field needs [filtration]".into()))?;
            let filtration = build_filtration(spec)?;
            let s = match (s, &spec.catalog) {
                (Some(s), _) => s.clone(),
                (None, Some(name)) => catalog(name).map_err(CliError::Lib)?.s,
                (None, None) => {
                    return Err(CliError::Config("chain field needs `s`".into()));
                }
            };
            let n = filtration.ambient().n();
            let flow = ChainField::new(filtration.clone(), s.clone()).map_err(CliError::Lib)?;
            Ok(Setup {
                flow: Arc::new(flow),
                n,
                filtration: Some(filtration),
                s: Some(s),
                manakov: None,
            })
        }
        FieldSpec::Rank2 { nu1, nu2 } => Ok(Setup {
            flow: Arc::new(Rank2So4Field::new(*nu1, *nu2)),
            n: 4,
            filtration: Some(catalog("rank2-so4").map_err(CliError::Lib)?.filtration),
            s: None,
            manakov: None,
        }),
        FieldSpec::Manakov { a, b, mode } => {
            let data = ManakovData::new(a.clone(), b.clone()).map_err(CliError::Lib)?;
            match mode {
                Some(ManakovMode::Singular) if !data.is_singular() => {
                    return Err(CliError::Config(
                        "mode = singular but all a_i are distinct".into(),
                    ));
                }
                Some(ManakovMode::Singular) => {
                    data.validate_singular().map_err(CliError::Lib)?;
                }
                Some(ManakovMode::Regular) if !data.is_regular() => {
                    return Err(CliError::Config(
                        "mode = regular but a has repeated entries".into(),
                    ));
                }
                _ => {}
            }
            let n = data.n();
            Ok(Setup {
                flow: Arc::new(ManakovField::new(data.clone())),
                n,
                filtration: None,
                s: None,
                manakov: Some(data),
            })
        }
    }
}

pub fn initial_state(
    cfg: &RunConfig,
    setup: &Setup,
    seed: u64,
) -> Result<(GroupElement, AlgebraElement), CliError> {
    let n = setup.n;
    let x = match cfg.initial.as_ref().and_then(|i| i.x.as_ref()) {
        Some(map) => element_from_map(n, map)?,
        None => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = n * (n - 1) / 2;
            let coeffs =
                nalgebra::DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
            AlgebraElement::from_coeffs(n, coeffs).map_err(CliError::Lib)?
        }
    };
    let g = match cfg.initial.as_ref().and_then(|i| i.g.as_ref()) {
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("initial g must be {n}x{n}")));
            }
            let m = nalgebra::DMatrix::from_fn(n, n, |r, c| rows[r][c]);
            GroupElement::from_matrix(m).map_err(CliError::Lib)?
        }
        None => GroupElement::identity(n),
    };
    Ok((g, x))
}

/// Builds the monitor set: named invariants from the config, or the default
/// set for the field kind (Hamiltonian, momentum map, norm, the so(4)
/// Casimirs, and every Manakov λ-coefficient).
pub fn build_monitors(
    setup: &Setup,
    g0: &GroupElement,
    x0: &AlgebraElement,
    names: Option<&[String]>,
) -> Result<Vec<Monitor>, CliError> {
    let default_names: Vec<String> = {
        let mut v = vec!["hamiltonian".into(), "norm".into(), "momentum".into()];
        if setup.n == 4 {
            v.push("i1".into());
            v.push("i2".into());
        }
        if let Some(md) = &setup.manakov {
            for (k, m, _) in md.integrals(x0) {
                v.push(format!("lambda[{k},{m}]"));
            }
        }
        v
    };
    let names: Vec<String> = names.map(|s| s.to_vec()).unwrap_or(default_names);

    let mut monitors = Vec::new();
    for name in names {
        let monitor = match name.as_str() {
            "norm" => Monitor::new("norm", |_, x| x.norm()),
            "hamiltonian" => {
                let flow = Arc::clone(&setup.flow);
                Monitor::new("hamiltonian", move |_, x| {
                    let (_, omega) = flow.rhs(x);
                    0.5 * inner(&omega, x).unwrap_or(f64::NAN)
                })
            }
            "momentum" => {
                let reference = g0.matrix() * x0.matrix() * g0.matrix().transpose();
                Monitor::new("momentum", move |g, x| {
                    (g.matrix() * x.matrix() * g.matrix().transpose() - &reference).norm()
                })
            }
            "i1" => Monitor::new("i1", |_, x| casimirs_so4(x).map(|c| c.0).unwrap_or(f64::NAN)),
            "i2" => Monitor::new("i2", |_, x| casimirs_so4(x).map(|c| c.1).unwrap_or(f64::NAN)),
            other if other.starts_with("lambda[") => {
                let md = setup
                    .manakov
                    .clone()
                    .ok_or_else(|| CliError::Config(format!("{other}: not a Manakov field")))?;
                let body = other
                    .strip_prefix("lambda[")
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| CliError::Config(format!("bad monitor `{other}`")))?;
                let (k, m) = body
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| CliError::Config(format!("bad monitor `{other}`")))?;
                Monitor::new(other, move |_, x: &AlgebraElement| {
                    md.integrals(x)
                        .into_iter()
                        .find(|(kk, mm, _)| (*kk, *mm) == (k, m))
                        .map(|(_, _, v)| v)
                        .unwrap_or(f64::NAN)
                })
            }
            other => {
                return Err(CliError::Config(format!("unknown monitor `{other}`")));
            }
        };
        monitors.push(monitor);
    }
    Ok(monitors)
}
