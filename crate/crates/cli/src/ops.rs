//! One function per subcommand. Each validates its parameters, calls into
//! `lyap-core` and returns the payload result plus tables and plots.

use lyap_core::acceptance::{self, CriterionOutcome};
use lyap_core::base::{BaseSystem, Potential};
use lyap_core::cocycle::{self, LyapunovOptions, Sl2Field};
use lyap_core::quadrature::QuadOptions;
use lyap_core::regularizer::{self, GeneralQuery, PhiQuery};
use lyap_core::search::{self, SearchOptions, SearchOutcome};
use lyap_core::spectral::{self, PeriodicPotential, DEFAULT_RESOLUTION};
use lyap_core::uh::{self, ConeField, BOUNDARY_DIRECTIONS};
use lyap_core::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{Plot, Status, Table};
use crate::scenario::{CocycleSpec, Operation, Scenario};

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Lines printed instead of the record (the acceptance table).
    pub report: Option<Vec<String>>,
}

impl Outcome {
    fn ok<T: Serialize>(result: &T) -> Self {
        Self { status: Status::Ok, result: to_value(result), tables: Vec::new(), plots: Vec::new(), report: None }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

/// `count` equally spaced points from `from` to `to`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    from: f64,
    to: f64,
    count: usize,
}

impl Grid {
    fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.count < 2 || !(self.to > self.from) {
            return Err(CliError::Schema("grids need count ≥ 2 and to > from".into()));
        }
        let h = (self.to - self.from) / (self.count - 1) as f64;
        Ok((0..self.count).map(|k| self.from + h * k as f64).collect())
    }
}

pub fn execute(s: &Scenario) -> Result<Outcome, CliError> {
    match s.operation() {
        Operation::Lyapunov => lyapunov(s),
        Operation::Certify => certify(s),
        Operation::Bands => bands(s),
        Operation::Ids => ids(s),
        Operation::Phi => phi(s),
        Operation::AbCheck => ab_check(s),
        Operation::Search => search(s),
        Operation::QuantitaScan => quantita_scan(s),
        Operation::Reproduce => reproduce(s),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    /// Exact formula where available, Birkhoff otherwise.
    #[default]
    Auto,
    /// Exact formula, then a certified UH integral, then Birkhoff.
    Best,
    Birkhoff,
    PeriodicExact,
    UhExact,
    Fubini,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LyapunovParams {
    #[serde(default)]
    method: Method,
    /// Sweep the energy of a Schrödinger cocycle.
    energies: Option<Grid>,
    #[serde(default = "default_doublings")]
    max_doubling: u32,
}

fn default_doublings() -> u32 {
    10
}

fn estimate(c: &cocycle::Cocycle, p: &LyapunovParams, opts: &LyapunovOptions) -> Result<Value, CliError> {
    Ok(match p.method {
        Method::Auto => to_value(&cocycle::lyapunov_auto(c, opts)?),
        Method::Best => to_value(&uh::lyapunov_best(c, opts)?),
        Method::Birkhoff => to_value(&cocycle::lyapunov_birkhoff(c, opts.n, opts.samples, opts.seed)?),
        Method::PeriodicExact => to_value(&cocycle::lyapunov_periodic_exact(c)?),
        Method::UhExact => {
            let cert = uh::certify_uh(c, &ConeField::hemisphere(), 16, BOUNDARY_DIRECTIONS, opts.seed)?;
            let r = uh::lyapunov_uh_exact(c, &cert, &uh::default_scheme(c.base(), opts))?;
            json!({ "value": r.estimate.value, "stderr": r.integration_error, "estimate": r.estimate, "dual": r.dual, "discrepancy": r.discrepancy })
        }
        Method::Fubini => {
            let bounds = cocycle::lyapunov_fubini(c, p.max_doubling, opts.samples, opts.seed)?;
            json!({ "value": bounds.last(), "upper_bounds": bounds })
        }
    })
}

fn lyapunov(s: &Scenario) -> Result<Outcome, CliError> {
    let p: LyapunovParams = s.params()?;
    let base = s.base()?;
    let spec = s.cocycle_spec()?;
    let opts = s.lyapunov_options(LyapunovOptions::default());
    let Some(grid) = p.energies else {
        let c = spec.build(base, None)?;
        return Ok(Outcome::ok(&estimate(&c, &p, &opts)?));
    };
    if !matches!(spec, CocycleSpec::Schrodinger { .. }) {
        return Err(CliError::Schema("an energy sweep needs a schrodinger cocycle".into()));
    }
    let energies = grid.points()?;
    let values: Vec<Value> = energies
        .par_iter()
        .map(|&e| estimate(&spec.build(base, Some(e.into()))?, &p, &opts))
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new("lyapunov", &["energy", "lyapunov", "stderr"]);
    let mut curve = Vec::new();
    for (&e, v) in energies.iter().zip(&values) {
        let l = v["value"].as_f64().unwrap_or(f64::NAN);
        table.push_numbers(&[e, l, v["stderr"].as_f64().unwrap_or(0.0)]);
        curve.push((e, l));
    }
    let result = json!({ "energies": energies, "estimates": values });
    Ok(Outcome {
        tables: vec![table],
        plots: vec![Plot::Lines {
            name: "lyapunov".into(),
            title: "Lyapunov exponent".into(),
            x_label: "E".into(),
            y_label: "L(E)".into(),
            series: vec![("L".into(), curve)],
        }],
        ..Outcome::ok(&result)
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifyParams {
    cone: Option<ConeField>,
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default = "default_directions")]
    directions: usize,
}

fn default_n_max() -> usize {
    16
}

fn default_directions() -> usize {
    BOUNDARY_DIRECTIONS
}

fn certify(s: &Scenario) -> Result<Outcome, CliError> {
    let p: CertifyParams = s.params()?;
    let base = s.base()?;
    let c = s.cocycle_spec()?.build(base, None)?;
    let opts = s.lyapunov_options(LyapunovOptions::default());
    let cone = p.cone.unwrap_or_else(ConeField::hemisphere);
    let cert = uh::certify_uh(&c, &cone, p.n_max, p.directions, opts.seed)?;
    let exact = uh::lyapunov_uh_exact(&c, &cert, &uh::default_scheme(base, &opts))?;
    Ok(Outcome::ok(&json!({ "certificate": cert, "lyapunov": exact })))
}

/// The periodic potential of a `bands`/`ids` scenario: a one-orbit periodic
/// table, or a constant repeated over a one-orbit periodic base.
fn periodic_potential(s: &Scenario) -> Result<PeriodicPotential, CliError> {
    let period = match &s.base {
        None => None,
        Some(BaseSystem::PeriodicOrbits { orbits }) if orbits.len() == 1 => Some(orbits[0].period),
        Some(_) => return Err(CliError::Schema("band computations need a single periodic orbit".into())),
    };
    let values: Vec<C64> = match s.potential()? {
        Potential::PeriodicTable { values } if values.len() == 1 => values[0].clone(),
        Potential::Constant(c) => vec![*c; period.unwrap_or(1)],
        _ => return Err(CliError::Schema("band computations need a one-orbit periodic table or a constant".into())),
    };
    if period.is_some_and(|p| p != values.len()) {
        return Err(CliError::Schema("the potential's period differs from the base's".into()));
    }
    if values.iter().any(|z| z.im != 0.0) {
        return Err(CliError::Schema("band computations need a real potential".into()));
    }
    Ok(PeriodicPotential::new(values.iter().map(|z| z.re).collect())?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandsParams {}

fn bands(s: &Scenario) -> Result<Outcome, CliError> {
    let _: BandsParams = s.params()?;
    let v = periodic_potential(s)?;
    let structure = spectral::bands(&v, s.tol.unwrap_or(DEFAULT_RESOLUTION));
    let mut table = Table::new("bands", &["band", "left", "right", "length"]);
    for (k, &(a, b)) in structure.bands.iter().enumerate() {
        table.push_numbers(&[k as f64, a, b, b - a]);
    }
    let (lo, hi) = v.spectral_window();
    let discriminant = (0..=1000)
        .map(|k| {
            let e = lo - 0.25 + (hi - lo + 0.5) * k as f64 / 1000.0;
            (e, spectral::discriminant(&v, e.into()).re)
        })
        .collect();
    let result = json!({ "period": v.period(), "bands": structure.bands, "gaps": structure.gaps(), "floquet": structure.floquet, "resolution": structure.resolution });
    Ok(Outcome {
        tables: vec![table],
        plots: vec![Plot::Bands { name: "bands".into(), discriminant, bands: structure.bands.clone() }],
        ..Outcome::ok(&result)
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdsParams {
    energies: Option<Grid>,
}

fn ids(s: &Scenario) -> Result<Outcome, CliError> {
    let p: IdsParams = s.params()?;
    let v = periodic_potential(s)?;
    let (lo, hi) = v.spectral_window();
    let energies = p.energies.unwrap_or(Grid { from: lo - 0.5, to: hi + 0.5, count: 513 }).points()?;
    let n = spectral::ids(&v);
    let mut table = Table::new("ids", &["energy", "ids", "lyapunov"]);
    let (mut ids_curve, mut l_curve) = (Vec::new(), Vec::new());
    let samples: Vec<Value> = energies
        .iter()
        .map(|&e| {
            let (d, l) = (n.n_at(e), spectral::thouless_lyapunov(&n, e));
            table.push_numbers(&[e, d, l]);
            ids_curve.push((e, d));
            l_curve.push((e, l));
            json!({ "energy": e, "ids": d, "lyapunov": l })
        })
        .collect();
    let result = json!({ "period": v.period(), "floquet": n.floquet_bands(), "samples": samples });
    Ok(Outcome {
        tables: vec![table],
        plots: vec![Plot::Lines {
            name: "ids".into(),
            title: "density of states and Lyapunov exponent".into(),
            x_label: "E".into(),
            y_label: "N(E), L(E)".into(),
            series: vec![("N".into(), ids_curve), ("L".into(), l_curve)],
        }],
        ..Outcome::ok(&result)
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PhiForm {
    #[default]
    Schrodinger,
    General,
    Convolved,
    Boundary,
    Poisson,
    Probe,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiParams {
    #[serde(default)]
    form: PhiForm,
    epsilon: f64,
    w: Option<Potential>,
    v0: Option<Potential>,
    /// Box half-width of the convolved form.
    delta: Option<f64>,
    /// Perturbing field of the general form.
    a: Option<Sl2Field>,
    #[serde(default = "default_s_nodes")]
    s_nodes: usize,
    #[serde(default = "default_degrees")]
    degrees: Vec<usize>,
}

fn default_s_nodes() -> usize {
    32
}

fn default_degrees() -> Vec<usize> {
    vec![4, 12]
}

fn quad_for(s: &Scenario, default: QuadOptions) -> QuadOptions {
    QuadOptions { abs_tol: s.tol.unwrap_or(default.abs_tol), ..default }
}

fn phi(s: &Scenario) -> Result<Outcome, CliError> {
    let p: PhiParams = s.params()?;
    let base = s.base()?;
    if p.form == PhiForm::General {
        let c = s.cocycle_spec()?.build(base, None)?;
        let a = p.a.ok_or_else(|| CliError::Schema("the general form needs params.a".into()))?;
        let mut q = GeneralQuery::new(c, a, p.epsilon);
        q.quad = quad_for(s, q.quad);
        q.lyapunov = s.lyapunov_options(q.lyapunov);
        return Ok(Outcome::ok(&regularizer::phi_general(&q)?));
    }
    let w = p.w.ok_or_else(|| CliError::Schema("this form needs params.w".into()))?;
    let mut q = PhiQuery::new(base.clone(), s.potential()?.clone(), w, p.epsilon);
    if let Some(v0) = p.v0 {
        q = q.with_v0(v0);
    }
    q.quad = quad_for(s, q.quad);
    q.lyapunov = s.lyapunov_options(q.lyapunov);
    Ok(match p.form {
        PhiForm::Schrodinger => Outcome::ok(&regularizer::phi(&q)?),
        PhiForm::Convolved => {
            let delta = p.delta.ok_or_else(|| CliError::Schema("the convolved form needs params.delta".into()))?;
            Outcome::ok(&regularizer::phi_convolved(&q, delta)?)
        }
        PhiForm::Boundary => {
            let segment = regularizer::phi(&q)?;
            let boundary = regularizer::phi_boundary(&q)?;
            Outcome::ok(&json!({
                "phi": segment,
                "boundary": boundary,
                "difference": segment.value - boundary.value,
                "combined_error": segment.quad_error + boundary.quad_error,
            }))
        }
        PhiForm::Poisson => Outcome::ok(&regularizer::poisson_check(&q)?),
        PhiForm::Probe => {
            if p.s_nodes < 2 {
                return Err(CliError::Schema("the probe needs at least two s nodes".into()));
            }
            let fits = regularizer::analyticity_probe(&q, &regularizer::chebyshev_grid(p.s_nodes), &p.degrees)?;
            let samples = fits.first().map(|f| f.samples.clone()).unwrap_or_default();
            let mut table = Table::new("phi_probe", &["s", "phi"]);
            for &(x, y) in &samples {
                table.push_numbers(&[x, y]);
            }
            let summary: Vec<Value> = fits
                .iter()
                .map(|f| json!({ "degree": f.degree, "residual": f.residual, "coefficients": f.coefficients }))
                .collect();
            let quad_error = fits.first().map_or(0.0, |f| f.quad_error);
            Outcome {
                tables: vec![table],
                plots: vec![Plot::Lines {
                    name: "phi_probe".into(),
                    title: "Φ along s·w".into(),
                    x_label: "s".into(),
                    y_label: "Φ".into(),
                    series: vec![("Φ".into(), samples.clone())],
                }],
                ..Outcome::ok(&json!({ "samples": samples, "quad_error": quad_error, "fits": summary }))
            }
        }
        PhiForm::General => unreachable!("handled above"),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbCheckParams {
    #[serde(default = "default_theta_nodes")]
    theta_nodes: usize,
}

fn default_theta_nodes() -> usize {
    256
}

fn ab_check(s: &Scenario) -> Result<Outcome, CliError> {
    let p: AbCheckParams = s.params()?;
    let c = s.cocycle_spec()?.build(s.base()?, None)?;
    let r = cocycle::ab_average_check(&c, p.theta_nodes, &s.lyapunov_options(LyapunovOptions::default()))?;
    Ok(Outcome::ok(&json!({ "average": r, "difference": r.lhs - r.rhs })))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SearchForm {
    #[default]
    Schrodinger,
    General,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Basis {
    /// `cos(2πkx)` and `sin(2πkx)` for `k ≤ degree`.
    Cosine { degree: usize },
    /// Indicators of the points of a periodic base.
    Sites,
    Potentials { potentials: Vec<Potential> },
    /// Trigonometric `sl(2)` fields up to `degree`.
    Fields { degree: usize },
    CustomFields { fields: Vec<Sl2Field> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchParams {
    #[serde(default)]
    form: SearchForm,
    #[serde(default)]
    energy: f64,
    delta: f64,
    basis: Option<Basis>,
    budget: Option<usize>,
    restarts: Option<usize>,
    t_nodes: Option<usize>,
    s_levels: Option<u32>,
}

fn site_basis(base: &BaseSystem) -> Result<Vec<Potential>, CliError> {
    let BaseSystem::PeriodicOrbits { orbits } = base else {
        return Err(CliError::Schema("the sites basis needs a periodic base".into()));
    };
    let mut out = Vec::new();
    for (j, o) in orbits.iter().enumerate() {
        for k in 0..o.period {
            let values = orbits
                .iter()
                .enumerate()
                .map(|(i, q)| (0..q.period).map(|m| C64::new(if (i, m) == (j, k) { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect();
            out.push(Potential::PeriodicTable { values });
        }
    }
    Ok(out)
}

fn search(s: &Scenario) -> Result<Outcome, CliError> {
    let p: SearchParams = s.params()?;
    let base = s.base()?;
    let defaults = SearchOptions::default();
    let opts = SearchOptions {
        budget: p.budget.unwrap_or(defaults.budget),
        restarts: p.restarts.unwrap_or(defaults.restarts),
        t_nodes: p.t_nodes.unwrap_or(defaults.t_nodes),
        s_levels: p.s_levels.unwrap_or(defaults.s_levels),
        lyapunov: s.lyapunov_options(defaults.lyapunov),
        quad: s.tol.map(|t| QuadOptions { abs_tol: t, ..search::search_quad(base) }),
        seed: s.seed.unwrap_or(defaults.seed),
    };
    let report = match p.form {
        SearchForm::Schrodinger => {
            let basis = match p.basis {
                None if base.is_periodic() => site_basis(base)?,
                None => search::cosine_basis(4),
                Some(Basis::Cosine { degree }) => search::cosine_basis(degree),
                Some(Basis::Sites) => site_basis(base)?,
                Some(Basis::Potentials { potentials }) => potentials,
                Some(_) => return Err(CliError::Schema("field bases belong to the general form".into())),
            };
            search::search_positive_schrodinger(base, s.potential()?, p.energy, p.delta, &basis, &opts)?
        }
        SearchForm::General => {
            let c = match &s.cocycle {
                Some(spec) => spec.build(base, None)?,
                None => search::resonant_rotation_cocycle(base)?,
            };
            let basis = match p.basis {
                None => search::general_basis(1),
                Some(Basis::Fields { degree }) => search::general_basis(degree),
                Some(Basis::CustomFields { fields }) => fields,
                Some(_) => return Err(CliError::Schema("potential bases belong to the schrodinger form".into())),
            };
            search::search_positive_general(&c, p.delta, &basis, &opts)?
        }
    };
    let mut table = Table::new("search_trace", &["step", "stage", "value", "error", "params"]);
    for (k, t) in report.trace.iter().enumerate() {
        let stage = serde_json::to_value(t.stage).expect("stages serialize");
        let params: Vec<String> = t.params.iter().map(f64::to_string).collect();
        table.rows.push(vec![
            k.to_string(),
            stage.as_str().unwrap_or_default().to_string(),
            t.value.to_string(),
            t.error.to_string(),
            params.join(" "),
        ]);
    }
    let status = match report.outcome {
        SearchOutcome::Found | SearchOutcome::AlreadyPositive => Status::Ok,
        SearchOutcome::BudgetExhausted => Status::BudgetExhausted,
        SearchOutcome::EmptyRegion => Status::Failed,
    };
    Ok(Outcome { status, tables: vec![table], ..Outcome::ok(&report) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantitaParams {
    w: Potential,
    epsilon: f64,
    #[serde(default = "default_t_nodes")]
    t_nodes: usize,
    #[serde(default = "default_e_nodes")]
    e_nodes: usize,
}

fn default_t_nodes() -> usize {
    64
}

fn default_e_nodes() -> usize {
    256
}

fn quantita_scan(s: &Scenario) -> Result<Outcome, CliError> {
    let p: QuantitaParams = s.params()?;
    let opts = s.lyapunov_options(LyapunovOptions::default());
    let scan = search::quantita_scan(s.base()?, s.potential()?, &p.w, p.epsilon, p.t_nodes, p.e_nodes, &opts)?;
    let mut table = Table::new("quantita", &["t", "energy", "lyapunov"]);
    for (t, row) in scan.t_grid.iter().zip(&scan.values) {
        for (e, l) in scan.e_grid.iter().zip(row) {
            table.push_numbers(&[*t, *e, *l]);
        }
    }
    let plot = Plot::Heat {
        name: "quantita".into(),
        title: "L(E − v − t·w)".into(),
        x_label: "t".into(),
        y_label: "E".into(),
        x: scan.t_grid.clone(),
        y: scan.e_grid.clone(),
        values: scan.values.clone(),
    };
    Ok(Outcome { tables: vec![table], plots: vec![plot], ..Outcome::ok(&scan) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReproduceParams {
    /// Criterion numbers to run; all thirteen when absent.
    criteria: Option<Vec<u32>>,
    /// Multiplies the weight seen by the normalization criterion; anything
    /// but 1 must make it fail.
    #[serde(default = "one")]
    weight_scale: f64,
}

fn one() -> f64 {
    1.0
}

fn criterion(id: u32, weight_scale: f64) -> Result<Vec<CriterionOutcome>, CliError> {
    Ok(match id {
        1 => vec![acceptance::weight_normalization(move |t| weight_scale * regularizer::weight(t))],
        2 => vec![acceptance::rotation_average()],
        3 => vec![acceptance::constant_exponents()],
        4 => vec![acceptance::thouless_consistency()],
        5 => vec![acceptance::band_facts()],
        6 => vec![acceptance::conefield()],
        7 => vec![acceptance::harmonicity()],
        8 => vec![acceptance::boundary_identity()],
        9 => vec![acceptance::positivity_propagation()],
        10 => vec![acceptance::analyticity()],
        11 => vec![acceptance::density_search_schrodinger(), acceptance::density_search_general()],
        12 => vec![acceptance::quantita_demo()],
        _ => return Err(CliError::Schema(format!("criterion {id} cannot run on its own (valid: 1-12)"))),
    })
}

fn reproduce(s: &Scenario) -> Result<Outcome, CliError> {
    let p: ReproduceParams = s.params()?;
    let outcomes = match &p.criteria {
        None if p.weight_scale == 1.0 => acceptance::run_all(),
        None => {
            let mut all = Vec::new();
            for id in 1..=12 {
                all.extend(criterion(id, p.weight_scale)?);
            }
            let det = acceptance::determinism(&all);
            all.push(det);
            all
        }
        Some(ids) => {
            let mut all = Vec::new();
            for &id in ids {
                all.extend(criterion(id, p.weight_scale)?);
            }
            all
        }
    };
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let mut lines: Vec<String> = outcomes.iter().map(CriterionOutcome::line).collect();
    lines.push(format!("{passed} of {} lines pass", outcomes.len()));
    let mut table = Table::new("acceptance", &["criterion", "name", "passed", "seconds", "budget_seconds", "detail"]);
    for o in &outcomes {
        table.rows.push(vec![
            o.id.to_string(),
            o.name.clone(),
            o.passed.to_string(),
            format!("{:.3}", o.seconds),
            o.budget_seconds.to_string(),
            o.detail.clone(),
        ]);
    }
    let status = if passed == outcomes.len() { Status::Ok } else { Status::Failed };
    // timings stay out of the payload so that it remains reproducible
    let result: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail, "fingerprint": o.fingerprint }))
        .collect();
    Ok(Outcome { status, tables: vec![table], report: Some(lines), ..Outcome::ok(&result) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lyap_core::base::Scalar;
    use lyap_core::cocycle::LyapunovEstimate;

    #[test]
    fn grids_include_both_ends() {
        let g = Grid { from: -1.0, to: 1.0, count: 5 }.points().unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(Grid { from: 0.0, to: 1.0, count: 1 }.points().is_err());
    }

    #[test]
    fn site_basis_covers_every_orbit_point() {
        let base: BaseSystem = serde_json::from_value(json!({
            "family": "periodic_orbits",
            "orbits": [{"period": 2, "weight": 0.5}, {"period": 1, "weight": 0.5}]
        }))
        .unwrap();
        let b = site_basis(&base).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.iter().all(|p| (p.sup_norm() - 1.0).abs() < 1e-15));
        assert!(site_basis(&BaseSystem::golden_rotation()).is_err());
    }

    #[test]
    fn unknown_parameters_are_schema_errors() {
        let s = Scenario { params: Some(json!({"methd": "auto"})), operation: Some(Operation::Lyapunov), ..Scenario::empty() };
        assert!(matches!(s.params::<LyapunovParams>(), Err(CliError::Schema(_))));
    }

    #[test]
    fn constant_diagonal_exponent_is_ln_two() {
        let s = Scenario {
            operation: Some(Operation::Lyapunov),
            base: Some(BaseSystem::periodic(1)),
            cocycle: Some(CocycleSpec::Constant { matrix: [[Scalar::Real(2.0), Scalar::Real(0.0)], [Scalar::Real(0.0), Scalar::Real(0.5)]] }),
            ..Scenario::empty()
        };
        let out = execute(&s).unwrap();
        let l: LyapunovEstimate = serde_json::from_value(out.result).unwrap();
        assert!((l.value - 2f64.ln()).abs() < 1e-14);
    }
}
