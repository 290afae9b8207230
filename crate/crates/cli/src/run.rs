//! Task compilation and execution.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use jetcalc_engine::analysis::{
    conservation_law_from_cosymmetry, solve_cosymmetries, solve_symmetries, span_contains, verify_cosymmetry,
    verify_current, verify_symmetry, verify_symplectic, Ansatz, ClosednessRoute,
};
use jetcalc_engine::cdiff::{CDiffOp, PseudoOp};
use jetcalc_engine::covering::{lifted_linearization, solve_fiberlinear, verify_finite_symmetry, verify_shadow, Covering};
use jetcalc_engine::equation::{verify_equivalence, EquivalenceWitness, Presentation};
use jetcalc_engine::hamiltonian::{
    are_compatible, is_hamiltonian, magri, poisson_bracket, schouten_on_equation, verify_bivector_on_equation,
    HamiltonianCheck,
};
use jetcalc_engine::jetalg::{render, DiffExpr, FreeJets, HorizontalForm, JetSpace, Var, Calculus};
use jetcalc_engine::Error;

use crate::build::{self, render_section};
use crate::error::CliError;
use crate::report::{digest, Item, Report, TaskReport, ENGINE, VERSION};
use crate::schema::{CoveringRef, ProblemFile, Section, Status, TaskKind};

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Overrides the prolongation limit of every presentation.
    pub max_prolong: Option<usize>,
    /// Adds wall-clock timings; reports are then no longer reproducible.
    pub timing: bool,
}

type Sec = Vec<DiffExpr>;

enum Job {
    Solve {
        co: bool,
        ansatz: Ansatz,
        contains: Vec<Sec>,
        dimension: Option<usize>,
    },
    Verify {
        co: bool,
        section: Sec,
    },
    Currents {
        sections: Vec<Sec>,
        from: Option<String>,
    },
    VerifyCurrent(HorizontalForm),
    Hamiltonian(CDiffOp),
    Compatible(CDiffOp, CDiffOp),
    Magri {
        a: CDiffOp,
        b: CDiffOp,
        start: DiffExpr,
        steps: usize,
        ansatz: Ansatz,
    },
    Recursion {
        op: PseudoOp,
        cases: Vec<(Sec, Option<Sec>)>,
    },
    Fiberlinear {
        covering: Covering,
        ansatz: Ansatz,
        contains: Vec<Sec>,
        dimension: Option<usize>,
    },
    Shadow(Covering, Sec),
    VerifyFlat(Covering),
    FiniteSymmetry(Covering, BTreeMap<Var, DiffExpr>),
    Bivector(CDiffOp),
    SchoutenOnEquation(CDiffOp, CDiffOp),
    Symplectic(CDiffOp, Ansatz),
    Equivalence(Box<Presentation>, Box<EquivalenceWitness>),
}

struct Task {
    kind: &'static str,
    id: Option<String>,
    expect: Status,
    job: Job,
}

/// A validated problem: presentation, coverings and tasks with every
/// expression already parsed.
pub struct Plan {
    name: Option<String>,
    pres: Presentation,
    spatial: JetSpace,
    tasks: Vec<Task>,
}

fn ansatz(order: usize, degree: usize, whitelist: &Option<Vec<String>>) -> Ansatz {
    let a = Ansatz::new(order, degree);
    match whitelist {
        Some(w) => a.with_whitelist(w),
        None => a,
    }
}

fn sections(list: &[Section], space: &JetSpace, len: usize, ctx: &str) -> Result<Vec<Sec>, CliError> {
    list.iter().map(|s| build::section(s, space, len, ctx)).collect()
}

struct Coverings<'a> {
    file: &'a ProblemFile,
    pres: &'a Presentation,
    built: HashMap<String, Covering>,
}

impl Coverings<'_> {
    fn get(&mut self, r: &Option<CoveringRef>) -> Result<Covering, CliError> {
        match r {
            Some(CoveringRef::Inline(spec)) => build::covering(spec, self.pres),
            Some(CoveringRef::Named(name)) => {
                if let Some(c) = self.built.get(name) {
                    return Ok(c.clone());
                }
                let spec = self
                    .file
                    .coverings
                    .get(name)
                    .ok_or_else(|| CliError::Invalid(format!("unknown covering `{name}`")))?;
                let c = build::covering(spec, self.pres)?;
                self.built.insert(name.clone(), c.clone());
                Ok(c)
            }
            None => {
                let key = String::new();
                if let Some(c) = self.built.get(&key) {
                    return Ok(c.clone());
                }
                let spec = self
                    .file
                    .covering
                    .as_ref()
                    .ok_or_else(|| CliError::Invalid("task needs a covering but the file declares none".into()))?;
                let c = build::covering(spec, self.pres)?;
                self.built.insert(key, c.clone());
                Ok(c)
            }
        }
    }
}

impl Plan {
    pub fn compile(file: &ProblemFile, opts: &Options) -> Result<Plan, CliError> {
        let pres = build::presentation(&file.presentation(), opts.max_prolong)?;
        let spatial = build::spatial_space(&pres)?;
        let space = pres.space().clone();
        let m = space.m();
        let k = pres.components().len();
        let mut coverings = Coverings {
            file,
            pres: &pres,
            built: HashMap::new(),
        };
        let mut ids: HashMap<String, &'static str> = HashMap::new();
        let mut tasks = Vec::with_capacity(file.tasks.len());
        for (i, spec) in file.tasks.iter().enumerate() {
            let ctx = format!("task {} ({})", i + 1, spec.kind.name());
            let job = match &spec.kind {
                TaskKind::Symmetries {
                    order,
                    degree,
                    whitelist,
                    contains,
                    dimension,
                } => Job::Solve {
                    co: false,
                    ansatz: ansatz(*order, *degree, whitelist),
                    contains: sections(contains, &space, m, &ctx)?,
                    dimension: *dimension,
                },
                TaskKind::Cosymmetries {
                    order,
                    degree,
                    whitelist,
                    contains,
                    dimension,
                } => Job::Solve {
                    co: true,
                    ansatz: ansatz(*order, *degree, whitelist),
                    contains: sections(contains, &space, k, &ctx)?,
                    dimension: *dimension,
                },
                TaskKind::VerifySymmetry { section } => Job::Verify {
                    co: false,
                    section: build::section(section, &space, m, &ctx)?,
                },
                TaskKind::VerifyCosymmetry { section } => Job::Verify {
                    co: true,
                    section: build::section(section, &space, k, &ctx)?,
                },
                TaskKind::Currents { sections: list, from } => {
                    if let Some(id) = from {
                        if ids.get(id) != Some(&"cosymmetries") {
                            return Err(CliError::Invalid(format!(
                                "{ctx}: `{id}` is not the id of an earlier cosymmetries task"
                            )));
                        }
                    } else if list.is_empty() {
                        return Err(CliError::Invalid(format!("{ctx}: needs `sections` or `from`")));
                    }
                    Job::Currents {
                        sections: sections(list, &space, k, &ctx)?,
                        from: from.clone(),
                    }
                }
                TaskKind::VerifyCurrent { form } => {
                    let mut w = HorizontalForm::zero(space.n(), 1);
                    for (name, text) in form {
                        let i = space
                            .indep_index(name)
                            .ok_or_else(|| CliError::Invalid(format!("{ctx}: unknown independent `{name}`")))?;
                        w.set(vec![i as u8], build::expr(text, &space, &ctx)?);
                    }
                    Job::VerifyCurrent(w)
                }
                TaskKind::Hamiltonian { operator } => Job::Hamiltonian(build::operator(operator, &spatial, m, m, &ctx)?),
                TaskKind::Compatible { operators } => {
                    let [a, b] = operators.as_slice() else {
                        return Err(CliError::Invalid(format!("{ctx}: needs exactly two operators")));
                    };
                    Job::Compatible(
                        build::operator(a, &spatial, m, m, &ctx)?,
                        build::operator(b, &spatial, m, m, &ctx)?,
                    )
                }
                TaskKind::Magri {
                    a,
                    b,
                    start,
                    steps,
                    order,
                    degree,
                } => Job::Magri {
                    a: build::operator(a, &spatial, m, m, &ctx)?,
                    b: build::operator(b, &spatial, m, m, &ctx)?,
                    start: build::expr(start, &spatial, &ctx)?,
                    steps: *steps,
                    ansatz: Ansatz::new(*order, *degree),
                },
                TaskKind::Recursion { operator, apply } => {
                    let op = build::pseudo(operator, &space, m, m, &ctx)?;
                    let cases = apply
                        .iter()
                        .map(|c| {
                            Ok((
                                build::section(&c.section, &space, m, &ctx)?,
                                c.equals.as_ref().map(|e| build::section(e, &space, m, &ctx)).transpose()?,
                            ))
                        })
                        .collect::<Result<_, CliError>>()?;
                    Job::Recursion { op, cases }
                }
                TaskKind::Fiberlinear {
                    covering,
                    order,
                    degree,
                    whitelist,
                    contains,
                    dimension,
                } => {
                    let c = coverings.get(covering)?;
                    if c.fibers().is_empty() {
                        return Err(CliError::Invalid(format!("{ctx}: covering has no fiber variables")));
                    }
                    let contains = sections(contains, c.space(), m, &ctx)?;
                    Job::Fiberlinear {
                        covering: c,
                        ansatz: ansatz(*order, *degree, whitelist),
                        contains,
                        dimension: *dimension,
                    }
                }
                TaskKind::Shadow { covering, section } => {
                    let c = coverings.get(covering)?;
                    let s = build::section(section, c.space(), m, &ctx)?;
                    Job::Shadow(c, s)
                }
                TaskKind::VerifyFlat { covering } => Job::VerifyFlat(coverings.get(covering)?),
                TaskKind::FiniteSymmetry { covering, map } => {
                    let c = coverings.get(covering)?;
                    let sigma = build::finite_map(map, c.space())?;
                    Job::FiniteSymmetry(c, sigma)
                }
                TaskKind::Bivector { operator } => Job::Bivector(build::operator(operator, &space, m, k, &ctx)?),
                TaskKind::SchoutenOnEquation { operators } => {
                    let [a, b] = operators.as_slice() else {
                        return Err(CliError::Invalid(format!("{ctx}: needs exactly two operators")));
                    };
                    Job::SchoutenOnEquation(
                        build::operator(a, &space, m, k, &ctx)?,
                        build::operator(b, &space, m, k, &ctx)?,
                    )
                }
                TaskKind::Symplectic { operator, order, degree } => Job::Symplectic(
                    build::operator(operator, &space, k, m, &ctx)?,
                    Ansatz::new(*order, *degree),
                ),
                TaskKind::Equivalence {
                    target,
                    sigma,
                    alpha,
                    beta,
                    alpha_prime,
                    beta_prime,
                    s1,
                    s2,
                } => {
                    let e2 = build::presentation(target, opts.max_prolong)?;
                    let s2space = e2.space().clone();
                    let (m2, k2) = (s2space.m(), e2.components().len());
                    let op = |spec, r, c| build::operator(spec, &s2space, r, c, &ctx);
                    let w = EquivalenceWitness {
                        alpha: op(alpha, m2, m)?,
                        beta: op(beta, m, m2)?,
                        alpha_prime: op(alpha_prime, k2, k)?,
                        beta_prime: op(beta_prime, k, k2)?,
                        s1: op(s1, m, k)?,
                        s2: op(s2, m2, k2)?,
                        sigma: build::section(sigma, &s2space, m, &ctx)?,
                    };
                    Job::Equivalence(Box::new(e2), Box::new(w))
                }
            };
            if let Some(id) = &spec.id {
                if ids.insert(id.clone(), spec.kind.name()).is_some() {
                    return Err(CliError::Invalid(format!("{ctx}: duplicate task id `{id}`")));
                }
            }
            tasks.push(Task {
                kind: spec.kind.name(),
                id: spec.id.clone(),
                expect: spec.expect.unwrap_or(Status::Ok),
                job,
            });
        }
        Ok(Plan {
            name: file.name.clone(),
            pres,
            spatial,
            tasks,
        })
    }

    pub fn execute(&self, input: &[u8], opts: &Options) -> Report {
        let mut bases: HashMap<String, Vec<Sec>> = HashMap::new();
        let mut out = Vec::with_capacity(self.tasks.len());
        for task in &self.tasks {
            let started = Instant::now();
            let mut rep = TaskReport::new(task.kind, task.id.clone());
            let outcome = match self.execute_job(&task.job, &mut rep, &bases) {
                Ok((outcome, basis)) => {
                    if let (Some(id), Some(b)) = (&task.id, basis) {
                        bases.insert(id.clone(), b);
                    }
                    outcome
                }
                Err(e) => {
                    rep.message = Some(e.to_string());
                    classify(&e)
                }
            };
            rep.outcome = outcome;
            rep.status = if outcome == task.expect { Status::Ok } else { worst(outcome, Status::Fail) };
            if opts.timing {
                rep.elapsed_ms = Some(started.elapsed().as_millis() as u64);
            }
            out.push(rep);
        }
        let status = out.iter().map(|t| t.status).max().unwrap_or(Status::Ok);
        Report {
            engine: ENGINE.into(),
            version: VERSION.into(),
            input_sha256: digest(input),
            problem: self.name.clone(),
            status,
            tasks: out,
        }
    }

    fn execute_job(
        &self,
        job: &Job,
        rep: &mut TaskReport,
        bases: &HashMap<String, Vec<Sec>>,
    ) -> Result<(Status, Option<Vec<Sec>>), Error> {
        let pres = &self.pres;
        let space = pres.space();
        match job {
            Job::Solve {
                co,
                ansatz,
                contains,
                dimension,
            } => {
                let basis = if *co { solve_cosymmetries(pres, ansatz)? } else { solve_symmetries(pres, ansatz)? };
                rep.basis = basis.iter().map(|b| render_section(b, space)).collect();
                let ok = check_span(rep, &basis, contains, *dimension, space);
                Ok((pass(ok), Some(basis)))
            }
            Job::Verify { co, section } => {
                let r = if *co { verify_cosymmetry(pres, section)? } else { verify_symmetry(pres, section)? };
                Ok((pass(residual_items(rep, "component", &r, space)), None))
            }
            Job::Currents { sections, from } => {
                let list = match from {
                    Some(id) => bases
                        .get(id)
                        .cloned()
                        .ok_or_else(|| Error::NoSolution(format!("task `{id}` produced no basis")))?,
                    None => sections.clone(),
                };
                let names = space.independent();
                for (i, psi) in list.iter().enumerate() {
                    let c = conservation_law_from_cosymmetry(pres, psi)?;
                    rep.payload.push(Item::section(format!("cosymmetry {}", i + 1), render_section(psi, space)));
                    for (idx, a) in c.form.components() {
                        let dir = &names[idx[0] as usize];
                        rep.payload.push(Item::text(format!("current {} d{dir}", i + 1), render(a, space)));
                    }
                }
                Ok((Status::Ok, None))
            }
            Job::VerifyCurrent(form) => {
                let r = verify_current(pres, form)?;
                Ok((pass(residual_items(rep, "d_h", &[r], space)), None))
            }
            Job::Hamiltonian(a) => {
                let check = is_hamiltonian(a, &self.spatial)?;
                Ok((pass(hamiltonian_items(rep, &check, &self.spatial)), None))
            }
            Job::Compatible(a, b) => {
                let check = are_compatible(a, b, &self.spatial)?;
                Ok((pass(hamiltonian_items(rep, &check, &self.spatial)), None))
            }
            Job::Magri {
                a,
                b,
                start,
                steps,
                ansatz,
            } => {
                let sp = &self.spatial;
                let h = magri(sp, a, b, start, *steps, ansatz)?;
                for (i, (w, f)) in h.densities.iter().zip(h.flows.iter()).enumerate() {
                    rep.payload.push(Item::text(format!("density {i}"), render(w, sp)));
                    rep.payload.push(Item::section(format!("flow {i}"), render_section(f, sp)));
                }
                let calc = FreeJets::new(sp.clone());
                let mut ok = true;
                for i in 0..h.densities.len() {
                    for j in i + 1..h.densities.len() {
                        for (label, op) in [("A", a), ("B", b)] {
                            let br = poisson_bracket(&calc, &h.densities[i], &h.densities[j], op)?;
                            let name = format!("{{w{i}, w{j}}}_{label}");
                            if br.trivial {
                                rep.payload.push(Item::text(name, "trivial"));
                            } else {
                                ok = false;
                                rep.residuals.push(Item::text(name, render(&br.density, sp)));
                            }
                        }
                    }
                }
                Ok((pass(ok), None))
            }
            Job::Recursion { op, cases } => {
                let mut outcome = Status::Ok;
                for (i, (phi, equals)) in cases.iter().enumerate() {
                    let label = format!("R(phi{})", i + 1);
                    rep.payload.push(Item::section(format!("phi{}", i + 1), render_section(phi, space)));
                    match jetcalc_engine::analysis::recursion_apply(pres, op, phi) {
                        Ok(img) => {
                            rep.payload.push(Item::section(label.clone(), render_section(&img, space)));
                            if let Some(eq) = equals {
                                let eq = jetcalc_engine::analysis::reduce_all(pres, eq)?;
                                let diff: Vec<DiffExpr> = img.iter().zip(eq.iter()).map(|(x, y)| x - y).collect();
                                if diff.iter().any(|d| !d.is_zero()) {
                                    outcome = worst(outcome, Status::Fail);
                                    rep.residuals.push(Item::section(label, render_section(&diff, space)));
                                }
                            }
                        }
                        Err(e @ (Error::NonlocalObstruction(_) | Error::Laurent(_))) => {
                            outcome = worst(outcome, Status::Obstruction);
                            rep.payload.push(Item::text(label, e.to_string()));
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok((outcome, None))
            }
            Job::Fiberlinear {
                covering,
                ansatz,
                contains,
                dimension,
            } => {
                let basis = solve_fiberlinear(covering, ansatz, &lifted_linearization(covering))?;
                let cs = covering.space();
                rep.basis = basis.iter().map(|b| render_section(b, cs)).collect();
                let ok = check_span(rep, &basis, contains, *dimension, cs);
                Ok((pass(ok), None))
            }
            Job::Shadow(c, phi) => {
                let r = verify_shadow(c, phi)?;
                Ok((pass(residual_items(rep, "component", &r, c.space())), None))
            }
            Job::VerifyFlat(c) => {
                let r = c.verify_flat()?;
                let cs = c.space();
                let names = cs.independent();
                for (i, j, res) in &r.residuals {
                    for (w, e) in res.iter().enumerate() {
                        if !e.is_zero() {
                            let label = format!("[D_{}, D_{}] {}", names[*i], names[*j], cs.nonlocal()[w].name);
                            rep.residuals.push(Item::text(label, render(e, cs)));
                        }
                    }
                }
                Ok((pass(r.is_flat()), None))
            }
            Job::FiniteSymmetry(c, sigma) => {
                let r = verify_finite_symmetry(c, sigma)?;
                for (label, e) in &r.residuals {
                    rep.residuals.push(Item::text(label.clone(), render(e, c.space())));
                }
                for w in &r.warnings {
                    rep.payload.push(Item::text("warning", w.clone()));
                }
                Ok((pass(r.holds()), None))
            }
            Job::Bivector(d) => {
                let r = verify_bivector_on_equation(pres, d)?;
                if !r.is_zero() {
                    rep.residuals.push(Item::operator("l*D - D*l*", build::operator_to_spec(&r, space)));
                }
                Ok((pass(r.is_zero()), None))
            }
            Job::SchoutenOnEquation(a, b) => {
                let br = schouten_on_equation(pres, a, b)?;
                let trivial = br.is_trivial();
                rep.payload.push(Item::text("bracket", if trivial { "trivial" } else { "nontrivial" }));
                residual_items(rep, "euler", &br.euler, br.space());
                Ok((pass(trivial), None))
            }
            Job::Symplectic(d, ansatz) => {
                let r = verify_symplectic(pres, d, ansatz)?;
                if !r.membership.is_zero() {
                    rep.residuals.push(Item::operator("membership", build::operator_to_spec(&r.membership, space)));
                }
                if let Some(s) = r.skew.as_ref().filter(|s| !s.is_zero()) {
                    rep.residuals.push(Item::operator("skew", build::operator_to_spec(s, space)));
                }
                for (i, j, res) in &r.closedness {
                    rep.residuals.push(Item::section(format!("closedness ({i}, {j})"), render_section(res, space)));
                }
                let route = match r.route {
                    ClosednessRoute::Evolution => "evolution",
                    ClosednessRoute::General => "general",
                };
                rep.payload.push(Item::text("route", route));
                rep.payload.push(Item::text("pairs checked", r.pairs_checked.to_string()));
                Ok((pass(r.is_symplectic()), None))
            }
            Job::Equivalence(e2, w) => {
                let checks = verify_equivalence(pres, e2, w)?;
                let mut ok = true;
                for c in &checks {
                    if c.holds() {
                        rep.payload.push(Item::text(c.name, "holds"));
                    } else {
                        ok = false;
                        rep.residuals.push(Item::operator(c.name, build::operator_to_spec(&c.residual, e2.space())));
                    }
                }
                Ok((pass(ok), None))
            }
        }
    }
}

fn pass(ok: bool) -> Status {
    if ok {
        Status::Ok
    } else {
        Status::Fail
    }
}

fn worst(a: Status, b: Status) -> Status {
    a.max(b)
}

fn classify(e: &Error) -> Status {
    match e {
        Error::NonlocalObstruction(_) | Error::Laurent(_) | Error::Helmholtz(_) => Status::Obstruction,
        Error::NoSolution(_) => Status::Fail,
        _ => Status::Error,
    }
}

/// Records nonzero entries; true when all vanish.
fn residual_items(rep: &mut TaskReport, label: &str, r: &[DiffExpr], space: &JetSpace) -> bool {
    let mut ok = true;
    for (i, e) in r.iter().enumerate() {
        if !e.is_zero() {
            ok = false;
            rep.residuals.push(Item::text(format!("{label} {}", i + 1), render(e, space)));
        }
    }
    ok
}

fn hamiltonian_items(rep: &mut TaskReport, check: &HamiltonianCheck, space: &JetSpace) -> bool {
    if !check.skew_defect.is_zero() {
        rep.residuals.push(Item::operator("A + A*", build::operator_to_spec(&check.skew_defect, space)));
    }
    rep.payload.push(Item::text("bracket superdensity", check.bracket.render()));
    residual_items(rep, "euler", &check.residual, check.bracket.space());
    check.holds()
}

fn check_span(rep: &mut TaskReport, basis: &[Sec], contains: &[Sec], dimension: Option<usize>, space: &JetSpace) -> bool {
    let mut ok = true;
    if let Some(d) = dimension {
        if d != basis.len() {
            ok = false;
            rep.residuals.push(Item::text("dimension", format!("expected {d}, found {}", basis.len())));
        }
    }
    for c in contains {
        if !span_contains(basis, c) {
            ok = false;
            rep.residuals.push(Item::section("not in span", render_section(c, space)));
        }
    }
    ok
}

/// Parses, validates and runs a problem file.
pub fn run_text(text: &str, opts: &Options) -> Result<Report, CliError> {
    let file = ProblemFile::from_json(text)?;
    let plan = Plan::compile(&file, opts)?;
    Ok(plan.execute(text.as_bytes(), opts))
}
