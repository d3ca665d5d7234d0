use num_complex::Complex64;
use serde_json::{Map, Value};

use blocksum_core::equidist::reciprocal_sums;
use blocksum_core::identities::{
    verify_counts, verify_fk_range, verify_pow2_closed_form, verify_product_expansion,
    verify_theta_subsequence,
};
use blocksum_core::probe::{self, omega_scan, ProbeConfig, Route};
use blocksum_core::rearrange::{greedy_rearrange, increasing_order_estimate, GreedyParams, DEFAULT_WINDOW};
use blocksum_core::series::{eta_midpoint, eta_partial, phi, theta_trace};
use blocksum_core::squarefree::{induced_sequence, m_of_k};
use blocksum_core::{CheckpointPolicy, PrimeTable, SeriesPoint, SumTrace};

use crate::output::{complex_cells, float, render, Cell, Format, Meta, Table};
use crate::{Command, Context, Failure, Suite};

pub(crate) struct Outcome {
    pub text: String,
    /// False when a verification suite failed.
    pub verified: bool,
}

fn ok(text: String) -> Result<Outcome, Failure> {
    Ok(Outcome { text, verified: true })
}

fn usize_of(v: u64, what: &str) -> Result<usize, Failure> {
    usize::try_from(v).map_err(|_| Failure::usage(format!("{what} is too large")))
}

fn z_param(z: &SeriesPoint) -> String {
    format!("{},{}", z.x, z.y)
}

const TRACE_COLUMNS: [&str; 5] = ["n", "re", "im", "abs", "last_term_abs"];

fn trace_table(trace: &SumTrace) -> Table {
    let mut t = Table::new(&TRACE_COLUMNS);
    for c in trace.checkpoints() {
        let [re, im, abs] = complex_cells(c.sum);
        t.push(vec![c.n.into(), re, im, abs, c.last_term_abs.into()]);
    }
    t
}

pub(crate) fn dispatch(cmd: &Command, ctx: &Context) -> Result<Outcome, Failure> {
    match cmd {
        Command::Sieve { limit } => {
            let table = PrimeTable::sieve(*limit)?;
            let mut t = Table::new(&["i", "p"]);
            for (i, &p) in table.primes().iter().enumerate() {
                t.push(vec![(i + 1).into(), p.into()]);
            }
            let mut meta = Meta::new("sieve");
            meta.param("limit", limit);
            ok(render(&t, &meta, ctx.format))
        }
        Command::Qseq { count } => {
            let mut t = Table::new(&["position", "q", "sign", "block", "log_q"]);
            for term in induced_sequence(&ctx.ordering, *count)? {
                t.push(vec![
                    term.position.into(),
                    Cell::Text(term.q.to_string()),
                    (term.sign as i64).into(),
                    term.block.into(),
                    term.log_q.into(),
                ]);
            }
            let mut meta = Meta::new("qseq");
            meta.param("count", count).param("ordering", ctx.ordering_label());
            ok(render(&t, &meta, ctx.format))
        }
        Command::Theta { n, z, every } => {
            let z = ctx.z(z)?;
            let policy = match every {
                Some(0) => return Err(Failure::usage("--every must be >= 1")),
                Some(k) => CheckpointPolicy::Every(*k),
                None => CheckpointPolicy::PowersOfTwo,
            };
            let trace = theta_trace(&ctx.ordering, *n, &z, policy)?;
            let mut meta = Meta::new("theta");
            meta.param("n", n).param("z", z_param(&z)).param("ordering", ctx.ordering_label());
            if let Some(k) = every {
                meta.param("every", k);
            }
            ok(render(&trace_table(&trace), &meta, ctx.format))
        }
        Command::Eta { k, z, midpoint } => {
            let z = ctx.z(z)?;
            let mut meta = Meta::new("eta");
            meta.param("K", k).param("z", z_param(&z));
            let t = if *midpoint {
                meta.param("midpoint", true);
                let v = eta_midpoint(*k, &z)?;
                let mut t = Table::new(&["K", "re", "im", "abs"]);
                let [re, im, abs] = complex_cells(v);
                t.push(vec![(*k).into(), re, im, abs]);
                t
            } else {
                trace_table(&eta_partial(*k, &z)?)
            };
            ok(render(&t, &meta, ctx.format))
        }
        Command::Euler { m, z } => {
            let z = ctx.z(z)?;
            if !(z.x.is_finite() && z.y.is_finite()) {
                return Err(Failure::usage("z must be finite"));
            }
            let primes = ctx.ordering.first(usize_of(*m, "m")?)?;
            let mut t = Table::new(&TRACE_COLUMNS);
            let mut acc = Complex64::new(1.0, 0.0);
            for (i, &p) in primes.iter().enumerate() {
                let term = z.pow_neg((p as f64).ln());
                acc *= Complex64::new(1.0, 0.0) - term;
                let [re, im, abs] = complex_cells(acc);
                t.push(vec![(i + 1).into(), re, im, abs, term.norm().into()]);
            }
            let mut meta = Meta::new("euler");
            meta.param("m", m).param("z", z_param(&z)).param("ordering", ctx.ordering_label());
            ok(render(&t, &meta, ctx.format))
        }
        Command::Rearrange { z, target, steps, window } => {
            let z = ctx.z(z)?;
            let steps = usize_of(*steps, "steps")?;
            let window = usize_of(ctx.count(*window, "window", DEFAULT_WINDOW as u64)?, "window")?;
            let target = match target {
                Some((re, im)) => Complex64::new(*re, *im),
                None => increasing_order_estimate(&z, steps)?,
            };
            let plan = greedy_rearrange(&z, target, steps, GreedyParams { window })?;
            eprintln!(
                "blocksum: {} steps, final distance {}, fallback steps {}, forced steps {}",
                plan.steps(),
                float(plan.final_distance()),
                plan.fallback_steps,
                plan.forced_steps
            );
            let text = match ctx.format {
                Format::Csv => {
                    let mut s = format!(
                        "# greedy rearrangement z={} target={},{} steps={} window={}\n",
                        z_param(&z),
                        float(target.re),
                        float(target.im),
                        steps,
                        window
                    );
                    s.push_str(&plan.ordering()?.to_file_string());
                    s
                }
                Format::Json => {
                    let mut meta = Meta::new("rearrange");
                    meta.param("z", z_param(&z))
                        .param("target", format!("{},{}", float(target.re), float(target.im)))
                        .param("steps", steps)
                        .param("window", window);
                    let mut doc = Map::new();
                    doc.insert("meta".into(), meta.json());
                    doc.insert("prefix".into(), plan.prefix.clone().into());
                    doc.insert("final_distance".into(), num(plan.final_distance()));
                    doc.insert("fallback_steps".into(), plan.fallback_steps.into());
                    doc.insert("forced_steps".into(), plan.forced_steps.into());
                    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
                    s.push('\n');
                    s
                }
            };
            ok(text)
        }
        Command::Verify { suite, z, m_max, k_max, tol, .. } => verify(ctx, *suite, z, *m_max, *k_max, *tol),
        Command::OmegaScan { z, k_from, k_to, route } => {
            let z = ctx.z(z)?;
            let route: Route = route.parse()?;
            if k_from > k_to || *k_from == 0 {
                return Err(Failure::usage("need 1 <= --K-from <= --K-to"));
            }
            let cfg = ProbeConfig { z, ordering: ctx.ordering.clone(), k_from: *k_from, k_to: *k_to, route };
            let scan = omega_scan(&cfg)?;
            let mut t = Table::new(&[
                "K", "mK", "psi_re", "psi_im", "fkphi_re", "fkphi_im", "omega_re", "omega_im", "omega_abs",
                "route_gap",
            ]);
            if scan.exploratory {
                t.notes.push("exploratory".into());
            }
            for r in &scan.rows {
                if let Some(note) = &r.note {
                    eprintln!("blocksum: K = {}: {note}", r.k);
                }
                let omega = if route == Route::Direct { r.omega_direct.unwrap_or(r.omega) } else { r.omega };
                t.push(vec![
                    r.k.into(),
                    r.m_k.into(),
                    r.psi.re.into(),
                    r.psi.im.into(),
                    r.fk_phi_prefix.re.into(),
                    r.fk_phi_prefix.im.into(),
                    omega.re.into(),
                    omega.im.into(),
                    omega.norm().into(),
                    r.route_gap.into(),
                ]);
            }
            let mut meta = Meta::new("omega-scan");
            meta.param("z", z_param(&z))
                .param("K_from", k_from)
                .param("K_to", k_to)
                .param("route", route_name(route))
                .param("ordering", ctx.ordering_label());
            ok(render(&t, &meta, ctx.format))
        }
        Command::Equidist { n, y, alpha, threshold, x } => {
            let g = reciprocal_sums(*n, *y, *alpha, *threshold, *x)?;
            let mut t = Table::new(&[
                "N", "count_plus", "count_minus", "count_neutral", "frac_plus", "frac_minus", "frac_neutral",
                "recip_plus", "recip_minus", "recip_neutral", "recip_x_plus", "recip_x_minus", "recip_x_neutral",
            ]);
            for r in &g.rows {
                let total = r.counts.iter().sum::<usize>().max(1) as f64;
                let mut row: Vec<Cell> = vec![r.n.into()];
                row.extend(r.counts.iter().map(|&c| Cell::from(c)));
                row.extend(r.counts.iter().map(|&c| Cell::from(c as f64 / total)));
                row.extend(r.recip.iter().map(|&v| Cell::from(v)));
                row.extend(r.recip_x.iter().map(|&v| Cell::from(v)));
                t.push(row);
            }
            if let Some(s) = g.slopes {
                t.notes.push(format!(
                    "slope of recip against ln ln N: plus {} minus {} neutral {}",
                    float(s[0]),
                    float(s[1]),
                    float(s[2])
                ));
            }
            let mut meta = Meta::new("equidist");
            meta.param("N", n).param("y", y).param("alpha", alpha).param("K", threshold).param("x", x);
            ok(render(&t, &meta, ctx.format))
        }
        Command::Phi { k, z } => {
            let z = ctx.z(z)?;
            z.require(blocksum_core::Domain::Eta)?;
            if *k == 0 {
                return Err(Failure::usage("--k must be >= 1"));
            }
            let mut t = Table::new(&["k", "re", "im", "abs"]);
            let [re, im, abs] = complex_cells(phi(*k, &z));
            t.push(vec![(*k).into(), re, im, abs]);
            let mut meta = Meta::new("phi");
            meta.param("k", k).param("z", z_param(&z));
            ok(render(&t, &meta, ctx.format))
        }
        Command::Psi { k, z } => {
            let z = ctx.z(z)?;
            let value = probe::psi(&ctx.ordering, *k, &z)?;
            let mut t = Table::new(&["K", "mK", "re", "im", "abs"]);
            let [re, im, abs] = complex_cells(value);
            t.push(vec![(*k).into(), m_of_k(&ctx.ordering, *k)?.into(), re, im, abs]);
            let mut meta = Meta::new("psi");
            meta.param("K", k).param("z", z_param(&z)).param("ordering", ctx.ordering_label());
            ok(render(&t, &meta, ctx.format))
        }
    }
}

fn num(v: f64) -> Value {
    Cell::Float(v).json()
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Product => "product",
        Route::Direct => "direct",
        Route::Both => "both",
    }
}

fn verify(
    ctx: &Context,
    suite: Suite,
    z_flag: &crate::ZArg,
    m_max: Option<u64>,
    k_max: Option<u64>,
    tol: Option<f64>,
) -> Result<Outcome, Failure> {
    if tol.is_some_and(|t| t.is_nan() || t < 0.0) {
        return Err(Failure::usage("--tol must be a non-negative number"));
    }
    let all = suite == Suite::All;
    let z = match (z_flag.z, ctx.config.get("z")) {
        (None, None) => {
            let z = SeriesPoint::new(0.75, 1.0);
            if ctx.unsafe_domain { z.with_override() } else { z }
        }
        _ => ctx.z(z_flag)?,
    };
    let mut meta = Meta::new("verify");
    meta.param("suite", format!("{suite:?}").to_lowercase())
        .param("z", z_param(&z))
        .param("ordering", ctx.ordering_label());
    let mut t = Table::new(&["suite", "check", "pass", "detail"]);
    let push = |t: &mut Table, suite: &str, check: String, pass: bool, detail: String| {
        t.push(vec![Cell::Text(suite.into()), Cell::Text(check), Cell::Text(pass.to_string()), Cell::Text(detail)]);
    };

    if all || suite == Suite::Euler {
        let m_max = usize_of(ctx.count(m_max, "m_max", 12)?, "m_max")?;
        meta.param("euler_m_max", m_max);
        for m in 1..=m_max {
            let r = verify_product_expansion(&ctx.ordering, m)?;
            let detail = match &r.witness {
                Some(w) => format!("{} terms; witness {w:?}", r.terms),
                None => format!("{} terms", r.terms),
            };
            push(&mut t, "euler", format!("m={m}"), r.pass, detail);
        }
    }
    if all || suite == Suite::Fk {
        let k_max = ctx.count(k_max, "k_max", 100_000)?;
        meta.param("fk_k_max", k_max);
        let r = verify_fk_range(k_max)?;
        let shown: Vec<String> = r.failures.iter().take(10).map(|k| k.to_string()).collect();
        let detail = if r.pass {
            format!("all k <= {k_max}")
        } else {
            format!("{} failures, first: {}", r.failures.len(), shown.join(" "))
        };
        push(&mut t, "fk", format!("k<={k_max}"), r.pass, detail);
    }
    if all || suite == Suite::Counts {
        let r = verify_counts(16)?;
        for row in &r.rows {
            let pass = row.u_count == (1u64 << row.m) - 1 && row.q_count == 1u64 << (row.m - 1);
            push(
                &mut t,
                "counts",
                format!("m={}", row.m),
                pass,
                format!("|U_m| = {}, |Q_m| = {}", row.u_count, row.q_count),
            );
        }
        if !r.pass {
            push(&mut t, "counts", "summary".into(), false, "count verifier reported failure".into());
        }
    }
    if all || suite == Suite::Theta {
        let m_max = usize_of(ctx.count(m_max, "m_max", 18)?, "m_max")?;
        meta.param("theta_m_max", m_max);
        let tol = tol.unwrap_or(1e-9);
        meta.param("theta_tol", tol);
        let r = verify_theta_subsequence(&ctx.ordering, m_max, &z, tol)?;
        for &(m, err) in &r.errors {
            push(&mut t, "theta", format!("m={m}"), err <= tol, format!("error {}", float(err)));
        }
    }
    if all || suite == Suite::Pow2 {
        let tol = tol.unwrap_or(1e-12);
        meta.param("pow2_tol", tol);
        let r = verify_pow2_closed_form(&z, 64, tol)?;
        push(
            &mut t,
            "pow2",
            "L=64".into(),
            r.pass,
            format!("error {} bound {} |closed form| {}", float(r.error), float(r.bound), float(r.closed_form.norm())),
        );
    }

    let verified = t.rows.iter().all(|row| row[2] == Cell::Text("true".into()));
    Ok(Outcome { text: render(&t, &meta, ctx.format), verified })
}
