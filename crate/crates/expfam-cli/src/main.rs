//! Command-line front end: evaluate family weights and densities, tabulate
//! discrete coefficients, query free-Meixner laws and free cumulants, scan
//! coefficient positivity, and run the full validation suite with JSON/CSV
//! export. All numerics are emitted with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use expfam::classical::{self, RationalSign, VarianceSpec};
use expfam::freefam;
use expfam::harness::{self, fmt17, GridSpec};
use expfam::measure::{moment_report, FamilyMember};
use expfam::qbig;
use expfam::qfam;

#[derive(Parser)]
#[command(
    name = "expfam",
    about = "Exponential families from variance functions: evaluation and numerical certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single weight/density value W(m, u) (for lattice families,
    /// the mass of the atom nearest to u).
    Eval {
        /// Family id, e.g. eps_gaussian, q_exp, free, wall
        family: String,
        /// Family parameters as k=v pairs, e.g. --params lambda=1 eps=1
        #[arg(long, num_args = 0.., value_name = "K=V")]
        params: Vec<String>,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        u: f64,
    },
    /// Moment triples (mass, mean, variance) over an m-grid lo:hi:n.
    Moments {
        family: String,
        #[arg(long, num_args = 0.., value_name = "K=V")]
        params: Vec<String>,
        #[arg(long, value_name = "LO:HI:N")]
        m_grid: String,
    },
    /// φ_n coefficient table for a discrete coefficient generator
    /// (rational_minus, rational_plus, sqrt_one_minus).
    Coeffs {
        generator: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
    },
    /// Free-probability queries.
    Free {
        #[command(subcommand)]
        what: FreeCommand,
    },
    /// First index with a negative coefficient, or none.
    Positivity {
        family: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n_max: usize,
    },
    /// Run the validation suite over a grid and export the report.
    Validate {
        /// GridSpec JSON file; the built-in default grid when omitted.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: String,
        #[arg(long)]
        csv: Option<String>,
        /// Tolerance overrides.
        #[arg(long)]
        tol_mass: Option<f64>,
        #[arg(long)]
        tol_mean: Option<f64>,
        #[arg(long)]
        tol_variance: Option<f64>,
        #[arg(long)]
        tol_ode: Option<f64>,
    },
}

#[derive(Subcommand)]
enum FreeCommand {
    /// Free-Meixner law: density samples plus atoms.
    Meixner {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Number of density sample points across the support.
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Free cumulants of the variance function given as a power series.
    Cumulants {
        /// Ascending series coefficients c0,c1,...
        #[arg(long, value_delimiter = ',')]
        series: Vec<f64>,
        #[arg(long)]
        order: usize,
    },
}

fn parse_params(pairs: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected k=v, got {pair}"))?;
        let value: f64 = v.parse().with_context(|| format!("bad value in {pair}"))?;
        map.insert(k.to_string(), value);
    }
    Ok(map)
}

fn need(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| anyhow!("missing required parameter {key}=<value>"))
}

fn member_for(family: &str, p: &BTreeMap<String, f64>, m: f64) -> Result<FamilyMember> {
    Ok(match family {
        "eps_gaussian" => {
            classical::eps_gaussian(need(p, "lambda", Some(1.0))?, need(p, "eps", Some(1.0))?, m)?
        }
        "eps_gamma" => {
            classical::eps_gamma(need(p, "lambda", Some(2.0))?, need(p, "eps", Some(1.0))?, m)?
        }
        "eps_poisson" => {
            classical::eps_poisson(need(p, "lambda", Some(1.0))?, need(p, "eps", Some(1.0))?, m)?
        }
        "eps_gauss_discrete" => classical::eps_gauss_discrete(
            need(p, "lambda", Some(1.0))?,
            need(p, "eps", Some(1.0))?,
            m,
        )?,
        "rational_minus" => classical::rational_minus_family(need(p, "lambda", Some(1.0))?, m)?,
        "free" => freefam::free_family_member(need(p, "a", None)?, need(p, "b", None)?, m)?,
        "q_laguerre_continuous" => qbig::q_laguerre_member(
            &qbig::PParams::new(need(p, "p", None)?, need(p, "lambda", Some(1.0))?)?,
            m,
        )?,
        "q_laguerre_discrete" => qbig::q_laguerre_discrete(
            &qbig::PParams::new(need(p, "p", None)?, need(p, "lambda", Some(1.0))?)?,
            m,
        )?,
        "wall" => qbig::wall_family(need(p, "q", None)?, m)?,
        "al_salam_carlitz" => qbig::al_salam_carlitz_family(need(p, "p", None)?, m)?,
        "q_infinity_two_point" => {
            let lambda = need(p, "lambda", Some(1.0))?;
            qbig::q_infinity_family(&qbig::q_inf_two_point(lambda)?, lambda, m)?
        }
        "q_infinity_semicircle" => {
            let lambda = need(p, "lambda", Some(1.0))?;
            qbig::q_infinity_family(&qbig::q_inf_semicircle(lambda)?, lambda, m)?
        }
        "arcsine" => classical::arcsine_member(need(p, "lambda", Some(1.0))?, m)?,
        other => bail!("unknown family {other}"),
    })
}

fn eval_value(family: &str, p: &BTreeMap<String, f64>, m: f64, u: f64) -> Result<f64> {
    Ok(match family {
        "eps_gaussian" => classical::eps_gaussian_density(
            need(p, "lambda", Some(1.0))?,
            need(p, "eps", Some(1.0))?,
            m,
            u,
        )?,
        "eps_gamma" => classical::eps_gamma_density(
            need(p, "lambda", Some(2.0))?,
            need(p, "eps", Some(1.0))?,
            m,
            u,
        )?,
        "eps_poisson" => {
            let lambda = need(p, "lambda", Some(1.0))?;
            let n = (u * lambda).round();
            if n < 0.0 {
                bail!("eps_poisson atoms live at n/lambda with n >= 0");
            }
            classical::eps_poisson_mass(lambda, need(p, "eps", Some(1.0))?, m, n as usize)?
        }
        "eps_gauss_discrete" => {
            let lambda = need(p, "lambda", Some(1.0))?;
            let eps = need(p, "eps", Some(1.0))?;
            let j = (u * lambda / eps.sqrt()).round() as i64;
            classical::eps_gauss_discrete_mass(lambda, eps, m, j)?
        }
        "rational_minus" => {
            let lambda = need(p, "lambda", Some(1.0))?;
            let member = classical::rational_minus_family(lambda, m)?;
            let n = (u * lambda).round();
            if n < 0.0 {
                bail!("rational_minus atoms live at n/lambda with n >= 0");
            }
            member
                .measure
                .atom(n as usize)
                .map(|(_, w)| w)
                .ok_or_else(|| anyhow!("atom index out of range"))?
        }
        "q_exp" => {
            let params = qfam::QExpParams::new(
                need(p, "q", None)?,
                need(p, "a", None)?,
                need(p, "b", None)?,
            )?;
            qfam::q_weight(&params, m, u)?
        }
        "free" => {
            let spec = VarianceSpec::quadratic(
                1.0,
                need(p, "a", None)?,
                need(p, "b", None)?,
                (-1.0, 1.0),
                1.0,
            )?;
            freefam::free_weight(&spec, m, u)?
        }
        "arcsine" => classical::arcsine_weight(need(p, "lambda", Some(1.0))?, m, u)?,
        "q_laguerre_continuous" => qbig::q_laguerre_continuous(
            &qbig::PParams::new(need(p, "p", None)?, need(p, "lambda", Some(1.0))?)?,
            m,
            u,
        )?,
        "q_laguerre_discrete" => qbig::q_laguerre_discrete_weight(
            &qbig::PParams::new(need(p, "p", None)?, need(p, "lambda", Some(1.0))?)?,
            m,
            u,
        )?,
        "wall" => qbig::wall_weight(need(p, "q", None)?, m, u)?,
        "al_salam_carlitz" => qbig::al_salam_carlitz_weight(need(p, "p", None)?, m, u)?,
        other => bail!("unknown family {other}"),
    })
}

fn parse_grid_arg(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("m-grid must be lo:hi:n, got {s}");
    }
    let lo: f64 = parts[0].parse()?;
    let hi: f64 = parts[1].parse()?;
    let n: usize = parts[2].parse()?;
    if n == 0 || !(lo <= hi) {
        bail!("m-grid must satisfy lo <= hi and n >= 1");
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn params_json(p: &BTreeMap<String, f64>) -> String {
    let items: Vec<String> = p
        .iter()
        .map(|(k, v)| format!("{}:{}", serde_json::to_string(k).unwrap(), fmt17(*v)))
        .collect();
    format!("{{{}}}", items.join(","))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval { family, params, m, u } => {
            let p = parse_params(&params)?;
            let value = eval_value(&family, &p, m, u)?;
            println!(
                "{{\"schema\":1,\"family\":{},\"params\":{},\"m\":{},\"u\":{},\"value\":{}}}",
                serde_json::to_string(&family)?,
                params_json(&p),
                fmt17(m),
                fmt17(u),
                fmt17(value)
            );
        }
        Command::Moments {
            family,
            params,
            m_grid,
        } => {
            let p = parse_params(&params)?;
            let grid = parse_grid_arg(&m_grid)?;
            let mut rows = Vec::new();
            for &m in &grid {
                let (mass, mean, variance) = if family == "q_exp" {
                    let qp = qfam::QExpParams::new(
                        need(&p, "q", None)?,
                        need(&p, "a", None)?,
                        need(&p, "b", None)?,
                    )?;
                    if m == 0.0 {
                        (1.0, 0.0, qp.variance_fn(0.0))
                    } else {
                        qfam::weight_moments_series(&qp, m, 48)?
                    }
                } else {
                    let member = member_for(&family, &p, m)?;
                    let rep = moment_report(&member, 1e-9)?;
                    (rep.mass, rep.mean, rep.variance)
                };
                rows.push(format!(
                    "{{\"m\":{},\"mass\":{},\"mean\":{},\"variance\":{}}}",
                    fmt17(m),
                    fmt17(mass),
                    fmt17(mean),
                    fmt17(variance)
                ));
            }
            println!(
                "{{\"schema\":1,\"family\":{},\"params\":{},\"moments\":[{}]}}",
                serde_json::to_string(&family)?,
                params_json(&p),
                rows.join(",")
            );
        }
        Command::Coeffs {
            generator,
            lambda,
            n,
        } => {
            let phi = |k: usize| -> Result<f64> {
                Ok(match generator.as_str() {
                    "rational_minus" => classical::rational_phi(lambda, k, RationalSign::Minus)?,
                    "rational_plus" => classical::rational_phi(lambda, k, RationalSign::Plus)?,
                    "sqrt_one_minus" => classical::sqrt_family_phi(lambda, k)?,
                    other => bail!("unknown generator {other}"),
                })
            };
            let mut rows = Vec::new();
            for k in 0..=n {
                rows.push(format!("{{\"n\":{k},\"phi\":{}}}", fmt17(phi(k)?)));
            }
            println!(
                "{{\"schema\":1,\"generator\":{},\"lambda\":{},\"coeffs\":[{}]}}",
                serde_json::to_string(&generator)?,
                fmt17(lambda),
                rows.join(",")
            );
        }
        Command::Free { what } => match what {
            FreeCommand::Meixner { a, b, samples } => {
                let law = freefam::free_meixner(a, b)?;
                let (lo, hi) = law.ac_support;
                let n = samples.max(2);
                let mut rows = Vec::new();
                for i in 0..n {
                    let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    rows.push(format!("[{},{}]", fmt17(u), fmt17(law.density(u))));
                }
                let atoms: Vec<String> = law
                    .atoms
                    .iter()
                    .map(|&(u, p)| format!("[{},{}]", fmt17(u), fmt17(p)))
                    .collect();
                println!(
                    "{{\"schema\":1,\"a\":{},\"b\":{},\"support\":[{},{}],\"samples\":[{}],\"atoms\":[{}],\"total_mass\":{}}}",
                    fmt17(a),
                    fmt17(b),
                    fmt17(lo),
                    fmt17(hi),
                    rows.join(","),
                    atoms.join(","),
                    fmt17(law.total_mass())
                );
            }
            FreeCommand::Cumulants { series, order } => {
                if series.is_empty() {
                    bail!("--series needs at least the constant coefficient");
                }
                let spec = VarianceSpec::custom_series(series, (-0.05, 0.05), 1.0)?;
                let k = freefam::free_cumulants(&spec, order)?;
                let mut rows = Vec::new();
                for n in 1..=order {
                    rows.push(fmt17(k.cumulant(n)?));
                }
                println!("{{\"schema\":1,\"order\":{order},\"cumulants\":[{}]}}", rows.join(","));
            }
        },
        Command::Positivity {
            family,
            lambda,
            n_max,
        } => {
            let first = match family.as_str() {
                "rational_minus" => {
                    classical::rational_phi_first_negative(lambda, n_max, RationalSign::Minus)?
                }
                "rational_plus" => {
                    classical::rational_phi_first_negative(lambda, n_max, RationalSign::Plus)?
                }
                "sqrt_one_minus" => classical::sqrt_family_first_negative(lambda, n_max)?,
                other => bail!("unknown coefficient family {other}"),
            };
            let rendered = first
                .map(|n| n.to_string())
                .unwrap_or_else(|| "\"none\"".into());
            println!(
                "{{\"schema\":1,\"family\":{},\"lambda\":{},\"n_max\":{n_max},\"first_negative\":{rendered}}}",
                serde_json::to_string(&family)?,
                fmt17(lambda)
            );
        }
        Command::Validate {
            grid,
            out,
            csv,
            tol_mass,
            tol_mean,
            tol_variance,
            tol_ode,
        } => {
            let mut spec: GridSpec = match grid {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading grid file {path}"))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?
                }
                None => GridSpec::default(),
            };
            if let Some(t) = tol_mass {
                spec.tol_mass = t;
            }
            if let Some(t) = tol_mean {
                spec.tol_mean = t;
            }
            if let Some(t) = tol_variance {
                spec.tol_variance = t;
            }
            if let Some(t) = tol_ode {
                spec.tol_ode = t;
            }
            let report = harness::run_suite(&spec)?;
            fs::write(&out, harness::emit_json(&report))
                .with_context(|| format!("writing {out}"))?;
            if let Some(csv_path) = csv {
                fs::write(&csv_path, harness::emit_csv(&report))
                    .with_context(|| format!("writing {csv_path}"))?;
            }
            for fam in &report.families {
                println!(
                    "{} {}",
                    if fam.pass { "PASS" } else { "FAIL" },
                    fam.family
                );
            }
            let free_pass = report.free_grid.iter().all(|f| f.pass);
            if !report.free_grid.is_empty() {
                println!(
                    "{} free_meixner_mass_grid ({} nodes)",
                    if free_pass { "PASS" } else { "FAIL" },
                    report.free_grid.len()
                );
            }
            for c in &report.counterexamples {
                println!(
                    "{} counterexample {} (fails positivity as required)",
                    if c.expected_failure_observed {
                        "PASS"
                    } else {
                        "FAIL"
                    },
                    c.family
                );
            }
            eprintln!("wall time: {:.1} ms", report.wall_time_ms);
            println!("{}", if report.pass { "PASS overall" } else { "FAIL overall" });
            if !report.pass {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
