use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use calogero::extensions::{classify as classify_params, eigenvalues, ExtensionParams, SpectralPoint};
use calogero::ndim::{
    build_nd_generator, effective_coupling, read_mode_files, write_mode_files, ModeComponent, ModeDecomposition,
};
use calogero::oracle::{shoot_all, ShootingConfig};
use calogero::radial::{RadialFunction, RadialGrid};
use calogero::resolvent::{log_bump, ode_residual, resolvent_norm_estimate, ResolventQuery, ResolventReport};
use calogero::semigroup::{evolve as evolve_semigroup, norm_trace, write_trace_csv, EvolutionConfig};
use calogero::{ExecPolicy, C64};
use serde::Serialize;

use crate::literal::parse_complex;
use crate::{Boundary, CliError, Coupling, GridSpec, Spacing};

/// Oracle disagreement above which `spectrum --verify` fails.
const ORACLE_TOLERANCE: f64 = 1e-5;

impl Coupling {
    /// `ν`, after checking that the coupling lies below the Hardy threshold.
    pub fn nu(&self) -> Result<f64, CliError> {
        match (self.nu, self.b) {
            (Some(nu), None) if nu.is_finite() && nu > 0.0 => Ok(nu),
            (Some(nu), None) => Err(CliError::Usage(format!("--nu must be positive and finite, got {nu}"))),
            (None, Some(b)) if b.is_finite() && b < -0.25 => Ok((-b - 0.25).sqrt()),
            (None, Some(b)) => Err(CliError::Usage(format!("--b must satisfy b < -1/4, got {b}"))),
            _ => Err(CliError::Usage("exactly one of --nu and --b is required".into())),
        }
    }
}

pub fn coupling_b(nu: f64) -> f64 {
    -(nu * nu + 0.25)
}

impl Boundary {
    pub fn params(&self) -> Result<ExtensionParams, CliError> {
        ExtensionParams::new(self.a1, self.a2).map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<RadialGrid>, CliError> {
        let grid = match self.spacing {
            Spacing::Log => RadialGrid::log(self.r_min, self.r_max, self.points),
            Spacing::Linear => RadialGrid::linear(self.r_min, self.r_max, self.points),
            Spacing::Hybrid => RadialGrid::hybrid(self.r_min, self.r_max, self.points, self.max_step),
        };
        grid.map(Arc::new).map_err(|e| CliError::Usage(e.to_string()))
    }
}

pub fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))? + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_radial(path: &Path) -> Result<RadialFunction, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(RadialFunction::read_csv(BufReader::new(file))?)
}

fn write_radial(u: &RadialFunction, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    u.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct ClassifyReport {
    kappa_mod: f64,
    theta: Option<f64>,
    case: String,
    #[serde(rename = "theta_A")]
    theta_a: Option<f64>,
}

pub fn classify(coupling: Coupling, boundary: Boundary) -> Result<(), CliError> {
    let nu = coupling.nu()?;
    let inv = classify_params(&boundary.params()?, nu);
    print_json(
        &ClassifyReport {
            kappa_mod: inv.kappa_mod,
            // |κ| = 0 gives θ = -∞, which JSON cannot carry
            theta: inv.theta.is_finite().then_some(inv.theta),
            case: inv.case_label.to_string(),
            theta_a: inv.theta_a,
        },
        None,
    )
}

#[derive(Serialize)]
struct SpectrumSummary {
    case: String,
    eigenvalue_count: usize,
    expected_ladder_ratio: f64,
    max_oracle_gap: Option<f64>,
}

/// Shoots from a perturbed closed-form value and returns the oracle eigenvalues.
pub fn shoot(a: &ExtensionParams, nu: f64, closed: &[SpectralPoint]) -> Result<Vec<C64>, CliError> {
    let guesses: Vec<C64> = closed.iter().map(|p| p.z * C64::from_polar(1.05, 0.02)).collect();
    let shot = shoot_all(a, nu, &guesses, &ShootingConfig::default(), ExecPolicy::Parallel)?;
    Ok(shot.into_iter().map(|(p, _)| p.z).collect())
}

pub fn spectrum(
    coupling: Coupling,
    boundary: Boundary,
    j_min: i64,
    j_max: i64,
    verify: bool,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let nu = coupling.nu()?;
    let a = boundary.params()?;
    if j_min > j_max {
        return Err(CliError::Usage(format!("--j-min {j_min} exceeds --j-max {j_max}")));
    }
    let closed = eigenvalues(&a, nu, j_min..=j_max)?;
    let oracle = if verify { Some(shoot(&a, nu, &closed)?) } else { None };

    let mut csv = String::from("j,re_z,im_z,residual,source,ladder_ratio");
    if verify {
        csv.push_str(",oracle_re_z,oracle_im_z,oracle_gap");
    }
    csv.push('\n');
    csv.push_str("continuum,0,0,,continuous[0;inf),");
    if verify {
        csv.push_str(",,,");
    }
    csv.push('\n');
    let mut max_gap: f64 = 0.0;
    for (k, p) in closed.iter().enumerate() {
        let ratio = match k {
            0 => String::new(),
            _ => format!("{:.17e}", p.z.norm() / closed[k - 1].z.norm()),
        };
        csv.push_str(&format!(
            "{},{:.17e},{:.17e},{:.3e},{},{ratio}",
            p.j,
            p.z.re + 0.0,
            p.z.im + 0.0,
            p.residual,
            p.source
        ));
        if let Some(shot) = &oracle {
            let gap = (shot[k] - p.z).norm() / p.z.norm();
            max_gap = max_gap.max(gap);
            csv.push_str(&format!(
                ",{:.17e},{:.17e},{gap:.3e}",
                shot[k].re + 0.0,
                shot[k].im + 0.0
            ));
        }
        csv.push('\n');
    }

    match &out {
        Some(path) => {
            fs::write(path, &csv)?;
            print_json(
                &SpectrumSummary {
                    case: classify_params(&a, nu).case_label.to_string(),
                    eigenvalue_count: closed.len(),
                    expected_ladder_ratio: (2.0 * PI / nu).exp(),
                    max_oracle_gap: oracle.as_ref().map(|_| max_gap),
                },
                None,
            )?;
        }
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    if max_gap > ORACLE_TOLERANCE {
        return Err(CliError::Verification(format!(
            "oracle disagrees with the closed form by {max_gap:.3e} > {ORACLE_TOLERANCE:e}"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn resolve(
    coupling: Coupling,
    boundary: Boundary,
    z: C64,
    input: &Path,
    out: &Path,
    report: Option<PathBuf>,
    probes: usize,
    max_residual: f64,
) -> Result<(), CliError> {
    let nu = coupling.nu()?;
    let a = boundary.params()?;
    let f = read_radial(input)?;
    let query = ResolventQuery::new(a, nu, z)?;
    let u = query.apply(&f)?;
    write_radial(&u, out)?;
    let residual = ode_residual(&u, &f, z, coupling_b(nu))?;
    let norm_estimate = resolvent_norm_estimate(&a, nu, z, probes)?;
    print_json(
        &ResolventReport {
            z: pair(z),
            omega: pair(query.omega().omega()),
            c: pair(query.c()),
            residual,
            norm_estimate,
        },
        report.as_deref(),
    )?;
    if residual.is_nan() || residual > max_residual {
        return Err(CliError::Verification(format!(
            "ODE residual {residual:.3e} exceeds {max_residual:e}; refine the input grid"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    t: [f64; 2],
    #[serde(rename = "theta_A")]
    theta_a: f64,
    nodes: usize,
    error_estimate: f64,
    norm_ratio: f64,
}

pub struct EvolveArgs {
    pub t: C64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub nodes: usize,
    pub tolerance: f64,
    pub grid: GridSpec,
}

pub fn evolve(coupling: Coupling, boundary: Boundary, args: EvolveArgs) -> Result<(), CliError> {
    let nu = coupling.nu()?;
    let mut cfg = EvolutionConfig::new(boundary.params()?, nu);
    let theta_a = cfg.theta_a()?;
    cfg.nodes = args.nodes;
    cfg.max_nodes = cfg.max_nodes.max(args.nodes);
    cfg.tolerance = args.tolerance;
    let f = match &args.input {
        Some(path) => read_radial(path)?,
        None => log_bump(args.grid.build()?, 1.0, 0.5),
    };
    let ev = evolve_semigroup(&cfg, args.t, &f)?;
    if let Some(path) = &args.out {
        write_radial(&ev.u, path)?;
    }
    if let Some(path) = &args.trace {
        let times: Vec<f64> = (0..=10).rev().map(|k| args.t.norm() * 0.5f64.powi(k)).collect();
        let trace = norm_trace(&cfg, &f, &times)?;
        let file = fs::File::create(path)?;
        write_trace_csv(BufWriter::new(file), &trace)?;
    }
    print_json(
        &EvolveSummary {
            t: pair(args.t),
            theta_a,
            nodes: ev.nodes,
            error_estimate: ev.error_estimate,
            norm_ratio: ev.u.norm() / f.norm(),
        },
        None,
    )
}

#[derive(Serialize)]
struct NdimSummary {
    #[serde(rename = "N")]
    dim: usize,
    b: f64,
    band: usize,
    deficient_degrees: Vec<usize>,
    deficient_harmonics: usize,
    z: [f64; 2],
    input_header: PathBuf,
    output_header: PathBuf,
}

/// Reads `{"<degree>": ["<a1>", "<a2>"], ...}`.
fn read_choices(path: &Path) -> Result<BTreeMap<usize, ExtensionParams>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let raw: BTreeMap<String, [String; 2]> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    raw.into_iter()
        .map(|(degree, [a1, a2])| {
            let n: usize = degree
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("choice key {degree:?} is not a degree")))?;
            let a = ExtensionParams::new(
                parse_complex(&a1).map_err(CliError::Usage)?,
                parse_complex(&a2).map_err(CliError::Usage)?,
            )
            .map_err(|e| CliError::Usage(format!("degree {n}: {e}")))?;
            Ok((n, a))
        })
        .collect()
}

pub struct NdimArgs {
    pub b: f64,
    pub dim: usize,
    pub band: usize,
    pub choices: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub z: C64,
    pub out_dir: PathBuf,
    pub grid: GridSpec,
}

pub fn ndim(args: NdimArgs) -> Result<(), CliError> {
    if !args.b.is_finite() {
        return Err(CliError::Usage(format!("--b must be finite, got {}", args.b)));
    }
    if args.dim < 2 {
        return Err(CliError::Usage(format!("--N must be at least 2, got {}", args.dim)));
    }
    let choices = match &args.choices {
        Some(path) => read_choices(path)?,
        None => BTreeMap::new(),
    };
    let op = build_nd_generator(args.b, args.dim, args.band, &choices)?;
    eprintln!(
        "ndim: {} deficient degree(s) {:?} carrying {} harmonic(s)",
        op.deficient_degrees().len(),
        op.deficient_degrees(),
        op.deficient_harmonic_count()
    );

    let f = match &args.input {
        Some(path) => {
            let (header, f) = read_mode_files(path)?;
            if header.dim != args.dim || header.b != args.b || header.band != args.band {
                return Err(CliError::Usage(format!(
                    "input was written for N = {}, b = {}, band = {}",
                    header.dim, header.b, header.band
                )));
            }
            f
        }
        None => {
            // one log-bump per degree, in the first harmonic of that degree
            let grid = args.grid.build()?;
            let components = (0..=args.band)
                .map(|n| {
                    Ok(ModeComponent {
                        mode: effective_coupling(args.b, args.dim, n)?,
                        index: 0,
                        profile: log_bump(grid.clone(), 1.0, 0.5),
                    })
                })
                .collect::<calogero::Result<Vec<_>>>()?;
            ModeDecomposition {
                dim: args.dim,
                b: args.b,
                band: args.band,
                components,
            }
        }
    };
    let u = op.apply(args.z, &f, ExecPolicy::Parallel)?;
    let input_header = write_mode_files(&args.out_dir, "input", &f, Some(&op))?;
    let output_header = write_mode_files(&args.out_dir, "resolvent", &u, Some(&op))?;
    print_json(
        &NdimSummary {
            dim: args.dim,
            b: args.b,
            band: args.band,
            deficient_degrees: op.deficient_degrees().to_vec(),
            deficient_harmonics: op.deficient_harmonic_count(),
            z: pair(args.z),
            input_header,
            output_header,
        },
        None,
    )
}
