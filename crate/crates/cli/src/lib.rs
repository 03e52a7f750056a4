//! Command line front end: `homog3 <subcommand> ...`.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 numerical failure
//! (non-closure, non-convergence). Failures print one JSON object
//! `{"kind": ..., "message": ...}` on standard error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix2, Vector3};
use serde_json::json;

use homog3::cmc::{self, GaussVerdict, Slice};
use homog3::flux::{cmc_flux, CapChain, CurveChain, FluxInput};
use homog3::frames::{self, TangentVector};
use homog3::io::{self, Cell};
use homog3::surface::{stability_spectrum, Ambient, Immersion, Topology};
use homog3::{expm2, subgroups, Error, GroupPoint, LieVector, SpaceSpec, VectorField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "homog3", version, about = "Geometry of three-dimensional metric Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SpaceArg {
    /// JSON space file, or a built-in name: euclidean, h3, nil3, sol3,
    /// e2tilde(c), h2xr(kappa), s2xr(kappa), sl2(l1,l2,l3), nonunimodular(b)
    #[arg(long, default_value = "euclidean")]
    space: String,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Describe a space: its spec, Ricci curvature at the identity and critical mean curvature
    Space {
        #[command(flatten)]
        space: SpaceArg,
    },
    /// Exponential exp(zA) of a 2x2 matrix
    Expm {
        /// Entries a,b,c,d of A = [[a,b],[c,d]]
        #[arg(long = "A", default_value = "0,0,0,0")]
        a: String,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
    },
    /// Metric tensor in coordinates at a point, as CSV
    Metric {
        #[command(flatten)]
        space: SpaceArg,
        /// Point x,y,z
        #[arg(long, default_value = "0,0,0")]
        point: String,
    },
    /// Geodesic polyline as CSV (t,x,y,z)
    Geodesic {
        #[command(flatten)]
        space: SpaceArg,
        /// Start point x,y,z
        #[arg(long, default_value = "0,0,0")]
        from: String,
        /// Initial velocity in orthonormal frame components
        #[arg(long, default_value = "1,0,0")]
        dir: String,
        /// Final time
        #[arg(long = "T", default_value_t = 5.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Gauss map image of the two-dimensional subgroups of SL~(2,R), as CSV (theta,g1,g2,g3)
    #[command(name = "gaussmap-subgroups")]
    GaussmapSubgroups {
        #[arg(long, default_value = "1,1,1")]
        lambda: String,
        #[arg(long, default_value_t = 360)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Stability spectrum of the rotational H-sphere, as JSON
    Spectrum {
        #[command(flatten)]
        space: SpaceArg,
        /// Surface; only the rotational sphere is built in
        #[arg(long, default_value = "sphere")]
        surface: String,
        #[arg(long = "H", default_value_t = 1.0)]
        h: f64,
        /// Grid NUxNV
        #[arg(long, default_value = "64x128")]
        grid: String,
        /// Number of eigenvalues
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = homog3::spectral::NULLITY_TOL)]
        nullity_tol: f64,
    },
    /// Rotational H-sphere: summary as JSON, profile as CSV (s,x,y,phi,kappa)
    Sphere {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "H", default_value_t = 1.0)]
        h: f64,
        /// Profile samples written with --out
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Areas of rotational H-spheres as CSV (H,closed,area,closure_residual)
    Sweep {
        #[command(flatten)]
        space: SpaceArg,
        /// Inclusive range start:stop:step, or a comma separated list
        #[arg(long = "H", default_value = "0.5:1.5:0.1")]
        h: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Gauss curve of the invariant CMC annulus of a semidirect product, as CSV (s,g1,g2,g3)
    #[command(name = "gauss-curve")]
    GaussCurve {
        #[arg(long, default_value = "sol3")]
        space: String,
        #[arg(long = "H", default_value_t = 0.3)]
        h: f64,
        /// Orientation of the profile (+1 or -1)
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        orientation: f64,
        /// Search interval for the starting abscissa
        #[arg(long, default_value = "0.05:100")]
        x_range: String,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// CMC flux of a closed curve on a built-in CMC surface, as JSON
    Flux {
        #[command(flatten)]
        space: SpaceArg,
        /// sphere (unit, H = 1), cylinder (radius 1/(2H)), plane (z = 0, H = 0)
        #[arg(long, default_value = "cylinder")]
        surface: String,
        #[arg(long = "H", default_value_t = 0.5)]
        h: f64,
        /// Killing field: Fx, Fy, Fz (right invariant), rot, or a combination like 2*Fz+Fx
        #[arg(long = "K", default_value = "Fz")]
        k: String,
        /// Height of the circle (polar angle for the sphere)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        height: f64,
        #[arg(long, default_value_t = 256)]
        segments: usize,
    },
    /// Run the built-in sanity suite
    Selftest,
}

fn parse_list(s: &str, n: usize, what: &str) -> homog3::Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{what}: bad number {t:?}"))))
        .collect::<homog3::Result<Vec<f64>>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("{what}: expected {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

/// `a:b:step` (inclusive, values `a + i step`), a list `a,b,c`, or a single value.
pub fn parse_range(s: &str) -> homog3::Result<Vec<f64>> {
    let bad = |t: &str| Error::Parse(format!("bad range {s:?} ({t})"));
    if s.contains(':') {
        let p: Vec<f64> = s.split(':').map(|t| t.trim().parse::<f64>().map_err(|_| bad(t))).collect::<homog3::Result<_>>()?;
        let (a, b, step) = match p[..] {
            [a, b, step] => (a, b, step),
            [a, b] => (a, b, 1.0),
            _ => return Err(bad("expected start:stop:step")),
        };
        if !(step > 0.0) || !(b >= a) {
            return Err(Error::InvalidArgument(format!("range {s:?} is empty")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| a + i as f64 * step).collect())
    } else {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad(t))).collect()
    }
}

fn parse_grid(s: &str) -> homog3::Result<(usize, usize)> {
    let bad = || Error::Parse(format!("bad grid {s:?}, expected NUxNV"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// `Fx`, `Fy`, `Fz`, `rot`, `E1..E3`, or `c*X + c*Y`.
pub fn parse_killing(s: &str) -> homog3::Result<VectorField> {
    let atom = |t: &str| -> homog3::Result<VectorField> {
        Ok(match t {
            "Fx" | "F1" => VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0)),
            "Fy" | "F2" => VectorField::RightInvariant(LieVector::new(0.0, 1.0, 0.0)),
            "Fz" | "F3" => VectorField::RightInvariant(LieVector::new(0.0, 0.0, 1.0)),
            "rot" => VectorField::Rotation,
            "vertical" => VectorField::Vertical,
            "E1" => VectorField::LeftInvariant(0),
            "E2" => VectorField::LeftInvariant(1),
            "E3" => VectorField::LeftInvariant(2),
            _ => return Err(Error::Parse(format!("unknown Killing field {t:?}"))),
        })
    };
    let mut terms = vec![];
    for term in s.replace('-', "+-").split('+').map(str::trim).filter(|t| !t.is_empty()) {
        let (c, name) = match term.split_once('*') {
            Some((c, name)) => (c.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient in {term:?}")))?, name.trim()),
            None if term.starts_with('-') => (-1.0, term[1..].trim()),
            None => (1.0, term),
        };
        terms.push((c, atom(name)?));
    }
    match terms.len() {
        0 => Err(Error::Parse("empty Killing field".into())),
        1 if terms[0].0 == 1.0 => Ok(terms.pop().unwrap().1),
        _ => Ok(VectorField::Combination(terms)),
    }
}

fn write_out(out: &Option<PathBuf>, stdout: &mut dyn Write, header: &[&str], rows: &[Vec<Cell>]) -> homog3::Result<()> {
    match out {
        Some(p) => io::emit_table(header, rows, p),
        None => {
            let text = io::table_to_string(header, rows)?;
            stdout.write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn print_json(stdout: &mut dyn Write, v: &serde_json::Value) -> homog3::Result<()> {
    writeln!(stdout, "{}", serde_json::to_string_pretty(v).expect("json")).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}

fn mat_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Closed surfaces available to `flux`, with the curve at `height`.
fn flux_surface(name: &str, h: f64, height: f64) -> homog3::Result<(Immersion, f64)> {
    match name {
        "sphere" => Ok((
            Immersion::from_chart(
                |u, v| Ok(GroupPoint::semidirect(u.sin() * v.cos(), u.sin() * v.sin(), u.cos())),
                Topology::Sphere,
                (0.0, PI),
                (0.0, 2.0 * PI),
                (16, 32),
                -1.0,
            )?,
            1.0,
        )),
        "cylinder" => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("cylinder needs H > 0".into()));
            }
            let r = 0.5 / h;
            Ok((
                Immersion::from_chart(
                    move |u, v| Ok(GroupPoint::semidirect(r * v.cos(), r * v.sin(), u)),
                    Topology::Cylinder,
                    (height - 1.0, height + 1.0),
                    (0.0, 2.0 * PI),
                    (8, 32),
                    -1.0,
                )?,
                h,
            ))
        }
        "plane" => Ok((
            Immersion::from_chart(
                |u, v| Ok(GroupPoint::semidirect(u * v.cos(), u * v.sin(), 0.0)),
                Topology::Cylinder,
                (0.5, 2.0),
                (0.0, 2.0 * PI),
                (8, 32),
                1.0,
            )?,
            0.0,
        )),
        _ => Err(Error::InvalidArgument(format!("unknown surface {name:?} (sphere, cylinder, plane)"))),
    }
}

fn selftest(stdout: &mut dyn Write) -> homog3::Result<bool> {
    let euclid = SpaceSpec::semidirect(0.0, 0.0, 0.0, 0.0);
    let mut checks: Vec<(&str, bool)> = vec![];
    let a = Matrix2::new(0.3, -1.2, 0.7, 0.1);
    checks.push(("expm2 at z = 0 is the identity", (expm2(&a, 0.0)? - Matrix2::identity()).amax() < 1e-15));
    let g = GroupPoint::semidirect(0.4, -1.0, 2.0);
    let e = euclid.identity();
    checks.push(("identity is neutral", homog3::group::multiply(&euclid, &g, &e)? == g));
    checks.push(("Euclidean metric is the identity", (frames::metric_tensor(&euclid, &g)? - nalgebra::Matrix3::identity()).amax() < 1e-14));
    checks.push(("empty table is header only", io::table_to_string(&["H"], &[])? == "H\n"));
    let (imm, h) = flux_surface("sphere", 1.0, 0.0)?;
    let amb = Ambient::new(&euclid)?;
    let path = |t: f64| (1.0, 2.0 * PI * t);
    let alpha = CurveChain::on_surface(&euclid, &imm, path, 64, 1.0)?;
    let beta = CapChain::cone_over(&euclid, |t| imm.fields(&amb, path(t).0, path(t).1).map(|f| f.point), &alpha, 16)?;
    let f = cmc_flux(&euclid, &FluxInput { alpha, beta, h, k: VectorField::Vertical, n: 2 })?;
    checks.push(("flux of a latitude on the round sphere vanishes", f.total.abs() < 1e-6));
    let same = homog3::flux::homology_invariance_check(&euclid, &flux_surface("cylinder", 0.5, 0.0)?.0, &VectorField::Vertical, path_at(0.0), path_at(0.0), 32)?;
    checks.push(("same curve twice has zero flux gap", same.gap == 0.0));
    let sol = SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0);
    let leaf = Immersion::from_chart(|u, v| Ok(GroupPoint::semidirect(u, v, 0.0)), Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0)?;
    checks.push(("leaf of Sol3 has constant Gauss map", cmc::gauss_curve(&sol, &leaf, 16)?.verdict == GaussVerdict::Constant));
    let mut ok = true;
    for (name, pass) in checks {
        ok &= pass;
        writeln!(stdout, "{} {name}", if pass { "PASS" } else { "FAIL" }).map_err(|source| Error::Io { path: "<stdout>".into(), source })?;
    }
    Ok(ok)
}

fn path_at(z: f64) -> impl Fn(f64) -> (f64, f64) + Sync + Copy {
    move |t| (z, 2.0 * PI * t)
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> homog3::Result<i32> {
    match cmd {
        Command::Space { space } => {
            let spec = io::resolve_space(&space.space)?;
            let e = spec.identity();
            let (ric, scal) = frames::ricci(&spec, &e)?;
            let ric = nalgebra::DMatrix::from_iterator(3, 3, ric.iter().copied());
            print_json(
                stdout,
                &json!({
                    "spec": spec,
                    "geometry": format!("{:?}", spec.geometry()),
                    "left_invariant_frame": frames::is_left_invariant(&spec),
                    "ricci_at_identity": mat_rows(&ric),
                    "scalar_curvature": scal,
                    "critical_mean_curvature": cmc::critical_mean_curvature(&spec),
                }),
            )?;
        }
        Command::Expm { a, z } => {
            let v = parse_list(&a, 4, "--A")?;
            let m = expm2(&Matrix2::new(v[0], v[1], v[2], v[3]), z)?;
            let rows: Vec<Vec<Cell>> = (0..2).map(|i| vec![m[(i, 0)].into(), m[(i, 1)].into()]).collect();
            write_out(&None, stdout, &["c1", "c2"], &rows)?;
        }
        Command::Metric { space, point } => {
            let spec = io::resolve_space(&space.space)?;
            let p = parse_list(&point, 3, "--point")?;
            let g = frames::metric_tensor(&spec, &GroupPoint::new(spec.geometry(), Vector3::new(p[0], p[1], p[2])))?;
            let rows: Vec<Vec<Cell>> = (0..3).map(|i| (0..3).map(|j| g[(i, j)].into()).collect()).collect();
            write_out(&None, stdout, &["c1", "c2", "c3"], &rows)?;
        }
        Command::Geodesic { space, from, dir, t, steps, out } => {
            let spec = io::resolve_space(&space.space)?;
            let p = parse_list(&from, 3, "--from")?;
            let d = parse_list(&dir, 3, "--dir")?;
            let v = TangentVector { base: GroupPoint::new(spec.geometry(), Vector3::new(p[0], p[1], p[2])), comps: Vector3::new(d[0], d[1], d[2]) };
            let geo = frames::geodesic(&spec, &v, t, steps)?;
            let rows: Vec<Vec<Cell>> = geo.t.iter().zip(&geo.points).map(|(t, p)| vec![(*t).into(), p.coords.x.into(), p.coords.y.into(), p.coords.z.into()]).collect();
            write_out(&out.out, stdout, &["t", "x", "y", "z"], &rows)?;
        }
        Command::GaussmapSubgroups { lambda, samples, out } => {
            let l = parse_list(&lambda, 3, "--lambda")?;
            let curve = subgroups::upsilon_curve(&[l[0], l[1], l[2]], samples)?;
            let rows: Vec<Vec<Cell>> = curve.iter().map(|(th, g)| vec![(*th).into(), g.x.into(), g.y.into(), g.z.into()]).collect();
            write_out(&out.out, stdout, &["theta", "g1", "g2", "g3"], &rows)?;
        }
        Command::Spectrum { space, surface, h, grid, k, nullity_tol } => {
            let spec = io::resolve_space(&space.space)?;
            if surface != "sphere" {
                return Err(Error::InvalidArgument(format!("unknown surface {surface:?}; only the rotational sphere is built in")));
            }
            let s = cmc::solve_rotational_sphere(&spec, h)?;
            let sp = stability_spectrum(&spec, &s.immersion(parse_grid(&grid)?)?, k, nullity_tol)?;
            print_json(stdout, &json!({ "H": h, "eigenvalues": sp.eigenvalues, "index": sp.index, "nullity": sp.nullity, "nullity_tol": sp.nullity_tol }))?;
        }
        Command::Sphere { space, h, samples, out } => {
            let spec = io::resolve_space(&space.space)?;
            let s = cmc::solve_rotational_sphere(&spec, h)?;
            s.require_closed()?;
            if let Some(path) = &out.out {
                let rows = (0..=samples)
                    .map(|i| {
                        let st = s.profile.state(s.length * i as f64 / samples.max(1) as f64)?;
                        Ok(vec![st.s.into(), st.x.into(), st.y.into(), st.phi.into(), st.kappa.into()])
                    })
                    .collect::<homog3::Result<Vec<Vec<Cell>>>>()?;
                io::emit_table(&["s", "x", "y", "phi", "kappa"], &rows, path)?;
            }
            print_json(
                stdout,
                &json!({
                    "H": h, "closed": s.closed, "area": s.area, "length": s.length,
                    "closure_residual": s.closure_residual,
                    "poles": [s.poles[0].coords.as_slice(), s.poles[1].coords.as_slice()],
                }),
            )?;
        }
        Command::Sweep { space, h, out } => {
            let spec = io::resolve_space(&space.space)?;
            let rows = cmc::area_sweep(&spec, &parse_range(&h)?)?;
            let rows: Vec<Vec<Cell>> = rows.iter().map(|r| vec![r.h.into(), r.closed.into(), r.area.into(), r.closure_residual.into()]).collect();
            write_out(&out.out, stdout, &["H", "closed", "area", "closure_residual"], &rows)?;
        }
        Command::GaussCurve { space, h, orientation, x_range, samples, out } => {
            let spec = io::resolve_space(&space)?;
            let xr = parse_range(&x_range)?;
            let (x0, x1) = (xr[0], *xr.last().unwrap());
            let k = VectorField::RightInvariant(LieVector::new(0.0, 0.0, 1.0));
            let l = cmc::symmetric_loop(&spec, &k, h, &Slice::horizontal(), orientation, (x0, x1.max(x0)))?;
            let imm = cmc::killing_cylinder(&l.profile, (0.0, 1.0), (8, 64))?;
            let g = cmc::gauss_curve(&spec, &imm, samples)?;
            let rows: Vec<Vec<Cell>> = g.s.iter().zip(&g.points).map(|(s, p)| vec![(*s).into(), p.x.into(), p.y.into(), p.z.into()]).collect();
            let summary = json!({
                "H": h, "x0": l.x0, "period": l.period, "profile_closure_gap": l.closure_gap,
                "verdict": format!("{:?}", g.verdict), "closure_gap": g.closure_gap,
                "min_speed": g.min_speed, "separation": g.separation,
            });
            match &out.out {
                Some(p) => {
                    io::emit_table(&["s", "g1", "g2", "g3"], &rows, p)?;
                    print_json(stdout, &summary)?;
                }
                None => write_out(&None, stdout, &["s", "g1", "g2", "g3"], &rows)?,
            }
        }
        Command::Flux { space, surface, h, k, height, segments } => {
            let spec = io::resolve_space(&space.space)?;
            let k = parse_killing(&k)?;
            let (imm, h) = flux_surface(&surface, h, height)?;
            let at = if surface == "plane" { 1.0 } else if surface == "sphere" { if height == 0.0 { 1.0 } else { height } } else { height };
            let path = move |t: f64| (at, 2.0 * PI * t);
            let amb = Ambient::new(&spec)?;
            let alpha = CurveChain::on_surface(&spec, &imm, path, segments, 1.0)?;
            let beta = CapChain::cone_over(&spec, |t| imm.fields(&amb, path(t).0, path(t).1).map(|f| f.point), &alpha, (segments / 4).max(4))?;
            let f = cmc_flux(&spec, &FluxInput { alpha, beta, h, k, n: 2 })?;
            print_json(stdout, &json!({ "line": f.line, "cap": f.cap, "total": f.total }))?;
        }
        Command::Selftest => {
            return Ok(if selftest(stdout)? { EXIT_OK } else { EXIT_NUMERICAL });
        }
    }
    Ok(EXIT_OK)
}

/// Cap the global rayon pool from `HOMOG3_THREADS`.
fn init_threads() {
    if let Some(n) = std::env::var("HOMOG3_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn error_json(e: &Error) -> String {
    json!({ "kind": e.kind(), "message": e.to_string() }).to_string()
}

/// Run with explicit streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_threads();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
