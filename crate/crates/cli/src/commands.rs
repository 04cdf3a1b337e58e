use std::path::{Path, PathBuf};

use arithdyn::greenc::{
    energy_partial_sum, finite_evidence_stability, green_partial, mu_grid_k2, CProjPoint, ComplexPair,
    EnergyMethod, EnergyOptions, EnergySide, GridMeasure, GridOptions, NormKind,
};
use arithdyn::heights::{
    canonical_height, hprime_recursion_check, lee_scan, naive_height, sample_orbit_points, HeightDirection,
    HeightEstimate,
};
use arithdyn::mapfile::{parse_rational, read_json, HenonConfig, HenonParams, MapSpec};
use arithdyn::padic::{certify_stability_henon_a, certify_sweep, zariski_density_check};
use arithdyn::periodic::{
    default_starts, equidist_report, fixed_points_exact_henon, line_mass, periodic_points_numeric,
    rational_periodic_points, NewtonOptions, PeriodicPointSet,
};
use arithdyn::projcore::{degree_sequence, validate_pair_seeded, BirationalPair, DegreeOptions, Direction, RatProjPoint};
use num_complex::Complex64;
use serde::Serialize;

use crate::failure::{Failure, EXIT_NUMERIC, EXIT_VALIDATION};
use crate::manifest::Artifacts;
use crate::*;

struct Ctx<'a> {
    global: &'a GlobalArgs,
    inputs: Vec<PathBuf>,
    artifacts: Artifacts,
}

impl Ctx<'_> {
    fn map_path(&mut self) -> Result<PathBuf, Failure> {
        let path = self
            .global
            .map
            .clone()
            .ok_or_else(|| Failure::usage("this subcommand needs --map FILE"))?;
        self.inputs.push(path.clone());
        Ok(path)
    }

    fn spec(&mut self) -> Result<MapSpec, Failure> {
        Ok(MapSpec::read(&self.map_path()?)?)
    }

    fn pair(&mut self) -> Result<BirationalPair, Failure> {
        Ok(self.spec()?.to_pair()?)
    }

    fn complex_pair(&mut self) -> Result<ComplexPair, Failure> {
        Ok(ComplexPair::from_spec(&self.spec()?)?)
    }

    fn henon(&mut self) -> Result<HenonParams, Failure> {
        let cfg: HenonConfig = read_json(&self.map_path()?)?;
        Ok(cfg.parse()?)
    }

    /// Record a JSON artifact and return it as stdout text.
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> String {
        self.artifacts.add_json(name, value);
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        text
    }

    fn done(self, stdout: String) -> Outcome {
        self.finish(stdout, 0)
    }

    fn finish(self, stdout: String, code: i32) -> Outcome {
        Outcome {
            stdout,
            artifacts: self.artifacts,
            inputs: self.inputs,
            code,
        }
    }
}

pub fn dispatch(global: &GlobalArgs, command: &Command) -> Result<Outcome, Failure> {
    let mut ctx = Ctx {
        global,
        inputs: Vec::new(),
        artifacts: Artifacts::new(),
    };
    match command {
        Command::Validate(_) => validate(ctx),
        Command::Degrees(a) => degrees(ctx, a),
        Command::Certify(a) => certify(ctx, a),
        Command::Density(a) => density(ctx, a),
        Command::Height(a) => {
            let point = RatProjPoint::parse(&a.point)?;
            #[derive(Serialize)]
            struct Height {
                point: String,
                naive_height: f64,
            }
            let out = ctx.json(
                "height.json",
                &Height {
                    point: point.to_string(),
                    naive_height: naive_height(&point),
                },
            );
            Ok(ctx.done(out))
        }
        Command::Hcanonical(a) => hcanonical(ctx, a),
        Command::Lee(a) => {
            let pair = ctx.pair()?;
            let report = lee_scan(&pair, a.count, a.bound, global.seed)?;
            ctx.artifacts.add("lee.csv", report.to_csv());
            let out = ctx.json("lee.json", &report);
            Ok(ctx.done(out))
        }
        Command::Hprime(a) => hprime(ctx, a),
        Command::Green(a) => green(ctx, a),
        Command::Energy(a) => energy(ctx, a),
        Command::Mugrid(a) => mugrid(ctx, a),
        Command::Periodic(a) => periodic(ctx, a),
        Command::Equidist(a) => equidist(ctx, a),
    }
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Forward => Direction::Forward,
        DirectionArg::Backward => Direction::Backward,
    }
}

fn validate(mut ctx: Ctx) -> Result<Outcome, Failure> {
    let pair = ctx.pair()?;
    let report = validate_pair_seeded(&pair, ctx.global.seed);
    let out = ctx.json("validation.json", &report);
    if report.all_pass() {
        Ok(ctx.done(out))
    } else {
        eprintln!("error: the pair fails validation");
        Ok(ctx.finish(out, EXIT_VALIDATION))
    }
}

fn degrees(mut ctx: Ctx, a: &DegreesArgs) -> Result<Outcome, Failure> {
    let pair = ctx.pair()?;
    let opts = DegreeOptions {
        trials: a.trials,
        seed: ctx.global.seed,
        ..DegreeOptions::default()
    };
    let steps = degree_sequence(&pair, direction(a.direction), a.max_n, &opts)?;
    let mut csv = String::from("n,degree\n");
    for s in &steps {
        csv.push_str(&format!("{},{}\n", s.n, s.degree));
    }
    ctx.artifacts.add("degrees.csv", csv.clone());
    ctx.artifacts.add_json("degrees.json", &steps);
    Ok(ctx.done(csv))
}

fn certify(mut ctx: Ctx, a: &CertifyArgs) -> Result<Outcome, Failure> {
    if a.sweep {
        let path = ctx.map_path()?;
        let configs: Vec<HenonConfig> = read_json(&path)?;
        let params = configs
            .iter()
            .map(|c| {
                let mut p = c.parse()?;
                p.prime = a.prime.or(p.prime);
                Ok(p)
            })
            .collect::<arithdyn::Result<Vec<_>>>()?;
        #[derive(Serialize)]
        struct Entry {
            index: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            certificate: Option<arithdyn::padic::StabilityCertificate>,
            #[serde(skip_serializing_if = "Option::is_none")]
            error: Option<String>,
        }
        let entries: Vec<Entry> = certify_sweep(&params, a.sanity_n)
            .into_iter()
            .enumerate()
            .map(|(index, r)| match r {
                Ok(c) => Entry {
                    index,
                    certificate: Some(c),
                    error: None,
                },
                Err(e) => Entry {
                    index,
                    certificate: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let out = ctx.json("certificates.json", &entries);
        return Ok(ctx.done(out));
    }
    let h = ctx.henon()?;
    let p = a
        .prime
        .or(h.prime)
        .ok_or_else(|| Failure::usage("no prime: pass --prime or set \"prime\" in the configuration"))?;
    let cert = certify_stability_henon_a(&h.a, &h.b, &h.a_inverse, p, a.sanity_n)?;
    let out = ctx.json("certificate.json", &cert);
    Ok(ctx.done(out))
}

fn density(mut ctx: Ctx, a: &DensityArgs) -> Result<Outcome, Failure> {
    let h = ctx.henon()?;
    let p = a
        .prime
        .or(h.prime)
        .ok_or_else(|| Failure::usage("no prime: pass --prime or set \"prime\" in the configuration"))?;
    let report = zariski_density_check(&h.a, &h.b, &h.a_inverse, p, a.n, None)?;
    let out = ctx.json("zariski.json", &report);
    Ok(ctx.done(out))
}

fn hcanonical(mut ctx: Ctx, a: &HcanonicalArgs) -> Result<Outcome, Failure> {
    let pair = ctx.pair()?;
    let point = RatProjPoint::parse(&a.point)?;
    let sides: &[HeightDirection] = match a.side {
        HeightSideArg::Plus => &[HeightDirection::Plus],
        HeightSideArg::Minus => &[HeightDirection::Minus],
        HeightSideArg::Both => &[HeightDirection::Plus, HeightDirection::Minus],
    };
    let estimates = sides
        .iter()
        .map(|&d| canonical_height(&pair, &point, d, a.n))
        .collect::<arithdyn::Result<Vec<HeightEstimate>>>()?;
    let out = ctx.json("hcanonical.json", &estimates);
    Ok(ctx.done(out))
}

fn hprime(mut ctx: Ctx, a: &HprimeArgs) -> Result<Outcome, Failure> {
    let pair = ctx.pair()?;
    let seed = ctx.global.seed;
    let (c, c_source) = match a.c {
        Some(c) => (c, "argument"),
        None => (lee_scan(&pair, a.lee_count, a.bound, seed)?.estimated_c, "lee-scan"),
    };
    let points = sample_orbit_points(&pair, a.count, a.bound, a.n, seed);
    let reports = points
        .iter()
        .map(|x| hprime_recursion_check(&pair, x, a.n, c))
        .collect::<arithdyn::Result<Vec<_>>>()?;
    #[derive(Serialize)]
    struct Summary<'a> {
        c: f64,
        c_source: &'a str,
        points: usize,
        all_pass: bool,
        reports: Vec<arithdyn::heights::HPrimeReport>,
    }
    let all_pass = reports.iter().all(|r| r.all_pass);
    let out = ctx.json(
        "hprime.json",
        &Summary {
            c,
            c_source,
            points: reports.len(),
            all_pass,
            reports,
        },
    );
    Ok(ctx.done(out))
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::usage(format!("{what}: not a finite number: {s:?}")))
        })
        .collect()
}

fn green(mut ctx: Ctx, a: &GreenArgs) -> Result<Outcome, Failure> {
    let pair = ctx.complex_pair()?;
    let re = parse_floats(&a.point, "--point")?;
    let im = match &a.point_im {
        Some(t) => parse_floats(t, "--point-im")?,
        None => vec![0.0; re.len()],
    };
    if im.len() != re.len() {
        return Err(Failure::usage("--point and --point-im have different lengths"));
    }
    let x = CProjPoint::new(re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect())?;
    let f = match a.direction {
        DirectionArg::Forward => &pair.forward,
        DirectionArg::Backward => &pair.backward,
    };
    if x.len() != f.nvars() {
        return Err(arithdyn::Error::DimensionMismatch {
            expected: f.nvars(),
            got: x.len(),
        }
        .into());
    }
    let series = green_partial(f, &x, a.n)?;
    #[derive(Serialize)]
    struct Green<'a> {
        point: &'a CProjPoint,
        n: usize,
        lift_bound_constant: f64,
        series: arithdyn::greenc::GreenSeries,
    }
    let out = ctx.json(
        "green.json",
        &Green {
            point: &x,
            n: a.n,
            lift_bound_constant: f.lift_bound_constant(),
            series,
        },
    );
    Ok(ctx.done(out))
}

fn energy(mut ctx: Ctx, a: &EnergyArgs) -> Result<Outcome, Failure> {
    let pair = ctx.complex_pair()?;
    let method = match a.method {
        MethodArg::PointOrbitExact => EnergyMethod::PointOrbitExact,
        MethodArg::DistanceProxy => EnergyMethod::DistanceProxy,
        MethodArg::MonteCarlo => EnergyMethod::MonteCarlo,
    };
    let sides: &[EnergySide] = match a.side {
        SideArg::Forward => &[EnergySide::Forward],
        SideArg::Backward => &[EnergySide::Backward],
        SideArg::Both => &[EnergySide::Forward, EnergySide::Backward],
    };
    let opts = EnergyOptions {
        samples: a.samples,
        seed: ctx.global.seed,
    };
    let series = sides
        .iter()
        .map(|&side| energy_partial_sum(&pair, a.n, side, method, &opts))
        .collect::<arithdyn::Result<Vec<_>>>()?;
    for s in &series {
        let name = match s.side {
            EnergySide::Forward => "energy_forward.csv",
            EnergySide::Backward => "energy_backward.csv",
        };
        ctx.artifacts.add(name, s.to_csv());
    }
    let point_loci = pair.ind_forward.dim == 0 && pair.ind_backward.dim == 0;
    let stability = if point_loci {
        Some(finite_evidence_stability(&pair, a.n, a.stability_tol)?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Energy {
        stability: Option<arithdyn::greenc::StabilityEvidence>,
        series: Vec<arithdyn::greenc::EnergySeries>,
    }
    let out = ctx.json("energy.json", &Energy { stability, series });
    Ok(ctx.done(out))
}

fn parse_bounds(text: &str) -> Result<[[f64; 2]; 4], Failure> {
    let v = parse_floats(text, "--box")?;
    match v.len() {
        2 => Ok([[v[0], v[1]]; 4]),
        8 => Ok([[v[0], v[1]], [v[2], v[3]], [v[4], v[5]], [v[6], v[7]]]),
        n => Err(Failure::usage(format!("--box takes 2 or 8 numbers, got {n}"))),
    }
}

fn mugrid(mut ctx: Ctx, a: &MugridArgs) -> Result<Outcome, Failure> {
    let pair = ctx.complex_pair()?;
    let bounds = parse_bounds(&a.bounds)?;
    let opts = GridOptions {
        norm: match a.norm {
            NormArg::Euclidean => NormKind::Euclidean,
            NormArg::Sup => NormKind::Sup,
        },
        max_cells: a.max_cells,
    };
    let grid = mu_grid_k2(&pair, a.n, bounds, a.resolution, &opts)?;
    ctx.artifacts.add("grid.bin", grid.to_le_bytes());
    ctx.artifacts.add("grid_marginal.csv", grid.marginal_csv());
    let out = ctx.json("grid.json", &grid);
    Ok(ctx.done(out))
}

fn periodic(mut ctx: Ctx, a: &PeriodicArgs) -> Result<Outcome, Failure> {
    let spec = ctx.spec()?;
    let pair = ComplexPair::from_spec(&spec)?;
    let opts = NewtonOptions {
        tol: a.tol,
        box_radius: a.box_radius,
        max_steps: a.max_steps,
        ..NewtonOptions::default()
    };
    let starts = a.starts.unwrap_or_else(|| default_starts(pair.forward.degree(), a.n));
    let mut set = periodic_points_numeric(&pair, a.n, starts, ctx.global.seed, &opts)?;
    if let Some(ab) = &a.exact_henon {
        let parts: Vec<&str> = ab.split(',').collect();
        if parts.len() != 2 {
            return Err(Failure::usage("--exact-henon takes \"a,b\""));
        }
        set.exact_points = Some(fixed_points_exact_henon(&parse_rational(parts[0])?, &parse_rational(parts[1])?)?);
    }
    let mut csv = String::from("re_x,im_x,re_y,im_y,least_period,saddle,residual\n");
    for p in &set.points {
        let [x, y] = p.affine;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:e}\n",
            x.re, x.im, y.re, y.im, p.least_period, p.saddle, p.residual
        ));
    }
    ctx.artifacts.add("periodic.csv", csv);
    if !spec.is_complex() {
        let exact = spec.to_pair()?;
        #[derive(Serialize)]
        struct RationalPoint {
            point: String,
            heights: Vec<HeightEstimate>,
        }
        let rational = rational_periodic_points(&exact, &set, a.max_den)
            .into_iter()
            .map(|x| {
                let heights = [HeightDirection::Plus, HeightDirection::Minus]
                    .into_iter()
                    .map(|d| canonical_height(&exact, &x, d, 12))
                    .collect::<arithdyn::Result<Vec<_>>>()?;
                Ok(RationalPoint {
                    point: x.to_string(),
                    heights,
                })
            })
            .collect::<arithdyn::Result<Vec<_>>>()?;
        ctx.artifacts.add_json("periodic_rational.json", &rational);
    }
    let out = ctx.json("periodic.json", &set);
    if set.is_empty() {
        eprintln!("error: no periodic points converged");
        return Ok(ctx.finish(out, EXIT_NUMERIC));
    }
    Ok(ctx.done(out))
}

fn read_grid(path: &Path) -> Result<(GridMeasure, PathBuf), Failure> {
    let grid: GridMeasure = read_json(path)?;
    let bin = path.with_extension("bin");
    let bytes = std::fs::read(&bin).map_err(|e| Failure::io(&bin, e))?;
    Ok((grid.with_cells_from_le_bytes(&bytes)?, bin))
}

fn equidist(mut ctx: Ctx, a: &EquidistArgs) -> Result<Outcome, Failure> {
    let mut sets = Vec::with_capacity(a.sets.len());
    for path in &a.sets {
        let set: PeriodicPointSet = read_json(path)?;
        ctx.inputs.push(path.clone());
        sets.push(set);
    }
    let grid = match &a.grid {
        Some(path) => {
            let (g, bin) = read_grid(path)?;
            ctx.inputs.push(path.clone());
            ctx.inputs.push(bin);
            Some(g)
        }
        None => None,
    };
    let report = equidist_report(&sets, grid.as_ref(), a.box_half_width)?;
    let p = CProjPoint::from_real(&[1.0, 0.0, 0.0])?;
    let q = CProjPoint::from_real(&[0.0, 1.0, 0.0])?;
    let line_mass_at_infinity = sets
        .iter()
        .map(|s| line_mass(s, &p, &q, a.eps))
        .collect::<arithdyn::Result<Vec<_>>>()?;
    ctx.artifacts.add("equidist.csv", report.to_csv());
    #[derive(Serialize)]
    struct Equidist {
        periods: Vec<usize>,
        eps: f64,
        line_mass_at_infinity: Vec<f64>,
        report: arithdyn::periodic::DiscrepancyReport,
    }
    let out = ctx.json(
        "equidist.json",
        &Equidist {
            periods: sets.iter().map(|s| s.period).collect(),
            eps: a.eps,
            line_mass_at_infinity,
            report,
        },
    );
    Ok(ctx.done(out))
}
