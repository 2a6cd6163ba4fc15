//! Command-line front end: parse the text formats, dispatch one verification
//! operation, and report verdicts. Exit codes: 0 every verdict true, 1 some
//! verdict false or vacuous, 2 malformed input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use veralg_core::algebra::Kind;
use veralg_core::baer;
use veralg_core::diagrams::{self, Flavor, ForkSide, Variant};
use veralg_core::error::{Error, Result};
use veralg_core::points::{self, ClassProperty, Point, SigmaClass};
use veralg_core::report::{Report, VerdictValue};
use veralg_core::textio;

#[derive(Parser)]
#[command(name = "veralg", version, about = "Finite-algebra verification engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write machine-readable records to this file (verdict commands) or
    /// bundles into this directory (search/direction/baer-sum/push-forward).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for enumeration-backed commands.
    #[arg(long, global = true, default_value_t = 4)]
    jobs: usize,
    /// Recorded in reproducible outputs; enumeration itself is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClassArg {
    /// Point class: schreier | weakly-schreier | puncturing | acupuncturing.
    #[arg(long)]
    class: String,
}

impl ClassArg {
    fn parse(&self) -> Result<SigmaClass> {
        SigmaClass::parse(&self.class)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("unknown class `{}`", self.class) })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate an .alg file against its kind's axioms.
    Validate { file: PathBuf },
    /// Classify a point (epi map + section map) in a class.
    ClassifyPoint {
        #[command(flatten)]
        class: ClassArg,
        f: PathBuf,
        s: PathBuf,
    },
    /// Decide Sigma-specialness of a morphism (.map) or an object (.alg with --object).
    Special {
        #[command(flatten)]
        class: ClassArg,
        /// Treat the input as an object and test its terminal map.
        #[arg(long)]
        object: bool,
        file: PathBuf,
    },
    /// Check a commuting square of surjections for being a regular pushout.
    RegularPushout { f: PathBuf, x: PathBuf, fp: PathBuf, y: PathBuf },
    /// Check a kernel-inclusion / epi pair for exactness (and Sigma-exactness).
    CheckSeq {
        k: PathBuf,
        f: PathBuf,
        #[arg(long)]
        class: Option<String>,
    },
    /// Check a fork (two legs and a coequalizing map) for exactness.
    CheckFork {
        d0: PathBuf,
        d1: PathBuf,
        f: PathBuf,
        /// left | right | both
        #[arg(long, default_value = "both")]
        side: String,
    },
    /// Verify a lemma variant on a 3x3 bundle.
    Check3x3 {
        bundle: PathBuf,
        #[arg(long)]
        variant: String,
        /// Must match the bundle's flavor when given.
        #[arg(long)]
        flavor: Option<String>,
        #[command(flatten)]
        class: ClassArg,
    },
    /// Stream counterexample candidates for a lemma variant with dropped hypotheses.
    Search {
        /// monoid | semiring | quandle
        #[arg(long, default_value = "monoid")]
        kind: String,
        #[arg(long)]
        flavor: String,
        #[arg(long)]
        variant: String,
        #[command(flatten)]
        class: ClassArg,
        /// Hypothesis to waive; repeatable.
        #[arg(long)]
        drop: Vec<String>,
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
    /// Probe a class-level property over exhaustively enumerated instances.
    Probe {
        /// two-regular | equi-consistent | limit-closure
        #[arg(long)]
        property: String,
        #[command(flatten)]
        class: ClassArg,
        #[arg(long, default_value = "monoid")]
        kind: String,
        #[arg(long, default_value_t = 3)]
        max_order: usize,
    },
    /// Compute the direction of an extension bundle.
    Direction { ext: PathBuf },
    /// Baer sum of two extensions over the same base with identified directions.
    BaerSum { e1: PathBuf, e2: PathBuf },
    /// Push an extension forward along a morphism of direction objects.
    PushForward { ext: PathBuf, h: PathBuf, target: PathBuf },
    /// Enumerate and bucket extensions of a base by a kernel.
    ExtClassify {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_order: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render_text());
            if let Some(out) = &cli.out {
                if out.extension().is_some() || !out.is_dir() {
                    if let Err(e) = write_records(out, &report) {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                } else if let Err(e) = write_records(&out.join("report.txt"), &report) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_records(path: &Path, report: &Report) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, report.render_records())?;
    Ok(())
}

fn names_of(alg: &veralg_core::Algebra, elems: &[usize]) -> String {
    elems.iter().map(|&e| alg.name(e)).collect::<Vec<_>>().join(" ")
}

fn run(cli: &Cli) -> Result<Report> {
    let mut report = Report::new();
    if let Some(seed) = cli.seed {
        report.info("seed", seed.to_string());
    }
    match &cli.command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(file)?;
            match textio::parse_algebra(&text) {
                Ok(a) => {
                    report.verdict("valid", true);
                    report.info("kind", a.kind().as_str());
                    report.info("order", a.order().to_string());
                }
                Err(Error::AxiomViolation { axiom, witness }) => {
                    report.verdict("valid", false);
                    report.witness(
                        "axiom",
                        format!("{} at {:?}", axiom.name(), witness),
                    );
                }
                Err(e) => return Err(e),
            }
        }
        Command::ClassifyPoint { class, f, s } => {
            let class = class.parse()?;
            let (fh, _) = textio::load_map(f)?;
            let (sh, _) = textio::load_map(s)?;
            let point = Point::new(fh, sh)?;
            let cls = points::classify(&point, class)?;
            report.verdict(&format!("in-class {}", class.as_str()), cls.in_class);
            if let Some(v) = &cls.violation {
                report.witness(
                    "mu",
                    format!(
                        "fiber over {}: images {}",
                        point.base().name(v.base),
                        names_of(point.total(), &v.image)
                    ),
                );
            }
            if let Some(q) = &cls.retraction {
                report.info("retraction", names_of(point.total(), q));
            }
        }
        Command::Special { class, object, file } => {
            let class = class.parse()?;
            if *object {
                let a = textio::load_algebra(file)?;
                let special = points::sigma_special_object(&a, class)?;
                report.verdict(&format!("object-special {}", class.as_str()), special);
            } else {
                let (fh, _) = textio::load_map(file)?;
                let cls = points::sigma_special(&fh, class)?;
                report.verdict(&format!("special {}", class.as_str()), cls.in_class);
                if let Some(v) = &cls.violation {
                    report.witness("mu", format!("kernel-pair fiber over index {}", v.base));
                }
            }
        }
        Command::RegularPushout { f, x, fp, y } => {
            let (fh, _) = textio::load_map(f)?;
            let (xh, _) = textio::load_map(x)?;
            let (fph, _) = textio::load_map(fp)?;
            let (yh, _) = textio::load_map(y)?;
            let rep = points::regular_pushout(&fh, &xh, &fph, &yh)?;
            report.verdict("regular-pushout", rep.regular);
            if let Some((b, xp)) = rep.missing {
                report.witness(
                    "unreached",
                    format!("({}, {})", fh.cod.name(b), xh.cod.name(xp)),
                );
            }
            report.verdict("R(x) surjective", rep.rx_surjective);
            report.verdict("R(f) surjective", rep.rf_surjective);
        }
        Command::CheckSeq { k, f, class } => {
            let class = match class {
                Some(c) => Some(SigmaClass::parse(c).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unknown class `{c}`"),
                })?),
                None => None,
            };
            let (kh, _) = textio::load_map(k)?;
            let (fh, _) = textio::load_map(f)?;
            let v = diagrams::check_exact_sequence(&kh, &fh, class)?;
            report.verdict("kernel-matches", v.kernel_matches);
            report.verdict("epi-surjective", v.surjective);
            report.verdict("is-cokernel", v.is_cokernel);
            if let Some(sp) = v.special {
                report.verdict("epi-special", sp);
            }
        }
        Command::CheckFork { d0, d1, f, side } => {
            let side = match side.as_str() {
                "left" => ForkSide::Left,
                "right" => ForkSide::Right,
                "both" => ForkSide::Both,
                other => {
                    return Err(Error::Parse { line: 0, msg: format!("unknown side `{other}`") })
                }
            };
            let (d0h, _) = textio::load_map(d0)?;
            let (d1h, _) = textio::load_map(d1)?;
            let (fh, _) = textio::load_map(f)?;
            let fork = diagrams::Fork::new(d0h, d1h, fh)?;
            let v = diagrams::check_fork(&fork, side)?;
            if let Some(l) = v.left {
                report.verdict("left-exact", l);
            }
            if let Some(r) = v.right {
                report.verdict("right-exact", r);
            }
        }
        Command::Check3x3 { bundle, variant, flavor, class } => {
            let class = class.parse()?;
            let variant = Variant::parse(variant).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown variant `{variant}`"),
            })?;
            let grid = textio::load_grid(bundle)?;
            if let Some(fl) = flavor {
                let fl = Flavor::parse(fl).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unknown flavor `{fl}`"),
                })?;
                if fl != grid.flavor() {
                    return Err(Error::Shape(format!(
                        "bundle is {}, requested {}",
                        grid.flavor().as_str(),
                        fl.as_str()
                    )));
                }
            }
            let verdict = diagrams::verify_lemma(&grid, variant, class)?;
            for h in &verdict.hypotheses {
                report.info(
                    &format!("hypothesis {}", h.name),
                    format!("{}{}", h.holds, if h.required { "" } else { " (optional)" }),
                );
            }
            match verdict.conclusion {
                Some(ok) => report.verdict("conclusion", ok),
                None => report.verdict_value("conclusion", VerdictValue::Vacuous),
            }
            if let Some(w) = &verdict.witness {
                report.witness("conclusion", w.clone());
            }
        }
        Command::Search { kind, flavor, variant, class, drop, max_order } => {
            let cfg = diagrams::SearchConfig {
                kind: parse_kind(kind)?,
                flavor: Flavor::parse(flavor).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unknown flavor `{flavor}`"),
                })?,
                variant: Variant::parse(variant).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unknown variant `{variant}`"),
                })?,
                class: class.parse()?,
                drop: drop.clone(),
                max_order: *max_order,
                jobs: cli.jobs,
            };
            for d in drop {
                if !diagrams::HYPOTHESIS_NAMES.contains(&d.as_str()) {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("unknown hypothesis `{d}`"),
                    });
                }
            }
            let outcome = diagrams::search(&cfg)?;
            report.info("candidates", outcome.candidates.to_string());
            report.info("admissible", outcome.admissible.to_string());
            report.verdict("no-counterexamples", outcome.hits.is_empty());
            for hit in &outcome.hits {
                report.witness(&format!("hit {}", hit.index), hit.descriptor.clone());
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let mut index = String::new();
                index.push_str(&format!(
                    "search kind={} flavor={} variant={} class={} max-order={} drop={}\n",
                    cfg.kind.as_str(),
                    cfg.flavor.as_str(),
                    cfg.variant.as_str(),
                    cfg.class.as_str(),
                    cfg.max_order,
                    cfg.drop.join(",")
                ));
                if let Some(seed) = cli.seed {
                    index.push_str(&format!("seed {seed}\n"));
                }
                for hit in &outcome.hits {
                    textio::write_grid(dir, &format!("hit-{}", hit.index), &hit.grid)?;
                    index.push_str(&format!("hit {} {}\n", hit.index, hit.descriptor));
                }
                index.push_str(&format!(
                    "candidates {}\nadmissible {}\nhits {}\n",
                    outcome.candidates,
                    outcome.admissible,
                    outcome.hits.len()
                ));
                std::fs::write(dir.join("index.txt"), index)?;
            }
        }
        Command::Probe { property, class, kind, max_order } => {
            let class = class.parse()?;
            let kind = parse_kind(kind)?;
            let property = ClassProperty::parse(property).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown property `{property}`"),
            })?;
            let summary = match property {
                ClassProperty::TwoRegular => {
                    points::probe_two_regular_exhaustive(kind, class, *max_order)?
                }
                ClassProperty::EquiConsistent => {
                    points::probe_equi_consistent_exhaustive(kind, class, *max_order)?
                }
                ClassProperty::LimitClosure => {
                    points::probe_limit_closure_exhaustive(kind, class, *max_order)?
                }
            };
            report.info("instances", summary.instances.to_string());
            report.info("non-vacuous", summary.non_vacuous.to_string());
            report.verdict("no-violations", summary.violations == 0);
        }
        Command::Direction { ext } => {
            let (_, f) = textio::load_ext(ext)?;
            let e = baer::direct_extension(&f)?;
            report.verdict("direction-computed", true);
            report.info("kernel-order", e.dir.object.kernel.order().to_string());
            report.info("total-order", e.dir.object.total.order().to_string());
            let trivial = e
                .dir
                .object
                .base
                .elements()
                .all(|y| e.dir.object.kernel.elements().all(|a| e.dir.object.action[y][a] == a));
            report.info("action-trivial", trivial.to_string());
            if let Some(dir) = &cli.out {
                let p = textio::write_dir(dir, "direction", &e.dir.object)?;
                report.info("written", p.display().to_string());
            }
        }
        Command::BaerSum { e1, e2 } => {
            let (_, f1) = textio::load_ext(e1)?;
            let (_, f2) = textio::load_ext(e2)?;
            let d1 = baer::direct_extension(&f1)?;
            let d2 = baer::direct_extension(&f2)?;
            let idents = baer::identify(&d1.dir.object, &d2.dir.object);
            let ident = idents.first().ok_or(Error::DirectionMismatch)?;
            let sum = baer::baer_sum(&d1, &d2, ident)?;
            report.verdict("baer-sum-computed", true);
            report.info("total-order", sum.ext.total().order().to_string());
            if let Some(dir) = &cli.out {
                let p = textio::write_ext(dir, "sum", &sum.ext.kernel_incl, &sum.ext.f)?;
                report.info("written", p.display().to_string());
            }
        }
        Command::PushForward { ext, h, target } => {
            let (_, f) = textio::load_ext(ext)?;
            let e = baer::direct_extension(&f)?;
            let loaded = textio::load_dir(target)?;
            let b = loaded.action.object.clone();
            let (h_total, _) = textio::load_map(h)?;
            if h_total.dom != e.dir.object.total || h_total.cod != loaded.point.f.dom {
                return Err(Error::Shape(
                    "h must map the direction total of the extension into the target total".into(),
                ));
            }
            // h must commute with projections and sections.
            for (i, &(_, y)) in e.dir.object.pairs.iter().enumerate() {
                if loaded.point.f.apply(h_total.apply(i)) != y {
                    return Err(Error::NotEquivariant(y, i));
                }
            }
            for y in e.dir.object.base.elements() {
                if h_total.apply(e.dir.object.point.s.apply(y)) != loaded.point.s.apply(y) {
                    return Err(Error::NotEquivariant(y, 0));
                }
            }
            // Kernel map through the chart back from stored elements.
            let kmap = veralg_core::Hom::new(
                e.dir.object.kernel.clone(),
                b.kernel.clone(),
                e.dir
                    .object
                    .kernel
                    .elements()
                    .map(|a| {
                        let total_idx = e.dir.object.index(a, e.dir.object.base.unit());
                        let t = h_total.apply(total_idx);
                        loaded
                            .action
                            .chart
                            .iter()
                            .position(|&c| c == t)
                            .ok_or_else(|| {
                                Error::Shape("h does not carry kernels to kernels".into())
                            })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let hm = baer::direction_morphism(e.dir.object.clone(), b, kmap)?;
            let pushed = baer::push_forward(&e, &hm)?;
            report.verdict("push-forward-computed", true);
            report.info("total-order", pushed.ext.total().order().to_string());
            if let Some(dir) = &cli.out {
                let p = textio::write_ext(dir, "pushed", &pushed.ext.kernel_incl, &pushed.ext.f)?;
                report.info("written", p.display().to_string());
            }
        }
        Command::ExtClassify { base, kernel, max_order } => {
            let b = textio::load_algebra(base)?;
            let k = textio::load_algebra(kernel)?;
            let classes = baer::ext_classify(&b, &k, *max_order)?;
            report.info("classes", classes.len().to_string());
            for (i, c) in classes.iter().enumerate() {
                report.info(
                    &format!("class {i}"),
                    format!(
                        "total-order {} members {}",
                        c.representative.ext.total().order(),
                        c.members.len()
                    ),
                );
            }
            report.verdict("classified", true);
        }
    }
    Ok(report)
}

fn parse_kind(s: &str) -> Result<Kind> {
    Kind::parse(s).ok_or_else(|| Error::Parse { line: 0, msg: format!("unknown kind `{s}`") })
}
