//! Pipeline stages and the JSON documents they dump.

use darktraj_core::channel::{self, KrausEnsemble};
use darktraj_core::darkspace::{
    atlas_transitions, discover_maximal_dark, estimate_chi_inv, s_of_n, DarkAtlas, EmpiricalDarkMeasure,
    SMode, MAX_EXHAUSTIVE_WORDS,
};
use darktraj_core::family::{
    build_smart_family, check_smart, classify_transitivity, family_generators, group_closure,
    invariance_residual, sample_ergodic_measure, ErgodicSampleSet, GroupKind, InvarianceResidual,
    IsometryFamily, Transitivity, UnitaryGroupClosure, WordBudget,
};
use darktraj_core::measures::{bloch_in_subspaces, cesaro_convergence_curve, linear_fit, LinearFit};
use darktraj_core::rng::{random_ray, stream};
use darktraj_core::trajectory::{mean_darkness_gap_curve, State};
use darktraj_core::{CVector, Ray, Subspace, C64};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, StageExt};
use crate::format::{matrix_from_doc, matrix_to_doc, EnsembleDoc, MatrixDoc, SubspaceDoc, Table};

/// Stream offset for the default base ray, kept apart from stage streams.
const BASE_RAY_STREAM: u64 = 0xba5e;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateReport {
    pub dim: usize,
    pub items: usize,
    pub stochasticity_residual: f64,
    pub stochastic: bool,
    pub irreducible: Option<bool>,
    pub rank_ambiguous: Option<bool>,
    pub fixed_point_multiplicity: Option<usize>,
    pub min_fixed_point_eigenvalue: Option<f64>,
    pub period: Option<usize>,
    pub spectral_gap: Option<f64>,
    pub fixed_point: Option<MatrixDoc>,
}

/// Channel analysis; the spectral part is skipped when stochasticity fails.
pub fn validate(e: &KrausEnsemble, tolerance: f64) -> Result<ValidateReport, CliError> {
    let residual = e.stochasticity_residual().stage("validate")?;
    let mut report = ValidateReport {
        dim: e.dim(),
        items: e.len(),
        stochasticity_residual: residual,
        stochastic: residual <= tolerance,
        irreducible: None,
        rank_ambiguous: None,
        fixed_point_multiplicity: None,
        min_fixed_point_eigenvalue: None,
        period: None,
        spectral_gap: None,
        fixed_point: None,
    };
    if report.stochastic {
        let a = channel::analyze(e).stage("validate")?;
        report.irreducible = Some(a.is_irreducible);
        report.rank_ambiguous = Some(a.rank_ambiguous);
        report.fixed_point_multiplicity = Some(a.fixed_point_multiplicity);
        report.min_fixed_point_eigenvalue = Some(a.min_fixed_point_eigenvalue);
        report.period = a.period;
        report.spectral_gap = Some(a.spectral_gap);
        report.fixed_point = Some(matrix_to_doc(a.fixed_point.matrix()));
    }
    Ok(report)
}

/// Fails with the stochasticity exit code unless the ensemble passes.
pub fn require_stochastic(e: &KrausEnsemble, tolerance: f64) -> Result<usize, CliError> {
    let residual = e.stochasticity_residual().stage("validate")?;
    if residual > tolerance {
        return Err(CliError::Stochasticity { residual, tolerance });
    }
    let report = channel::analyze(e).stage("validate")?;
    if !report.is_irreducible {
        log::warn!("ensemble is reducible; continuing");
    }
    Ok(report.period.unwrap_or(1))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasDoc {
    pub r_m: usize,
    pub representatives: Vec<SubspaceDoc>,
    pub discovery_seeds: Vec<u64>,
    /// Exact dark-chain transitions between representatives.
    pub transitions: Vec<Vec<f64>>,
    pub escaped: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiAtomDoc {
    pub weight: f64,
    pub subspace: SubspaceDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiDoc {
    pub n_burn: usize,
    pub n_keep: usize,
    pub period: usize,
    pub atoms: Vec<ChiAtomDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyEntryDoc {
    pub subspace: SubspaceDoc,
    pub isometry: MatrixDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDoc {
    pub r_m: usize,
    pub center: usize,
    pub family: Vec<FamilyEntryDoc>,
    pub smart_residuals: Vec<Option<f64>>,
    pub smart_certified: bool,
    pub generators: Vec<MatrixDoc>,
    /// `finite` or `continuous`.
    pub kind: String,
    pub order: Option<usize>,
    pub lie_dim: Option<usize>,
    pub elements: Option<Vec<MatrixDoc>>,
    pub transitivity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub atom: usize,
    pub weight: f64,
    pub point: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceDoc {
    pub residual: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub se_factor: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicDoc {
    pub base_ray: Vec<[f64; 2]>,
    pub samples: usize,
    pub clusters: Option<Vec<ClusterDoc>>,
    pub invariance: InvarianceDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummaryDoc {
    pub r_m: usize,
    pub atlas_size: usize,
    pub chi_atoms: usize,
    pub group_kind: String,
    pub group_order: Option<usize>,
    pub lie_dim: Option<usize>,
    pub transitivity: String,
    pub unique_invariant_measure: bool,
    pub invariance_pass: bool,
}

fn vector_doc(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Runs stages on demand and keeps their results.
pub struct Pipeline<'a> {
    pub cfg: &'a ExperimentConfig,
    pub ensemble: KrausEnsemble,
    pub period: usize,
    pub atlas: Option<DarkAtlas>,
    pub chi: Option<EmpiricalDarkMeasure>,
    pub family: Option<IsometryFamily>,
    pub group: Option<UnitaryGroupClosure>,
    pub transitivity: Option<Transitivity>,
    pub ergodic: Option<(Ray, ErgodicSampleSet, InvarianceResidual)>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self, CliError> {
        let ensemble = cfg.ensemble()?;
        let period = require_stochastic(&ensemble, cfg.tolerances.stochastic)?;
        Ok(Pipeline {
            cfg,
            ensemble,
            period,
            atlas: None,
            chi: None,
            family: None,
            group: None,
            transitivity: None,
            ergodic: None,
        })
    }

    pub fn dark(&mut self) -> Result<&DarkAtlas, CliError> {
        if self.atlas.is_none() {
            let p = &self.cfg.params;
            let atlas = discover_maximal_dark(&self.ensemble, p.discovery_probes, p.chain_len, self.cfg.seed())
                .stage("dark")?;
            log::info!("dark: r_m = {}, {} representatives", atlas.r_m, atlas.representatives.len());
            self.atlas = Some(atlas);
        }
        Ok(self.atlas.as_ref().expect("set above"))
    }

    pub fn chi(&mut self) -> Result<&EmpiricalDarkMeasure, CliError> {
        if self.chi.is_none() {
            self.dark()?;
            let p = &self.cfg.params;
            let atlas = self.atlas.as_ref().expect("dark stage ran");
            let chi = estimate_chi_inv(&self.ensemble, atlas, p.chi_burn, p.chi_keep, self.cfg.seed()).stage("chi")?;
            log::info!("chi: {} atoms", chi.atoms.len());
            self.chi = Some(chi);
        }
        Ok(self.chi.as_ref().expect("set above"))
    }

    fn chi_support(&mut self) -> Result<Vec<Subspace>, CliError> {
        Ok(self.chi()?.atoms.iter().map(|a| a.0.clone()).collect())
    }

    /// Index of the heaviest `χ̂` atom, first on ties.
    fn center(&mut self) -> Result<usize, CliError> {
        let chi = self.chi()?;
        let mut best = 0;
        for (k, a) in chi.atoms.iter().enumerate() {
            if a.1 > chi.atoms[best].1 {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn group(&mut self) -> Result<&UnitaryGroupClosure, CliError> {
        if self.group.is_none() {
            let atoms = self.chi_support()?;
            let c = self.center()?;
            let p = &self.cfg.params;
            let budget = WordBudget {
                max_len: p.max_word_len,
                samples: p.smart_check_words,
                max_nodes: p.max_family_nodes,
            };
            let fam = build_smart_family(&self.ensemble, &atoms, &atoms[c], atoms[c].basis(), budget)
                .stage("family")?;
            let gens = family_generators(&fam, &self.ensemble, &atoms).stage("group")?;
            let g = group_closure(&gens, p.group_cap).stage("group")?;
            let t = classify_transitivity(&g).stage("group")?;
            log::info!("group: order {:?}, {}", g.order(), t.as_str());
            self.family = Some(fam);
            self.group = Some(g);
            self.transitivity = Some(t);
        }
        Ok(self.group.as_ref().expect("set above"))
    }

    pub fn base_ray(&mut self) -> Result<Ray, CliError> {
        let r_m = self.dark()?.r_m;
        match &self.cfg.params.base_ray {
            Some(v) => {
                let v = CVector::from_iterator(v.len(), v.iter().map(|z| C64::new(z[0], z[1])));
                if v.len() != r_m {
                    return Err(CliError::Config(format!("base_ray has length {}, r_m is {r_m}", v.len())));
                }
                Ray::new(v).map_err(|e| CliError::Config(e.to_string()))
            }
            None => Ok(random_ray(r_m, &mut stream(self.cfg.seed(), BASE_RAY_STREAM))),
        }
    }

    pub fn ergodic(&mut self) -> Result<&(Ray, ErgodicSampleSet, InvarianceResidual), CliError> {
        if self.ergodic.is_none() {
            self.group()?;
            let x = self.base_ray()?;
            let seed = self.cfg.seed();
            let fam = self.family.as_ref().expect("group stage ran");
            let g = self.group.as_ref().expect("group stage ran");
            let chi = self.chi.as_ref().expect("chi stage ran");
            let set = sample_ergodic_measure(fam, chi, &State::Ray(x.clone()), g, self.cfg.params.ergodic_samples, seed)
                .stage("ergodic")?;
            let inv = invariance_residual(&set.rays(), &self.ensemble, seed).stage("invariance")?;
            self.ergodic = Some((x, set, inv));
        }
        Ok(self.ergodic.as_ref().expect("set above"))
    }

    pub fn atlas_doc(&mut self) -> Result<AtlasDoc, CliError> {
        self.dark()?;
        let atlas = self.atlas.as_ref().expect("dark stage ran");
        let tr = atlas_transitions(&self.ensemble, atlas).stage("dark")?;
        Ok(AtlasDoc {
            r_m: atlas.r_m,
            representatives: atlas.representatives.iter().map(SubspaceDoc::from_subspace).collect(),
            discovery_seeds: atlas.discovery_seeds.clone(),
            transitions: tr.matrix,
            escaped: tr.escaped,
        })
    }

    pub fn chi_doc(&mut self) -> Result<ChiDoc, CliError> {
        let period = self.period;
        let p = &self.cfg.params;
        let (n_burn, n_keep) = (p.chi_burn, p.chi_keep);
        let chi = self.chi()?;
        Ok(ChiDoc {
            n_burn,
            n_keep,
            period,
            atoms: chi
                .atoms
                .iter()
                .map(|(q, w)| ChiAtomDoc {
                    weight: *w,
                    subspace: SubspaceDoc::from_subspace(q),
                })
                .collect(),
        })
    }

    pub fn group_doc(&mut self) -> Result<GroupDoc, CliError> {
        self.group()?;
        let atoms = self.chi_support()?;
        let p = &self.cfg.params;
        let budget = WordBudget {
            max_len: p.max_word_len,
            samples: p.smart_check_words,
            max_nodes: p.max_family_nodes,
        };
        let fam = self.family.as_ref().expect("group stage ran");
        let g = self.group.as_ref().expect("group stage ran");
        let smart = check_smart(fam, &self.ensemble, &atoms, budget, self.cfg.seed()).stage("family")?;
        let (kind, lie_dim) = match &g.kind {
            GroupKind::Finite(_) => ("finite", None),
            GroupKind::Continuous { lie_dim } => ("continuous", Some(*lie_dim)),
        };
        Ok(GroupDoc {
            r_m: g.r_m,
            center: fam.center_index.unwrap_or(0),
            family: fam
                .entries
                .iter()
                .map(|e| FamilyEntryDoc {
                    subspace: SubspaceDoc::from_subspace(&e.subspace),
                    isometry: matrix_to_doc(&e.j),
                })
                .collect(),
            smart_residuals: smart.residuals,
            smart_certified: smart.certified,
            generators: g.generators.iter().map(matrix_to_doc).collect(),
            kind: kind.into(),
            order: g.order(),
            lie_dim,
            elements: g.elements().map(|el| el.iter().map(matrix_to_doc).collect()),
            transitivity: self.transitivity.expect("group stage ran").as_str().into(),
        })
    }

    pub fn ergodic_doc(&mut self) -> Result<ErgodicDoc, CliError> {
        let se_factor = self.cfg.tolerances.invariance_se;
        let (x, set, inv) = self.ergodic()?;
        let clusters = set.clusters.as_ref().map(|cs| {
            cs.iter()
                .map(|c| ClusterDoc {
                    atom: c.atom,
                    weight: c.weight,
                    point: vector_doc(c.center.vector()),
                })
                .collect()
        });
        Ok(ErgodicDoc {
            base_ray: vector_doc(x.vector()),
            samples: set.samples.len(),
            clusters,
            invariance: InvarianceDoc {
                residual: inv.residual,
                std_error: inv.std_error,
                replicates: inv.replicates,
                se_factor,
                pass: inv.residual <= se_factor * inv.std_error,
            },
        })
    }

    /// Bloch coordinates in the frame of each sample's atom when
    /// `r_m = 2`, raw coordinates in the atom's basis otherwise.
    pub fn samples_table(&mut self) -> Result<Table, CliError> {
        let atoms = self.chi_support()?;
        let (_, set, _) = self.ergodic()?;
        let r_m = atoms[0].dim();
        let weight = 1.0 / set.samples.len().max(1) as f64;
        if r_m == 2 {
            let mut t = Table::new(&["bx", "by", "bz", "weight", "sphere_index"]);
            for s in &set.samples {
                let State::Ray(y) = &s.point else { continue };
                let (_, b) = bloch_in_subspaces(y, &atoms[s.atom..=s.atom]).stage("ergodic")?;
                t.push(vec![b[0], b[1], b[2], weight, s.atom as f64]);
            }
            return Ok(t);
        }
        let mut cols: Vec<String> = vec!["sphere_index".into(), "weight".into()];
        for k in 0..r_m {
            cols.push(format!("c{k}_re"));
            cols.push(format!("c{k}_im"));
        }
        let mut t = Table {
            columns: cols,
            rows: Vec::new(),
        };
        for s in &set.samples {
            let State::Ray(y) = &s.point else { continue };
            let c = atoms[s.atom].basis().adjoint() * y.vector();
            let mut row = vec![s.atom as f64, weight];
            row.extend(c.iter().flat_map(|z| [z.re, z.im]));
            t.push(row);
        }
        Ok(t)
    }
}

/// Rebuilds the verdicts from dumped artifacts alone.
pub fn summarize(atlas: &AtlasDoc, chi: &ChiDoc, group: &GroupDoc, ergodic: &ErgodicDoc) -> Result<SummaryDoc, CliError> {
    let generators = group
        .generators
        .iter()
        .map(matrix_from_doc)
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Config)?;
    let kind = match (group.kind.as_str(), &group.elements, group.lie_dim) {
        ("finite", Some(el), _) => GroupKind::Finite(
            el.iter().map(matrix_from_doc).collect::<Result<_, _>>().map_err(CliError::Config)?,
        ),
        ("continuous", _, Some(lie_dim)) => GroupKind::Continuous { lie_dim },
        _ => return Err(CliError::Config("malformed group document".into())),
    };
    let closure = UnitaryGroupClosure {
        r_m: group.r_m,
        generators,
        kind,
        dedup_tolerance: darktraj_core::tol::GROUP_DEDUP,
    };
    let t = classify_transitivity(&closure).stage("summary")?;
    Ok(SummaryDoc {
        r_m: atlas.r_m,
        atlas_size: atlas.representatives.len(),
        chi_atoms: chi.atoms.len(),
        group_kind: group.kind.clone(),
        group_order: closure.order(),
        lie_dim: group.lie_dim,
        transitivity: t.as_str().into(),
        unique_invariant_measure: t.is_transitive(),
        invariance_pass: ergodic.invariance.pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDoc {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl FitDoc {
    fn new(f: LinearFit, points: usize) -> Self {
        FitDoc {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            points,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceDoc {
    pub r_m: usize,
    pub trajectories: usize,
    pub s_mode: String,
    /// Fits of `log(value)` against `n` over the positive entries.
    pub darkness_gap_fit: Option<FitDoc>,
    pub s_n_fit: Option<FitDoc>,
    pub w1_fit: Option<FitDoc>,
}

pub struct Curves {
    pub darkness_gap: Table,
    pub s_n: Table,
    pub w1: Table,
    pub summary: ConvergenceDoc,
}

fn log_fit(points: &[(f64, f64)]) -> Result<Option<FitDoc>, CliError> {
    let pos: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    if pos.len() < 2 {
        return Ok(None);
    }
    let xs: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pos.iter().map(|p| p.1.ln()).collect();
    Ok(Some(FitDoc::new(linear_fit(&xs, &ys).stage("convergence")?, pos.len())))
}

pub fn convergence(pipe: &mut Pipeline) -> Result<Curves, CliError> {
    let atoms = pipe.chi_support()?;
    let r_m = atoms[0].dim();
    let cfg = pipe.cfg;
    let p = &cfg.params;
    let e = &pipe.ensemble;

    let seeds = cfg.gap_seeds();
    let gaps = mean_darkness_gap_curve(e, &atoms, p.gap_n_max, &seeds).stage("convergence")?;
    let mut darkness_gap = Table::new(&["n", "mean_darkness_gap"]);
    let mut gap_points = Vec::new();
    for (n, g) in gaps.iter().enumerate() {
        darkness_gap.push(vec![n as f64, *g]);
        if n >= 1 {
            gap_points.push((n as f64, *g));
        }
    }

    let exhaustive = (e.len() as f64).powi(p.s_n_max as i32) <= MAX_EXHAUSTIVE_WORDS as f64;
    let mode = if exhaustive { SMode::Exhaustive } else { SMode::MonteCarlo };
    let mut s_n = Table::new(&["n", "s_n", "std_error"]);
    let mut s_points = Vec::new();
    for n in 1..=p.s_n_max {
        let s = s_of_n(e, n, mode, r_m, p.s_samples, cfg.seed()).stage("convergence")?;
        s_n.push(vec![n as f64, s.value, s.std_error]);
        s_points.push((n as f64, s.value));
    }

    let chi = pipe.chi.as_ref().expect("chi stage ran");
    let start = EmpiricalDarkMeasure {
        atoms: vec![(atoms[0].clone(), 1.0)],
    };
    let curve = cesaro_convergence_curve(e, &start, chi, pipe.period, p.w1_n_max, p.w1_samples, cfg.seed())
        .stage("convergence")?;
    let mut w1 = Table::new(&["n", "w1"]);
    let mut w1_points = Vec::new();
    for (n, d) in curve {
        w1.push(vec![n as f64, d]);
        w1_points.push((n as f64, d));
    }

    let summary = ConvergenceDoc {
        r_m,
        trajectories: seeds.len(),
        s_mode: if exhaustive { "exhaustive" } else { "monte_carlo" }.into(),
        darkness_gap_fit: log_fit(&gap_points)?,
        s_n_fit: log_fit(&s_points)?,
        w1_fit: log_fit(&w1_points)?,
    };
    Ok(Curves {
        darkness_gap,
        s_n,
        w1,
        summary,
    })
}

/// The ensemble as a standalone document, for reuse with `--ensemble`.
pub fn ensemble_doc(e: &KrausEnsemble) -> EnsembleDoc {
    EnsembleDoc::from_ensemble(e)
}
