//! TOML configuration decks.
//!
//! Every section is optional; absent keys take the defaults below and
//! unknown keys are rejected.
//!
//! ```toml
//! [model]
//! re = "Re"
//!
//! [case]
//! ids = ["I", "II", "III"]
//!
//! [generators]
//! names = ["xi1", "xi2", "xi3", "xi4", "xi5", "xi6", "xi7", "xi8", "xi9"]
//!
//! [[generators.inline]]
//! name = "shifted"
//! xi_x = ["1", "y"]
//!
//! [families]
//! names = ["scale_i", "trasl_i", "trasl_ii", "trasl_iii", "bvp_mud"]
//! mode = "symbolic"
//!
//! [families.overrides.trasl_i]
//! k1 = "1/2"
//!
//! [sweep]
//! eps = [1e-1, 1e-2, 1e-3, 1e-4]
//! band = [1.95, 2.05]
//!
//! [output]
//! format = "text"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::catalog::{self, FamilyId, FamilyParams, SolutionFamily};
use crate::error::ConfigError;
use crate::expr::NormalForm;
use crate::model::{self, AnsatzCase, CaseId, GivenFunctions, ModelParams};
use crate::numeric::{Precision, SamplePlan, DEFAULT_SEED};
use crate::prolong::Generator;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDeck {
    pub model: ModelSection,
    pub case: CaseSection,
    pub generators: GeneratorSection,
    pub families: FamilySection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Reynolds number; symbolic when absent, except in numeric work where
    /// the family defaults apply.
    pub re: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaseSection {
    pub ids: Vec<CaseId>,
    pub a: Option<[String; 7]>,
    pub b: Option<String>,
    pub h: Option<String>,
}

impl Default for CaseSection {
    fn default() -> Self {
        CaseSection {
            ids: CaseId::ALL.to_vec(),
            a: None,
            b: None,
            h: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub names: Vec<String>,
    pub inline: Vec<InlineGenerator>,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection {
            names: (1..=9).map(|i| format!("xi{i}")).collect(),
            inline: Vec::new(),
        }
    }
}

/// A generator written out slot by slot as `[eps^0, eps^1]` expressions.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineGenerator {
    pub name: String,
    /// Verify modulo the constraint on the symbolic `f1`, `f2`.
    #[serde(default)]
    pub modulo: bool,
    pub xi_x: Option<Vec<String>>,
    pub xi_y: Option<Vec<String>>,
    pub eta_u: Option<Vec<String>>,
    pub eta_v: Option<Vec<String>>,
    pub eta_p: Option<Vec<String>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    #[default]
    Symbolic,
    Numeric,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySection {
    pub names: Vec<String>,
    pub mode: FamilyMode,
    /// Use the repaired family where the printed one fails.
    pub repair: bool,
    pub params: BTreeMap<String, String>,
    pub overrides: BTreeMap<String, BTreeMap<String, String>>,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection {
            names: FamilyId::ALL.iter().map(|f| f.key().to_string()).collect(),
            mode: FamilyMode::Symbolic,
            repair: true,
            params: BTreeMap::new(),
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    pub count: usize,
    pub seed: u64,
    pub precision: Precision,
    pub band: [f64; 2],
    /// Sweep the `eps^0`-truncated families instead.
    pub control: bool,
    pub boxes: BTreeMap<String, BoxSpec>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
            count: 64,
            seed: DEFAULT_SEED,
            precision: Precision::Double,
            band: [1.95, 2.05],
            control: false,
            boxes: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Text,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// One invariance check to run.
#[derive(Clone, Debug)]
pub struct GeneratorJob {
    pub label: String,
    pub generator: Generator,
    /// Given functions whose constraint joins the on-shell rules.
    pub modulo: Option<GivenFunctions>,
}

fn parse_expr(what: &str, text: &str) -> Result<NormalForm, ConfigError> {
    NormalForm::parse(text).map_err(|e| ConfigError::Invalid(format!("{what} `{text}`: {e}")))
}

impl ConfigDeck {
    pub fn parse(text: &str) -> Result<ConfigDeck, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ConfigDeck, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        ConfigDeck::parse(&text)
    }

    /// Model parameters for symbolic work.
    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        Ok(match &self.model.re {
            Some(re) => ModelParams {
                re: parse_expr("model.re", re)?,
            },
            None => ModelParams::symbolic(),
        })
    }

    pub fn cases(&self) -> Result<Vec<AnsatzCase>, ConfigError> {
        let params = self.model_params()?;
        let a: [NormalForm; 7] = match &self.case.a {
            Some(texts) => {
                let mut out: [NormalForm; 7] = Default::default();
                for (slot, t) in out.iter_mut().zip(texts) {
                    *slot = parse_expr("case.a", t)?;
                }
                out
            }
            None => std::array::from_fn(|i| NormalForm::param(&format!("a{}", i + 1))),
        };
        let b = match &self.case.b {
            Some(t) => parse_expr("case.b", t)?,
            None => NormalForm::param("b"),
        };
        let h = self.case.h.as_deref().map(|t| parse_expr("case.h", t)).transpose()?;
        self.case
            .ids
            .iter()
            .map(|&id| Ok(model::ansatz_case(id, &a, &b, h.clone(), &params)?))
            .collect()
    }

    /// Named generators on the symbolic `f1`, `f2`; those that need the
    /// constraint are also instantiated on each configured case.
    pub fn generator_jobs(&self) -> Result<Vec<GeneratorJob>, ConfigError> {
        let params = self.model_params()?;
        let generic = GivenFunctions::symbolic();
        let cases = self.cases()?;
        let mut jobs = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.generators.names {
            if !seen.insert(name.clone()) {
                return Err(ConfigError::Invalid(format!("generator `{name}` listed twice")));
            }
            let build = |given: &GivenFunctions| named_generator(name, given, &params);
            if model::needs_constraint(name) {
                jobs.push(GeneratorJob {
                    label: name.clone(),
                    generator: build(&generic)?,
                    modulo: Some(generic.clone()),
                });
                for case in &cases {
                    jobs.push(GeneratorJob {
                        label: format!("{name} case {}", case.case),
                        generator: build(&case.given)?,
                        modulo: Some(case.given.clone()),
                    });
                }
            } else {
                jobs.push(GeneratorJob {
                    label: name.clone(),
                    generator: build(&generic)?,
                    modulo: None,
                });
            }
        }
        for g in &self.generators.inline {
            if !seen.insert(g.name.clone()) {
                return Err(ConfigError::Invalid(format!("generator `{}` listed twice", g.name)));
            }
            jobs.push(GeneratorJob {
                label: g.name.clone(),
                generator: inline_generator(g)?,
                modulo: g.modulo.then(|| generic.clone()),
            });
        }
        Ok(jobs)
    }

    fn family_ids(&self) -> Result<Vec<FamilyId>, ConfigError> {
        let ids: Vec<FamilyId> = self
            .families
            .names
            .iter()
            .map(|n| n.parse::<FamilyId>().map_err(ConfigError::from))
            .collect::<Result<_, _>>()?;
        for key in self.families.overrides.keys().chain(self.sweep.boxes.keys()) {
            key.parse::<FamilyId>()?;
        }
        Ok(ids)
    }

    fn family_params(&self, id: FamilyId, numeric: bool) -> Result<FamilyParams, ConfigError> {
        let mut params = if numeric {
            FamilyParams::numeric_defaults()
        } else {
            FamilyParams::symbolic()
        };
        if let Some(re) = &self.model.re {
            params.set("Re", parse_expr("model.re", re)?);
        }
        let own = self
            .families
            .overrides
            .iter()
            .filter(|(k, _)| k.parse::<FamilyId>().ok() == Some(id))
            .flat_map(|(_, m)| m.iter());
        for (k, v) in self.families.params.iter().chain(own) {
            params.set(k, parse_expr(&format!("parameter {k}"), v)?);
        }
        Ok(params)
    }

    /// Families as configured, symbolic unless `mode = "numeric"`.
    pub fn families(&self) -> Result<Vec<SolutionFamily>, ConfigError> {
        let numeric = self.families.mode == FamilyMode::Numeric;
        self.family_ids()?
            .into_iter()
            .map(|id| Ok(catalog::solution_family(id, &self.family_params(id, numeric)?)?))
            .collect()
    }

    /// Families with numeric defaults under the overrides, repaired if
    /// configured so.
    pub fn numeric_families(&self) -> Result<Vec<SolutionFamily>, ConfigError> {
        self.family_ids()?
            .into_iter()
            .map(|id| {
                let fam = catalog::solution_family(id, &self.family_params(id, true)?)?;
                if !self.families.repair {
                    return Ok(fam);
                }
                Ok(catalog::repair_family(&fam)?.repaired.unwrap_or(fam))
            })
            .collect()
    }

    pub fn plan_for(&self, id: FamilyId) -> SamplePlan {
        let mut plan = SamplePlan::default_for(id);
        plan.count = self.sweep.count;
        plan.seed = self.sweep.seed;
        if let Some((_, b)) = self.sweep.boxes.iter().find(|(k, _)| k.parse::<FamilyId>().ok() == Some(id)) {
            plan.x = b.x;
            plan.y = b.y;
        }
        plan
    }
}

/// `xi1`..`xi9`, `xiA`, `xiB` with the given functions supplied.
pub fn named_generator(name: &str, given: &GivenFunctions, params: &ModelParams) -> Result<Generator, ConfigError> {
    let k = |i: usize| NormalForm::param(&format!("k{i}"));
    match name {
        "xiA" => Ok(catalog::xi_a([&k(1), &k(2), &k(3)], given, params)),
        "xiB" => Ok(catalog::xi_b([&k(1), &k(2), &k(3), &k(4)], given, params)),
        _ => model::symmetry_generators(given, params)
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
            .ok_or_else(|| ConfigError::UnknownGenerator(name.to_string())),
    }
}

pub fn inline_generator(g: &InlineGenerator) -> Result<Generator, ConfigError> {
    let mut out = Generator::zero(&model::jet_space());
    let slots = [
        ("xi_x", &g.xi_x),
        ("xi_y", &g.xi_y),
        ("eta_u", &g.eta_u),
        ("eta_v", &g.eta_v),
        ("eta_p", &g.eta_p),
    ];
    for (key, texts) in slots {
        if let Some(texts) = texts {
            let forms = texts
                .iter()
                .map(|t| {
                    let what = format!("{}.{key}", g.name);
                    let e = parse_expr(&what, t)?;
                    match e.derivative_symbols().iter().find(|d| d.function.order().is_none()) {
                        Some(d) => Err(ConfigError::Invalid(format!(
                            "{what} `{t}`: `{}` is not an expansion symbol; write {}0, {}1",
                            d.name(),
                            d.function.base(),
                            d.function.base()
                        ))),
                        None => Ok(e),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.set_slot(key, forms)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_generators_need_expansion_symbols() {
        let d = ConfigDeck::parse(
            "[[generators.inline]]\nname = \"g\"\nxi_x = [\"1\", \"0\"]\neta_u = [\"0\", \"-u\"]\n",
        )
        .unwrap();
        let err = d.generator_jobs().unwrap_err().to_string();
        assert!(err.contains("write u0, u1"), "{err}");
    }

    #[test]
    fn empty_deck_has_defaults() {
        let d = ConfigDeck::parse("").unwrap();
        assert_eq!(d.generators.names.len(), 9);
        assert_eq!(d.case.ids, CaseId::ALL.to_vec());
        assert_eq!(d.sweep.eps, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert_eq!(d.sweep.count, 64);
        assert_eq!(d.sweep.seed, 42);
        assert_eq!(d.output.format, Format::Text);
        assert_eq!(d.families().unwrap().len(), 5);
        let jobs = d.generator_jobs().unwrap();
        assert_eq!(jobs.len(), 12);
        assert_eq!(jobs.iter().filter(|j| j.modulo.is_some()).count(), 4);
        assert_eq!(d.plan_for(FamilyId::TraslII).x, [-2.0, 2.0]);
    }

    #[test]
    fn strict_parsing() {
        assert!(matches!(ConfigDeck::parse("[model]\nreynolds = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(ConfigDeck::parse("[extra]\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(ConfigDeck::parse("[output]\nformat = \"xml\""), Err(ConfigError::Parse(_))));
        let d = ConfigDeck::parse("[generators]\nnames = [\"xi10\"]").unwrap();
        assert!(matches!(d.generator_jobs(), Err(ConfigError::UnknownGenerator(n)) if n == "xi10"));
        let d = ConfigDeck::parse("[families]\nnames = [\"trasl_iv\"]").unwrap();
        assert!(d.families().is_err());
    }

    #[test]
    fn overrides_and_inline() {
        let d = ConfigDeck::parse(
            r#"
            [model]
            re = "2"
            [families]
            names = ["trasl_i"]
            params = { k2 = "1" }
            [families.overrides.TRASL_I]
            k1 = "1/2"
            [sweep.boxes.trasl_i]
            x = [0.0, 1.0]
            y = [0.0, 1.0]
            [generators]
            names = []
            [[generators.inline]]
            name = "shift"
            xi_x = ["1", "0"]
            "#,
        )
        .unwrap();
        let p = d.family_params(FamilyId::TraslI, true).unwrap();
        assert_eq!(p.get("k1").unwrap(), &NormalForm::parse("1/2").unwrap());
        assert_eq!(p.get("k2").unwrap(), &NormalForm::one());
        assert_eq!(p.get("Re").unwrap(), &NormalForm::integer(2));
        assert_eq!(d.plan_for(FamilyId::TraslI).x, [0.0, 1.0]);
        let jobs = d.generator_jobs().unwrap();
        assert_eq!(jobs[0].generator.xi()[0].coeff(0), &NormalForm::one());
    }
}
