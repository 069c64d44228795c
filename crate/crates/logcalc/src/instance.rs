//! Instance definitions: the JSON schema for algebras, modules and
//! operators, with construction-time validation.

use serde::Deserialize;

use crate::algebra::{from_comm_algebra, mobius_ct, CommAlgebraSpec, VertexAlgebraInstance};
use crate::error::CalcError;
use crate::liop::{Bil, LogIntwOp, ModuleData};
use crate::matrix::Matrix;
use crate::module::{Action, Block, GradedModule, GroupElt};
use crate::polyscalar::PolyScalar;
use crate::scalar::Scalar;

#[derive(Deserialize)]
pub struct InstanceFile {
    pub algebra: AlgebraSpecJson,
    #[serde(default)]
    pub modules: Vec<ModuleJson>,
    #[serde(default)]
    pub operators: Vec<OperatorJson>,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum AlgebraSpecJson {
    MobiusCt {
        mobius_ct: usize,
    },
    Comm {
        dim: usize,
        unit: Vec<String>,
        structure: Vec<Vec<Vec<String>>>,
        derivation: Vec<Vec<String>>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum ModuleJson {
    /// The algebra acting on itself.
    Regular { regular: bool, name: Option<String> },
    /// A synthetic Jordan carrier (L(0)-structure only).
    Jordan {
        jordan: JordanSpec,
        name: Option<String>,
    },
    /// Fully explicit module data.
    Explicit {
        name: String,
        blocks: Vec<BlockJson>,
        #[serde(rename = "L")]
        l: LJson,
        action: Vec<ModeJson>,
    },
}

#[derive(Deserialize)]
pub struct JordanSpec {
    pub weight: i64,
    pub size: usize,
}

#[derive(Deserialize)]
pub struct BlockJson {
    pub weight: String,
    #[serde(default)]
    pub degree: Vec<i64>,
    pub dim: usize,
}

#[derive(Deserialize)]
pub struct LJson {
    pub minus: Vec<Vec<String>>,
    pub zero: Vec<Vec<String>>,
    pub plus: Vec<Vec<String>>,
}

#[derive(Deserialize)]
pub struct ModeJson {
    pub v: usize,
    pub n: i64,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    /// The vertex map of a module as an operator of type (W; V W).
    ModuleMap { module_map: usize },
    /// A synthetic operator from a bilinear map between three modules.
    Synthetic {
        synthetic: Vec<Vec<Vec<String>>>,
        modules: [usize; 3],
    },
}

/// A fully validated instance: the algebra with its self-action, the module
/// list, and the operator list.
pub struct Instance {
    pub algebra: VertexAlgebraInstance,
    pub modules: Vec<(String, ModuleData, bool)>, // (name, data, full_sl2)
    pub operators: Vec<(String, LogIntwOp, [usize; 3])>,
}

fn parse_scalar(s: &str, what: &str) -> Result<Scalar, CalcError> {
    s.parse()
        .map_err(|e: CalcError| CalcError::Parse(format!("{what}: {e}")))
}

fn parse_matrix(rows: &[Vec<String>], what: &str) -> Result<Matrix<Scalar>, CalcError> {
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut row = Vec::new();
        for (j, s) in r.iter().enumerate() {
            row.push(parse_scalar(s, &format!("{what}[{i}][{j}]"))?);
        }
        out.push(row);
    }
    if out.is_empty() || out.iter().any(|r| r.len() != out[0].len()) {
        return Err(CalcError::Parse(format!("{what}: ragged or empty matrix")));
    }
    Ok(Matrix::from_rows(out))
}

pub fn load_instance_str(text: &str) -> Result<Instance, CalcError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| CalcError::Parse(e.to_string()))?;
    let algebra = match &file.algebra {
        AlgebraSpecJson::MobiusCt { mobius_ct } => mobius_ct_checked(*mobius_ct)?,
        AlgebraSpecJson::Comm {
            dim,
            unit,
            structure,
            derivation,
        } => {
            let mut unit_v = Vec::new();
            for (i, s) in unit.iter().enumerate() {
                unit_v.push(parse_scalar(s, &format!("algebra.unit[{i}]"))?);
            }
            let mut struc = Vec::new();
            for (i, plane) in structure.iter().enumerate() {
                let mut p2 = Vec::new();
                for (j, row) in plane.iter().enumerate() {
                    let mut v = Vec::new();
                    for (k, s) in row.iter().enumerate() {
                        v.push(parse_scalar(s, &format!("algebra.structure[{i}][{j}][{k}]"))?);
                    }
                    p2.push(v);
                }
                struc.push(p2);
            }
            let spec = CommAlgebraSpec {
                dim: *dim,
                structure: struc,
                unit: unit_v,
                derivation: parse_matrix(derivation, "algebra.derivation")?,
            };
            from_comm_algebra(&spec)?
        }
    };
    let mut modules: Vec<(String, ModuleData, bool)> = Vec::new();
    for (idx, m) in file.modules.iter().enumerate() {
        match m {
            ModuleJson::Regular { name, .. } => {
                modules.push((
                    name.clone().unwrap_or_else(|| format!("W{idx}")),
                    ModuleData {
                        module: algebra.v.clone(),
                        action: algebra.action.clone(),
                    },
                    true,
                ));
            }
            ModuleJson::Jordan { jordan, name } => {
                let size = jordan.size;
                let w = Scalar::from_int(jordan.weight);
                let mut l0 = Matrix::zero(size, size);
                for i in 0..size {
                    l0.set(i, i, w.clone());
                    if i + 1 < size {
                        l0.set(i, i + 1, Scalar::one());
                    }
                }
                let module = GradedModule::new(
                    &name.clone().unwrap_or_else(|| format!("J{idx}")),
                    vec![Block {
                        weight: w,
                        degree: GroupElt::zero(0),
                        dim: size,
                    }],
                    [
                        Matrix::zero(size, size),
                        l0,
                        Matrix::zero(size, size),
                    ],
                );
                modules.push((
                    module.name.clone(),
                    ModuleData {
                        module,
                        action: Action::new(algebra.dim(), size),
                    },
                    false,
                ));
            }
            ModuleJson::Explicit {
                name,
                blocks,
                l,
                action,
            } => {
                let blocks: Vec<Block> = blocks
                    .iter()
                    .map(|b| {
                        Ok(Block {
                            weight: parse_scalar(&b.weight, "module.block.weight")?,
                            degree: GroupElt(b.degree.clone()),
                            dim: b.dim,
                        })
                    })
                    .collect::<Result<_, CalcError>>()?;
                let module = GradedModule::new(
                    name,
                    blocks,
                    [
                        parse_matrix(&l.minus, "module.L.minus")?,
                        parse_matrix(&l.zero, "module.L.zero")?,
                        parse_matrix(&l.plus, "module.L.plus")?,
                    ],
                );
                let dim = module.dim();
                let mut act = Action::new(algebra.dim(), dim);
                for mode in action {
                    act.set_mode(mode.v, mode.n, parse_matrix(&mode.matrix, "module.action")?);
                }
                modules.push((
                    name.clone(),
                    ModuleData {
                        module,
                        action: act,
                    },
                    true,
                ));
            }
        }
    }
    if modules.is_empty() {
        modules.push((
            "W".to_string(),
            ModuleData {
                module: algebra.v.clone(),
                action: algebra.action.clone(),
            },
            true,
        ));
    }
    let mut operators = Vec::new();
    for (idx, op) in file.operators.iter().enumerate() {
        match op {
            OperatorJson::ModuleMap { module_map } => {
                let md = &modules
                    .get(*module_map)
                    .ok_or_else(|| {
                        CalcError::Parse(format!("operators[{idx}]: unknown module {module_map}"))
                    })?
                    .1;
                operators.push((
                    format!("Y{idx}"),
                    LogIntwOp::from_module_action(&algebra.v, md),
                    [usize::MAX, *module_map, *module_map],
                ));
            }
            OperatorJson::Synthetic {
                synthetic,
                modules: mods,
            } => {
                let get = |i: usize| -> Result<&ModuleData, CalcError> {
                    Ok(&modules
                        .get(i)
                        .ok_or_else(|| {
                            CalcError::Parse(format!("operators[{idx}]: unknown module {i}"))
                        })?
                        .1)
                };
                let (m1, m2, m3) = (get(mods[0])?, get(mods[1])?, get(mods[2])?);
                let mut bil: Bil = vec![
                    vec![vec![PolyScalar::zero(); m3.dim()]; m2.dim()];
                    m1.dim()
                ];
                for (i, plane) in synthetic.iter().enumerate() {
                    for (j, row) in plane.iter().enumerate() {
                        for (k, s) in row.iter().enumerate() {
                            bil[i][j][k] = PolyScalar::constant(parse_scalar(
                                s,
                                &format!("operators[{idx}].synthetic[{i}][{j}][{k}]"),
                            )?);
                        }
                    }
                }
                operators.push((
                    format!("Y{idx}"),
                    crate::liop::synthetic_log_op(&m1.module, &m2.module, &m3.module, &bil),
                    *mods,
                ));
            }
        }
    }
    Ok(Instance {
        algebra,
        modules,
        operators,
    })
}

fn mobius_ct_checked(n: usize) -> Result<VertexAlgebraInstance, CalcError> {
    if n == 0 {
        return Err(CalcError::InvalidAlgebra(
            "the truncation degree must be at least 1".into(),
        ));
    }
    Ok(mobius_ct(n))
}

pub fn load_instance(path: &std::path::Path) -> Result<Instance, CalcError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CalcError::Parse(format!("{}: {e}", path.display())))?;
    load_instance_str(&text)
}

/// Bundled fixture: the two-dimensional trivial algebra C[s]/(s^2) with
/// D = 0, regular modules, and a synthetic Jordan operator.
pub const TRIVIAL_2DIM: &str = include_str!("../instances/trivial-2dim.json");
/// Bundled fixture: the degree-truncated Möbius algebra C[t] at degree 8.
pub const MOBIUS_CT_8: &str = include_str!("../instances/mobius-ct-8.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_load() {
        let t = load_instance_str(TRIVIAL_2DIM).unwrap();
        assert_eq!(t.algebra.dim(), 2);
        assert!(!t.modules.is_empty());
        let m = load_instance_str(MOBIUS_CT_8).unwrap();
        assert_eq!(m.algebra.dim(), 9);
        assert!(m.algebra.flags.mobius);
    }

    #[test]
    fn malformed_scalar_names_the_field() {
        let bad = r#"{"algebra": {"dim": 1, "unit": ["oops"], "structure": [[["1"]]], "derivation": [["0"]]}}"#;
        let err = match load_instance_str(bad) {
            Err(e) => e,
            Ok(_) => panic!("malformed instance loaded"),
        };
        match err {
            CalcError::Parse(msg) => assert!(msg.contains("algebra.unit[0]"), "{msg}"),
            other => panic!("wrong error {other:?}"),
        }
    }
}
