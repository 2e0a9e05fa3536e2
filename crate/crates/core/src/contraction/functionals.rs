//! Channel functionals: score energy, variance ratio, mutual information.

use crate::channels::{Channel, InputDist, Kernel, Response, Row, MAX_ENUMERATED_OUTPUTS};
use crate::error::{Error, Result};
use crate::perturbations::{Construction, PerturbedFamily, Signs};

/// An input cell with its mass, its score moments `E[φ_i 1{cell}]`, and the
/// channel row it induces.
struct ScoreAtom<'a> {
    mass: f64,
    moments: Vec<f64>,
    row: Row<'a>,
}

fn score_atoms<'c>(ch: &'c Channel, fam: &PerturbedFamily, z: &Signs) -> Result<Vec<ScoreAtom<'c>>> {
    let k = fam.k();
    let finite = matches!(ch.kernel(), Kernel::Table(_)) || fam.kind() == Construction::Discrete;
    if finite {
        let sup = fam.finite_support(z)?;
        return sup
            .points()
            .iter()
            .zip(sup.probs())
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, &p)| {
                let xf: Vec<f64> = x.iter().map(|&c| f64::from(c)).collect();
                Ok(ScoreAtom {
                    mass: p,
                    moments: (0..k).map(|i| p * fam.phi(z, i, &xf)).collect(),
                    row: ch.row(crate::channels::Point::Symbol(x))?,
                })
            })
            .collect();
    }
    let Kernel::Response(resp) = ch.kernel() else { unreachable!() };
    match resp {
        Response::Binned { coord, thresholds, table } => {
            let (mass, mom) = fam.score_cells(z, *coord, thresholds)?;
            Ok(table
                .iter()
                .enumerate()
                .filter(|(c, _)| mass[*c] > 0.0)
                .map(|(c, r)| {
                    let mut moments = vec![0.0; k];
                    moments[*coord] = mom[c];
                    ScoreAtom { mass: mass[c], moments, row: Row::Dense(r.as_slice().into()) }
                })
                .collect())
        }
        Response::SubsetForward { coords } => {
            if ch.output_count() > MAX_ENUMERATED_OUTPUTS {
                return Err(Error::Budget {
                    what: "sign tuples",
                    needed: u128::from(ch.output_count()),
                    limit: u128::from(MAX_ENUMERATED_OUTPUTS),
                });
            }
            let cells: Vec<(Vec<f64>, Vec<f64>)> =
                coords.iter().map(|&j| fam.score_cells(z, j, &[0.0])).collect::<Result<_>>()?;
            let l = coords.len();
            let mut atoms = Vec::new();
            for y in 0..ch.output_count() {
                let bit = |pos: usize| (y >> (l - 1 - pos) & 1) as usize;
                let mass: f64 = (0..l).map(|pos| cells[pos].0[bit(pos)]).product();
                let mut moments = vec![0.0; k];
                for (pos, &j) in coords.iter().enumerate() {
                    let others: f64 = (0..l).filter(|q| *q != pos).map(|q| cells[q].0[bit(q)]).product();
                    moments[j] = cells[pos].1[bit(pos)] * others;
                }
                if mass > 0.0 {
                    atoms.push(ScoreAtom { mass, moments, row: Row::Point(y) });
                }
            }
            Ok(atoms)
        }
    }
}

fn width(ch: &Channel) -> Result<usize> {
    let w = ch.output_count();
    if w > MAX_ENUMERATED_OUTPUTS {
        return Err(Error::Budget { what: "output alphabet", needed: u128::from(w), limit: u128::from(MAX_ENUMERATED_OUTPUTS) });
    }
    Ok(w as usize)
}

fn accumulate(row: &Row<'_>, w: f64, out: &mut [f64]) {
    match row {
        Row::Point(y) => out[*y as usize] += w,
        Row::Dense(r) => out.iter_mut().zip(r.iter()).for_each(|(o, p)| *o += w * p),
    }
}

/// `Σ_i Σ_y E[φ_{z,i}(X) W(y|X)]² / E[W(y|X)]` under `X ∼ P_z`.
pub fn info_functional(ch: &Channel, fam: &PerturbedFamily, z: &Signs) -> Result<f64> {
    let w = width(ch)?;
    if ch.is_constant() {
        // E[φ W(y|X)] = W(y)·E[φ] = 0
        return Ok(0.0);
    }
    let k = fam.k();
    let atoms = score_atoms(ch, fam, z)?;
    let mut ew = vec![0.0; w];
    let mut ephi = vec![vec![0.0; w]; k];
    for a in &atoms {
        accumulate(&a.row, a.mass, &mut ew);
        for i in 0..k {
            if a.moments[i] != 0.0 {
                accumulate(&a.row, a.moments[i], &mut ephi[i]);
            }
        }
    }
    let mut total = 0.0;
    for y in 0..w {
        if ew[y] > 0.0 {
            total += ephi.iter().map(|e| e[y] * e[y]).sum::<f64>() / ew[y];
        } else {
            debug_assert!(ephi.iter().all(|e| e[y].abs() < 1e-300), "Cauchy–Schwarz violated");
        }
    }
    Ok(total)
}

/// `Σ_y Var[W(y|X)] / E[W(y|X)]`.
pub fn var_functional(ch: &Channel, p: &InputDist) -> Result<f64> {
    let w = width(ch)?;
    if ch.is_constant() {
        return Ok(0.0);
    }
    let mut m1 = vec![0.0; w];
    let mut m2 = vec![0.0; w];
    for a in ch.atoms(p)? {
        match &a.row {
            Row::Point(y) => {
                m1[*y as usize] += a.prob;
                m2[*y as usize] += a.prob;
            }
            Row::Dense(r) => {
                for (y, q) in r.iter().enumerate() {
                    m1[y] += a.prob * q;
                    m2[y] += a.prob * q * q;
                }
            }
        }
    }
    Ok(m1
        .iter()
        .zip(&m2)
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, s)| ((s - e * e) / e).max(0.0))
        .sum())
}

fn entropy_bits(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|q| *q > 0.0).map(|q| -q * q.log2()).sum()
}

/// `I(X; Y)` in bits for `X ∼ P` and `Y` the channel output.
pub fn mutual_info_bits(ch: &Channel, p: &InputDist) -> Result<f64> {
    let w = width(ch)?;
    if ch.is_constant() {
        return Ok(0.0);
    }
    let mut out = vec![0.0; w];
    let mut cond = 0.0;
    for a in ch.atoms(p)? {
        accumulate(&a.row, a.prob, &mut out);
        if let Row::Dense(r) = &a.row {
            cond += a.prob * entropy_bits(r.iter().copied());
        }
    }
    Ok((entropy_bits(out.into_iter()) - cond).max(0.0))
}
