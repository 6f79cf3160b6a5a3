//! Random codebooks for channel resolvability with a secret key.
//!
//! `K` codebooks `g_s: [M] → X` are drawn i.i.d. from `P_X`; the decoder for
//! codebook `s` is the square-root measurement over `{ρ_B^{g_s(w)}}_w`.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{average, expectation, pretty_good_measurement, trace_distance, Mat, Povm};
use crate::error::{Error, Result};
use crate::measures::CqStateT;

#[derive(Debug, Clone)]
pub struct ResolvabilityCode {
    pub m: usize,
    pub k: usize,
    /// `codebooks[s][w] = x`.
    pub codebooks: Vec<Vec<usize>>,
    pub decoders: Vec<Povm>,
    /// `(1/MK) Σ_{s,w} tr(Γ_s^w ρ^{g_s(w)})`.
    pub reliability: f64,
    /// `‖(1/MK) Σ_{s,w} ρ^{g_s(w)} − ρ_B‖₁`.
    pub distance: f64,
    pub mean_reliability: f64,
    pub mean_distance: f64,
    pub trials: usize,
}

struct Draw {
    codebooks: Vec<Vec<usize>>,
    decoders: Vec<Povm>,
    reliability: f64,
    distance: f64,
}

/// Draws `trials` independent code families and keeps the one with the
/// smallest resolvability distance (ties: the earliest trial).
pub fn build_resolvability_code(
    sigma: &CqStateT<f64>,
    m: usize,
    k: usize,
    seed: u64,
    trials: usize,
) -> Result<ResolvabilityCode> {
    if m == 0 || k == 0 || trials == 0 {
        return Err(Error::BadParameter("M, K and trials must be positive".into()));
    }
    let weights = WeightedIndex::new(sigma.pmf().probs())
        .map_err(|e| Error::BadParameter(format!("codebook distribution: {e}")))?;
    let outputs: Vec<Mat> = sigma.states().iter().map(|s| s.matrix().clone()).collect();
    let target = sigma.marginal_b();
    let draws: Vec<Draw> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let codebooks: Vec<Vec<usize>> =
                (0..k).map(|_| (0..m).map(|_| weights.sample(&mut rng)).collect()).collect();
            evaluate(&outputs, target.matrix(), codebooks)
        })
        .collect::<Result<_>>()?;
    let mean_reliability = draws.iter().map(|d| d.reliability).sum::<f64>() / trials as f64;
    let mean_distance = draws.iter().map(|d| d.distance).sum::<f64>() / trials as f64;
    let best = draws
        .into_iter()
        .reduce(|a, b| if b.distance < a.distance { b } else { a })
        .expect("trials > 0");
    Ok(ResolvabilityCode {
        m,
        k,
        codebooks: best.codebooks,
        decoders: best.decoders,
        reliability: best.reliability,
        distance: best.distance,
        mean_reliability,
        mean_distance,
        trials,
    })
}

fn evaluate(outputs: &[Mat], target: &Mat, codebooks: Vec<Vec<usize>>) -> Result<Draw> {
    let m = codebooks[0].len();
    let k = codebooks.len();
    let mut decoders = Vec::with_capacity(k);
    let mut hits = 0.0;
    let mut used = Vec::with_capacity(m * k);
    for book in &codebooks {
        let states: Vec<Mat> = book.iter().map(|&x| outputs[x].clone()).collect();
        let povm = pretty_good_measurement(&states)?;
        for (w, s) in states.iter().enumerate() {
            hits += expectation(povm.elements()[w].matrix(), s);
        }
        used.extend(states);
        decoders.push(povm);
    }
    let distance = trace_distance(&average(&used), target)?;
    Ok(Draw { codebooks, decoders, reliability: hits / (m * k) as f64, distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Pmf;
    use crate::state::DensityMatrixT;

    #[test]
    fn single_symbol_source_is_exact() {
        let rho = DensityMatrixT::<f64>::basis(2, 0);
        let cq = CqStateT::new(Pmf::uniform(1), vec![rho]).unwrap();
        let code = build_resolvability_code(&cq, 2, 3, 1, 2).unwrap();
        assert!(code.distance < 1e-12);
        assert!((code.reliability - 0.5).abs() < 1e-12);
    }
}
