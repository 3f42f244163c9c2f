//! Pairwise Bell-state measurement on `rho (x) sigma`.
//!
//! Pair `i` couples target qubit `i` with reference qubit `i`. Each pair
//! yields one code: 0 = Phi+, 1 = Phi-, 2 = Psi+, 3 = Psi-. A full outcome is
//! the code string over pairs, indexed base 4 with pair 0 most significant.

use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::Reference;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qmath::{Bipartition, ZERO};
use crate::states::DensityMatrix;

/// Largest register for which the full `4^n` outcome table is built.
pub const MAX_BSM_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] =
        [BellOutcome::PhiPlus, BellOutcome::PhiMinus, BellOutcome::PsiPlus, BellOutcome::PsiMinus];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Parse(format!("Bell outcome code {code} not in 0..=3")))
    }

    /// Outcome with the Phi/Psi sign flipped (Phi+ <-> Phi-, Psi+ <-> Psi-).
    pub fn sign_partner(self) -> Self {
        Self::ALL[(self.code() ^ 1) as usize]
    }
}

/// `+1` except `-1` on Psi-: the eigenvalue of SWAP.
#[inline]
fn swap_sign(code: u8) -> f64 {
    if code == 3 {
        -1.0
    } else {
        1.0
    }
}

/// Per-shot estimator of `Tr[(rho (x) sigma)(Phi+_A (x) S_B)]`:
/// `prod_A 2 [r = Phi+] * prod_B (1 - 2 [r = Psi-])`.
pub fn estimator_weight(codes: &[u8], bipartition: &Bipartition) -> f64 {
    let mut w = 1.0;
    for (q, &r) in codes.iter().enumerate() {
        if bipartition.contains_a(q) {
            if r != 0 {
                return 0.0;
            }
            w *= 2.0;
        } else {
            w *= swap_sign(r);
        }
    }
    w
}

/// Per-shot estimator of `Tr(rho_A^2) - Tr(rho^2)` from two copies of `rho`.
pub fn purity_swap_weight(codes: &[u8], bipartition: &Bipartition) -> f64 {
    let (mut sa, mut sb) = (1.0, 1.0);
    for (q, &r) in codes.iter().enumerate() {
        if bipartition.contains_a(q) {
            sa *= swap_sign(r);
        } else {
            sb *= swap_sign(r);
        }
    }
    sa * (1.0 - sb)
}

/// Per-shot estimator of `alpha - <psi|rho|psi>` from `rho (x) psi`.
pub fn fidelity_swap_weight(codes: &[u8], alpha: f64) -> f64 {
    alpha - codes.iter().map(|&r| swap_sign(r)).product::<f64>()
}

fn decode(index: usize, n: usize, out: &mut [u8]) {
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        *slot = ((index >> (2 * (n - 1 - i))) & 3) as u8;
    }
}

fn encode(codes: &[u8]) -> usize {
    codes.iter().fold(0, |acc, &r| (acc << 2) | r as usize)
}

/// Outcome distribution `p(r) = <B_r|(rho (x) sigma)|B_r>` over all `4^n` code strings.
pub fn bell_distribution<'a>(rho: &DensityMatrix, sigma: impl Into<Reference<'a>>) -> Result<Vec<f64>> {
    bell_distribution_with(Execution::Parallel, rho, sigma)
}

/// [`bell_distribution`] with explicit execution mode.
///
/// Uses `|B_r> = (I (x) W_r)|Phi+>` with `W` in `{I, Z, X, XZ}`, giving
/// `p(r) = 2^-n Tr[rho W_r sigma^T W_r^dag]`. Each `W_r` is a signed bit flip.
pub fn bell_distribution_with<'a>(
    exec: Execution,
    rho: &DensityMatrix,
    sigma: impl Into<Reference<'a>>,
) -> Result<Vec<f64>> {
    let sigma = sigma.into();
    let n = rho.n_qubits();
    if sigma.n_qubits() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n}-qubit target with {}-qubit reference",
            sigma.n_qubits()
        )));
    }
    if n > MAX_BSM_QUBITS {
        return Err(Error::SizeLimit(format!("Bell distribution over {n} pairs exceeds {MAX_BSM_QUBITS}")));
    }
    let s = sigma.to_matrix();
    let r = rho.matrix();
    let d = 1usize << n;
    let scale = 1.0 / d as f64;
    let mut probs = par::map_indexed(exec, 1 << (2 * n), |idx| {
        let (mut flip, mut phase) = (0usize, 0usize);
        for i in 0..n {
            let code = (idx >> (2 * (n - 1 - i))) & 3;
            let bit = 1 << (n - 1 - i);
            if code == 2 || code == 3 {
                flip |= bit;
            }
            if code == 1 || code == 3 {
                phase |= bit;
            }
        }
        let mut acc = ZERO;
        for a in 0..d {
            let af = a ^ flip;
            let sa = ((af & phase).count_ones() & 1) as i32;
            for b in 0..d {
                let rba = r[(b, a)];
                if rba == ZERO {
                    continue;
                }
                let bf = b ^ flip;
                let sign = if (sa + ((bf & phase).count_ones() & 1) as i32) % 2 == 0 { 1.0 } else { -1.0 };
                acc += rba * s[(bf, af)] * sign;
            }
        }
        acc.re * scale
    });
    for p in probs.iter_mut() {
        if *p < -1e-10 {
            return Err(Error::invariant("nonnegative_probability", format!("p = {p}")));
        }
        *p = p.max(0.0);
    }
    Ok(probs)
}

/// Imperfect two-photon interference on each pair: with probability
/// `(1 - V)/2` the sign of the Bell outcome is misread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityModel {
    pub visibilities: Vec<f64>,
}

impl VisibilityModel {
    pub fn new(visibilities: Vec<f64>) -> Result<Self> {
        let m = Self { visibilities };
        m.validate()?;
        Ok(m)
    }

    pub fn perfect(n: usize) -> Self {
        Self { visibilities: vec![1.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        for &v in &self.visibilities {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invariant("visibility_range", format!("visibility {v}")));
            }
        }
        Ok(())
    }
}

/// Distribution after the per-pair sign confusion of `model`.
pub fn apply_visibility(dist: &[f64], model: &VisibilityModel) -> Result<Vec<f64>> {
    model.validate()?;
    let n = model.visibilities.len();
    if dist.len() != 1 << (2 * n) {
        return Err(Error::DimensionMismatch(format!("{} outcomes for {n} pairs", dist.len())));
    }
    let mut out = dist.to_vec();
    for (i, &v) in model.visibilities.iter().enumerate() {
        let keep = (1.0 + v) / 2.0;
        let swap = (1.0 - v) / 2.0;
        let bit = 1usize << (2 * (n - 1 - i));
        for idx in 0..out.len() {
            if idx & bit == 0 {
                let (a, b) = (out[idx], out[idx | bit]);
                out[idx] = keep * a + swap * b;
                out[idx | bit] = swap * a + keep * b;
            }
        }
    }
    Ok(out)
}

/// `sum_r p(r) w(r)`: the noiseless-limit value of the iPPT estimator.
pub fn expected_ippt(dist: &[f64], bipartition: &Bipartition) -> f64 {
    let n = bipartition.n_qubits();
    let mut codes = vec![0u8; n];
    dist.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(idx, &p)| {
            decode(idx, n, &mut codes);
            p * estimator_weight(&codes, bipartition)
        })
        .sum()
}

/// Recorded Bell-measurement outcomes, one code string per shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShotRecordRepr", into = "ShotRecordRepr")]
pub struct ShotRecord {
    n_pairs: usize,
    codes: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShotRecordRepr {
    n_pairs: usize,
    shots: Vec<Vec<u8>>,
}

impl TryFrom<ShotRecordRepr> for ShotRecord {
    type Error = Error;

    fn try_from(r: ShotRecordRepr) -> Result<Self> {
        ShotRecord::from_shots(r.n_pairs, r.shots)
    }
}

impl From<ShotRecord> for ShotRecordRepr {
    fn from(r: ShotRecord) -> Self {
        ShotRecordRepr { n_pairs: r.n_pairs, shots: r.iter().map(<[u8]>::to_vec).collect() }
    }
}

impl ShotRecord {
    pub fn from_shots(n_pairs: usize, shots: Vec<Vec<u8>>) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::InvalidArgument("shot record needs at least one pair".into()));
        }
        let mut codes = Vec::with_capacity(n_pairs * shots.len());
        for (i, s) in shots.iter().enumerate() {
            if s.len() != n_pairs {
                return Err(Error::DimensionMismatch(format!(
                    "shot {i} has {} codes, expected {n_pairs}",
                    s.len()
                )));
            }
            for &c in s {
                BellOutcome::from_code(c)?;
            }
            codes.extend_from_slice(s);
        }
        Ok(Self { n_pairs, codes })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn len(&self) -> usize {
        self.codes.len() / self.n_pairs
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn shot(&self, i: usize) -> &[u8] {
        &self.codes[i * self.n_pairs..(i + 1) * self.n_pairs]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.codes.chunks_exact(self.n_pairs)
    }

    /// Occurrences of every outcome index.
    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; 1 << (2 * self.n_pairs)];
        for s in self.iter() {
            c[encode(s)] += 1;
        }
        c
    }

    /// CSV with a `pair_i` header and one row of codes per shot.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record((0..self.n_pairs).map(|i| format!("pair_{i}")))?;
        for s in self.iter() {
            wr.write_record(s.iter().map(|c| c.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let n_pairs = rd.headers()?.len();
        let mut shots = Vec::new();
        for row in rd.records() {
            let row = row?;
            let codes = row
                .iter()
                .map(|f| f.trim().parse::<u8>().map_err(|e| Error::Parse(format!("code `{f}`: {e}"))))
                .collect::<Result<Vec<u8>>>()?;
            shots.push(codes);
        }
        Self::from_shots(n_pairs, shots)
    }

    /// Saves as CSV or JSON according to the extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if is_json(path) {
            fs::write(path, serde_json::to_string(self)?)?;
        } else {
            self.write_csv(fs::File::create(path)?)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if is_json(path) {
            Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
        } else {
            Self::read_csv(fs::File::open(path)?)
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Draws `shots` outcomes from `dist`.
pub fn sample_shots<R: Rng + ?Sized>(
    dist: &[f64],
    n_pairs: usize,
    shots: usize,
    rng: &mut R,
) -> Result<ShotRecord> {
    if dist.len() != 1 << (2 * n_pairs) {
        return Err(Error::DimensionMismatch(format!("{} outcomes for {n_pairs} pairs", dist.len())));
    }
    let sampler =
        WeightedIndex::new(dist).map_err(|e| Error::invariant("valid_distribution", e.to_string()))?;
    let mut codes = vec![0u8; n_pairs * shots];
    for chunk in codes.chunks_exact_mut(n_pairs) {
        decode(sampler.sample(rng), n_pairs, chunk);
    }
    Ok(ShotRecord { n_pairs, codes })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub shots: usize,
}

/// Mean and standard error of a per-shot weight.
pub fn estimate_with(record: &ShotRecord, weight: impl Fn(&[u8]) -> f64) -> Result<Estimate> {
    let n = record.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no shots recorded".into()));
    }
    let ws: Vec<f64> = record.iter().map(weight).collect();
    let mean = ws.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(Estimate { mean, stderr, shots: n })
}

/// iPPT estimate from recorded shots.
pub fn estimate_ippt(record: &ShotRecord, bipartition: &Bipartition) -> Result<Estimate> {
    if record.n_pairs() != bipartition.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{} pairs for a {}-qubit bipartition",
            record.n_pairs(),
            bipartition.n_qubits()
        )));
    }
    estimate_with(record, |s| estimator_weight(s, bipartition))
}

/// Shot budget and detector model for simulated measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSettings {
    pub shots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilityModel>,
}

impl ShotSettings {
    pub fn validate(&self, n_pairs: usize) -> Result<()> {
        if self.shots < 2 {
            return Err(Error::InvalidArgument("at least two shots are needed for an error bar".into()));
        }
        if let Some(v) = &self.visibility {
            v.validate()?;
            if v.visibilities.len() != n_pairs {
                return Err(Error::DimensionMismatch(format!(
                    "{} visibilities for {n_pairs} pairs",
                    v.visibilities.len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::ippt_value;
    use crate::qmath::{
        gates, haar_random_pure, kron_vec, random_induced_mixed, tensor_product, ComplexMatrix, C64,
    };
    use crate::rng::Stream;
    use crate::states::{ghz, PureState};

    fn split(s: &str) -> Bipartition {
        s.parse().unwrap()
    }

    /// `|B_r>` on the 2n-qubit register (rho slots, sigma slots), built from
    /// explicit two-qubit Bell vectors and a qubit permutation.
    fn bell_vector(codes: &[u8]) -> Vec<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let pair = |c: u8| -> Vec<C64> {
            let v = match c {
                0 => [h, 0.0, 0.0, h],
                1 => [h, 0.0, 0.0, -h],
                2 => [0.0, h, h, 0.0],
                _ => [0.0, h, -h, 0.0],
            };
            v.iter().map(|&x| C64::new(x, 0.0)).collect()
        };
        let n = codes.len();
        let mut pairs_order = vec![C64::new(1.0, 0.0)];
        for &c in codes {
            pairs_order = kron_vec(&pairs_order, &pair(c));
        }
        // pairs_order slots: (r0, s0, r1, s1, ...); permute to (r0..rn-1, s0..sn-1)
        let mut out = vec![ZERO; pairs_order.len()];
        for (idx, amp) in pairs_order.iter().enumerate() {
            let mut target = 0usize;
            for i in 0..n {
                let r = (idx >> (2 * n - 1 - 2 * i)) & 1;
                let s = (idx >> (2 * n - 2 - 2 * i)) & 1;
                target |= r << (2 * n - 1 - i);
                target |= s << (n - 1 - i);
            }
            out[target] = *amp;
        }
        out
    }

    fn brute_force(rho: &DensityMatrix, sigma: &ComplexMatrix) -> Vec<f64> {
        let n = rho.n_qubits();
        let joint = tensor_product(rho.matrix(), sigma);
        let mut codes = vec![0u8; n];
        (0..1 << (2 * n))
            .map(|idx| {
                decode(idx, n, &mut codes);
                joint.expectation(&bell_vector(&codes)).re
            })
            .collect()
    }

    #[test]
    fn bell_vectors_match_named_states() {
        let phi = ghz(2, false, 1.0).unwrap();
        let b = bell_vector(&[0]);
        assert!(b.iter().zip(phi.amplitudes()).all(|(a, c)| (a - c).norm() < 1e-15));
        let psi_minus = gates::psi_minus_unnormalized().scale_real(0.5);
        let b3 = bell_vector(&[3]);
        assert!((psi_minus.expectation(&b3).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_matches_brute_force() {
        let root = Stream::new(21);
        for i in 0..12u64 {
            let mut rng = root.child(i).rng();
            let n = 1 + (i as usize % 2);
            let rho = random_induced_mixed(n, 2, &mut rng);
            let sigma = random_induced_mixed(n, 1 + (i as usize % 3), &mut rng);
            let fast = bell_distribution(&rho, &sigma).unwrap();
            let slow = brute_force(&rho, sigma.matrix());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            assert!((fast.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_pair_on_itself() {
        let phi = ghz(2, false, 1.0).unwrap();
        let dist = bell_distribution(&phi.to_density(), &phi).unwrap();
        let bip = split("0/1");
        assert!((expected_ippt(&dist, &bip) - 0.5).abs() < 1e-12);
        // single pair on |0>|0>: Phi+ and Phi- each with probability 1/2
        let z = PureState::basis(2, 0).unwrap();
        let d = bell_distribution(&z.to_density(), &z).unwrap();
        assert!((d[0] - 0.25).abs() < 1e-12 && (d[0b0101] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn expected_weight_is_ippt() {
        let mut rng = Stream::new(5).rng();
        for spec in ["0/12", "1/02", "01/2"] {
            let bip = split(spec);
            let rho = random_induced_mixed(3, 2, &mut rng);
            let psi = haar_random_pure(3, &mut rng);
            let dist = bell_distribution(&rho, &psi).unwrap();
            let exact = ippt_value(&rho, &psi, &bip).unwrap();
            assert!((expected_ippt(&dist, &bip) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_weights_estimate_purity_and_fidelity() {
        let mut rng = Stream::new(6).rng();
        let bip = split("0/12");
        let rho = random_induced_mixed(3, 3, &mut rng);
        let dist = bell_distribution(&rho, &rho).unwrap();
        let mut codes = vec![0u8; 3];
        let purity: f64 = dist
            .iter()
            .enumerate()
            .map(|(i, p)| {
                decode(i, 3, &mut codes);
                p * purity_swap_weight(&codes, &bip)
            })
            .sum();
        let exact = crate::detection::purity_criterion(&rho, &bip).unwrap();
        assert!((purity - exact).abs() < 1e-12);

        let psi = haar_random_pure(3, &mut rng);
        let dist = bell_distribution(&rho, &psi).unwrap();
        let alpha = 0.7;
        let fid: f64 = dist
            .iter()
            .enumerate()
            .map(|(i, p)| {
                decode(i, 3, &mut codes);
                p * fidelity_swap_weight(&codes, alpha)
            })
            .sum();
        assert!((fid - (alpha - rho.fidelity_with(&psi).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn serial_equals_parallel() {
        let mut rng = Stream::new(7).rng();
        let rho = random_induced_mixed(3, 2, &mut rng);
        let psi = haar_random_pure(3, &mut rng);
        let a = bell_distribution_with(Execution::Serial, &rho, &psi).unwrap();
        let b = bell_distribution_with(Execution::Parallel, &rho, &psi).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn visibility_is_stochastic_and_scales_coherence() {
        let phi = ghz(2, false, 1.0).unwrap();
        let dist = bell_distribution(&phi.to_density(), &phi).unwrap();
        let v = VisibilityModel::new(vec![0.8, 1.0]).unwrap();
        let out = apply_visibility(&dist, &v).unwrap();
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(out.iter().all(|&p| p >= 0.0));
        assert_eq!(apply_visibility(&dist, &VisibilityModel::perfect(2)).unwrap(), dist);
        assert!(VisibilityModel::new(vec![1.2]).is_err());
        assert!(apply_visibility(&dist, &VisibilityModel::perfect(3)).is_err());
    }

    #[test]
    fn weights_on_fixed_codes() {
        let bip = split("0/12");
        assert_eq!(estimator_weight(&[0, 0, 0], &bip), 2.0);
        assert_eq!(estimator_weight(&[1, 0, 0], &bip), 0.0);
        assert_eq!(estimator_weight(&[0, 3, 0], &bip), -2.0);
        assert_eq!(estimator_weight(&[0, 3, 3], &bip), 2.0);
        assert_eq!(purity_swap_weight(&[3, 3, 0], &bip), -2.0);
        assert_eq!(purity_swap_weight(&[0, 0, 0], &bip), 0.0);
        assert_eq!(fidelity_swap_weight(&[3, 0], 0.5), 1.5);
        assert_eq!(BellOutcome::PhiPlus.sign_partner(), BellOutcome::PhiMinus);
        assert_eq!(BellOutcome::PsiMinus.sign_partner(), BellOutcome::PsiPlus);
    }

    /// Upper tail of chi-square via the Wilson-Hilferty normal approximation.
    fn chi_square_critical(df: f64, z: f64) -> f64 {
        let h = 2.0 / (9.0 * df);
        df * (1.0 - h + z * h.sqrt()).powi(3)
    }

    #[test]
    fn sampled_counts_pass_chi_square() {
        let mut rng = Stream::new(8).rng();
        let rho = random_induced_mixed(2, 2, &mut rng);
        let psi = haar_random_pure(2, &mut rng);
        let dist = bell_distribution(&rho, &psi).unwrap();
        let shots = 200_000;
        let rec = sample_shots(&dist, 2, shots, &mut rng).unwrap();
        let counts = rec.counts();
        let mut chi2 = 0.0;
        let mut df = -1.0;
        for (c, p) in counts.iter().zip(&dist) {
            let e = p * shots as f64;
            if e > 5.0 {
                chi2 += (*c as f64 - e).powi(2) / e;
                df += 1.0;
            }
        }
        // z = 3.09 is the 0.999 quantile
        assert!(chi2 < chi_square_critical(df, 3.09), "chi2 {chi2} df {df}");
    }

    #[test]
    fn stderr_scales_as_inverse_root_shots() {
        let phi = ghz(2, false, 1.0).unwrap();
        let mixed = DensityMatrix::mixture(&[
            (0.5, &phi.to_density()),
            (0.5, &DensityMatrix::maximally_mixed(2).unwrap()),
        ])
        .unwrap();
        let dist = bell_distribution(&mixed, &phi).unwrap();
        let bip = split("0/1");
        let mut rng = Stream::new(9).rng();
        let small = estimate_ippt(&sample_shots(&dist, 2, 10_000, &mut rng).unwrap(), &bip).unwrap();
        let large = estimate_ippt(&sample_shots(&dist, 2, 160_000, &mut rng).unwrap(), &bip).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = ShotRecord::from_shots(3, vec![vec![0, 1, 2], vec![3, 3, 0]]).unwrap();
        for name in ["shots.csv", "shots.json"] {
            let path = dir.path().join(name);
            rec.save(&path).unwrap();
            assert_eq!(ShotRecord::load(&path).unwrap(), rec);
        }
        let text = {
            let mut buf = Vec::new();
            rec.write_csv(&mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        assert_eq!(text, "pair_0,pair_1,pair_2\n0,1,2\n3,3,0\n");
        assert!(ShotRecord::read_csv("pair_0\n4\n".as_bytes()).is_err());
        assert!(ShotRecord::from_shots(2, vec![vec![0]]).is_err());
    }

    #[test]
    fn size_limits() {
        let rho = DensityMatrix::maximally_mixed(7).unwrap();
        assert!(matches!(bell_distribution(&rho, &rho), Err(Error::SizeLimit(_))));
        let z = PureState::basis(2, 0).unwrap();
        assert!(bell_distribution(&DensityMatrix::maximally_mixed(3).unwrap(), &z).is_err());
    }
}
